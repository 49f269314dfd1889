#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sepdfa {

using StateId = int;
using SymbolId = int;
using Word = std::vector<SymbolId>;

/// Final-state value of a labeled state ('+' or '-').
enum class Label : std::uint8_t { accept, reject };

/// Finite indexed alphabet with optional display names for DOT output.
struct Alphabet {
    int size = 0;
    std::vector<std::string> names;  // empty, or one name per symbol

    Alphabet() = default;
    explicit Alphabet(int k);
    Alphabet(int k, std::vector<std::string> display_names);

    /// a, b, c, ... (k <= 26)
    static Alphabet lettered(int k);
    /// 0, 1, 2, ...
    static Alphabet indexed(int k);

    std::string symbol_name(SymbolId a) const;
};

struct Transition {
    StateId src;
    SymbolId sym;
    StateId dst;

    friend auto operator<=>(const Transition&, const Transition&) = default;
};

/// Total map from the states of one automaton to the states of another.
struct StateMap {
    std::vector<StateId> to;

    StateId operator()(StateId q) const { return to[static_cast<std::size_t>(q)]; }
    static StateMap identity(int num_states);
};

/// Finite automaton whose states are accepting, rejecting, or unlabeled,
/// with a (possibly nondeterministic, possibly partial) transition relation.
/// States are dense ids 0..num_states-1; iteration follows id order.
class ThreeNfa {
public:
    ThreeNfa() = default;
    ThreeNfa(int num_states, int num_symbols, StateId initial);

    int num_states() const { return num_states_; }
    int num_symbols() const { return num_symbols_; }
    StateId initial() const { return initial_; }

    std::optional<Label> label(StateId q) const;
    void set_label(StateId q, Label l);
    void clear_label(StateId q);

    void add_transition(StateId src, SymbolId sym, StateId dst);
    bool has_transition(StateId src, SymbolId sym, StateId dst) const;
    const std::vector<Transition>& transitions() const { return transitions_; }

    /// Transitions leaving (q, a), sorted by target.
    std::span<const Transition> out(StateId q, SymbolId a) const;
    /// Sorted targets of (q, a).
    std::vector<StateId> successors(StateId q, SymbolId a) const;

    bool deterministic() const;
    /// Total labeling and at least one successor per (state, symbol).
    bool complete() const;

    friend bool operator==(const ThreeNfa&, const ThreeNfa&) = default;

private:
    void check_state(StateId q) const;
    void check_symbol(SymbolId a) const;

    int num_states_ = 0;
    int num_symbols_ = 0;
    StateId initial_ = 0;
    std::vector<std::optional<Label>> labels_;
    std::vector<Transition> transitions_;  // sorted, unique
};

/// Deterministic, complete automaton with a total labeling; the only type
/// accepted where hypotheses and teacher languages are required.
class CompleteDfa {
public:
    /// Throws std::invalid_argument unless `a` is deterministic and complete.
    explicit CompleteDfa(ThreeNfa a);

    const ThreeNfa& inner() const { return inner_; }
    int num_states() const { return inner_.num_states(); }
    int num_symbols() const { return inner_.num_symbols(); }
    StateId initial() const { return inner_.initial(); }

    StateId step(StateId q, SymbolId a) const;
    StateId run(StateId from, const Word& w) const;
    Label state_label(StateId q) const;

    Label classify(const Word& w) const;
    bool accepts(const Word& w) const { return classify(w) == Label::accept; }

    friend bool operator==(const CompleteDfa&, const CompleteDfa&) = default;

private:
    ThreeNfa inner_;
    std::vector<StateId> step_;  // num_states * num_symbols
};

/// States reachable from `a`'s initial state, in BFS discovery order
/// (symbols in index order).
std::vector<StateId> reachable_states(const ThreeNfa& a);

/// All states q' with from =w=> q', sorted by id.
std::vector<StateId> run_word(const ThreeNfa& a, StateId from, const Word& w);

/// Both labels defined and different.
bool conflicting(const ThreeNfa& a, StateId p, StateId q);

/// f preserves the initial state, defined labels, and all transitions.
/// Throws std::invalid_argument if f is not total on a's states.
bool check_morphism(const ThreeNfa& a, const ThreeNfa& b, const StateMap& f);

/// Identifies q with p (p, q distinct and nonconflicting). Returns the merged
/// automaton, states renumbered densely, together with the map sending every
/// old state to its image. The map is always a morphism onto the result.
std::pair<ThreeNfa, StateMap> merge(const ThreeNfa& a, StateId p, StateId q);

struct SdResult {
    bool determinizable;
    ThreeNfa residual;
};

/// Repeatedly merges distinct nonconflicting targets of a shared
/// (state, symbol) pair until none remain; the automaton admits a morphism
/// into some deterministic automaton iff the residual is deterministic.
/// The verdict does not depend on merge order; the default order picks the
/// lowest-numbered nondeterministic source, then the two lowest targets.
SdResult strongly_determinizable(const ThreeNfa& a);
/// Same decision with randomized merge choices (for order-invariance checks).
SdResult strongly_determinizable(const ThreeNfa& a, std::uint64_t seed);

/// Some morphism into a deterministic automaton maps p and q together.
/// Throws std::invalid_argument when p == q.
bool compatible(const ThreeNfa& a, StateId p, StateId q);

enum class ProductMode {
    both_accept,                    // L1 ∩ L2
    first_accepts_second_rejects,   // L1 \ L2
};

/// Reachable product automaton; accepting per mode. Throws on alphabet mismatch.
CompleteDfa product_intersection(const CompleteDfa& d1, const CompleteDfa& d2,
                                 ProductMode mode);

/// Shortest accepted word, ties broken lexicographically by symbol index;
/// nullopt iff the language is empty.
std::optional<Word> shortest_word(const CompleteDfa& d);

bool language_empty(const CompleteDfa& d);

/// Hopcroft-style reachable quotient; states renumbered in BFS order.
CompleteDfa minimize(const CompleteDfa& d);

/// Seeded random complete DFA: uniform transition targets and labels,
/// resampled until every state is reachable and the automaton is minimal.
CompleteDfa random_dfa(int num_states, int num_symbols, std::uint64_t seed);

/// Raised on malformed textual input.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Line-oriented text format:
///   3nfa <num_states> <num_symbols>
///   initial <id>
///   label <id> +|-
///   trans <src> <symbol-index> <dst>
/// '#' starts a comment line. The writer emits lines sorted by (kind, ids).
std::string write_automaton_text(const ThreeNfa& a);
ThreeNfa parse_automaton_text(std::istream& in);
ThreeNfa parse_automaton_text(const std::string& text);
ThreeNfa load_automaton_file(const std::string& path);
void save_automaton_file(const ThreeNfa& a, const std::string& path);

/// DOT export: accepting states doublecircle, rejecting circle, unlabeled dashed.
std::string write_dot(const ThreeNfa& a, const Alphabet& alphabet = {});

}  // namespace sepdfa
