#include "sepdfa/automata.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace sepdfa {

Alphabet::Alphabet(int k) : size(k) {}

Alphabet::Alphabet(int k, std::vector<std::string> display_names)
    : size(k), names(std::move(display_names)) {
    if (!names.empty() && static_cast<int>(names.size()) != size)
        throw std::invalid_argument("alphabet: name count differs from size");
}

Alphabet Alphabet::lettered(int k) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        if (i < 26)
            names.push_back(std::string(1, static_cast<char>('a' + i)));
        else
            names.push_back("x" + std::to_string(i));
    }
    return Alphabet(k, std::move(names));
}

Alphabet Alphabet::indexed(int k) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) names.push_back(std::to_string(i));
    return Alphabet(k, std::move(names));
}

std::string Alphabet::symbol_name(SymbolId a) const {
    if (a < 0 || (size > 0 && a >= size))
        throw std::invalid_argument("alphabet: symbol out of range");
    if (!names.empty()) return names[static_cast<std::size_t>(a)];
    return std::to_string(a);
}

StateMap StateMap::identity(int num_states) {
    StateMap f;
    f.to.resize(static_cast<std::size_t>(num_states));
    for (int q = 0; q < num_states; ++q) f.to[static_cast<std::size_t>(q)] = q;
    return f;
}

ThreeNfa::ThreeNfa(int num_states, int num_symbols, StateId initial)
    : num_states_(num_states), num_symbols_(num_symbols), initial_(initial) {
    if (num_states < 1) throw std::invalid_argument("automaton needs at least one state");
    if (num_symbols < 1) throw std::invalid_argument("automaton needs at least one symbol");
    if (initial < 0 || initial >= num_states)
        throw std::invalid_argument("initial state out of range");
    labels_.resize(static_cast<std::size_t>(num_states));
}

void ThreeNfa::check_state(StateId q) const {
    if (q < 0 || q >= num_states_) throw std::invalid_argument("state out of range");
}

void ThreeNfa::check_symbol(SymbolId a) const {
    if (a < 0 || a >= num_symbols_) throw std::invalid_argument("symbol out of range");
}

std::optional<Label> ThreeNfa::label(StateId q) const {
    check_state(q);
    return labels_[static_cast<std::size_t>(q)];
}

void ThreeNfa::set_label(StateId q, Label l) {
    check_state(q);
    labels_[static_cast<std::size_t>(q)] = l;
}

void ThreeNfa::clear_label(StateId q) {
    check_state(q);
    labels_[static_cast<std::size_t>(q)].reset();
}

void ThreeNfa::add_transition(StateId src, SymbolId sym, StateId dst) {
    check_state(src);
    check_state(dst);
    check_symbol(sym);
    Transition t{src, sym, dst};
    auto it = std::lower_bound(transitions_.begin(), transitions_.end(), t);
    if (it != transitions_.end() && *it == t) return;
    transitions_.insert(it, t);
}

bool ThreeNfa::has_transition(StateId src, SymbolId sym, StateId dst) const {
    Transition t{src, sym, dst};
    return std::binary_search(transitions_.begin(), transitions_.end(), t);
}

std::span<const Transition> ThreeNfa::out(StateId q, SymbolId a) const {
    check_state(q);
    check_symbol(a);
    auto lo = std::lower_bound(transitions_.begin(), transitions_.end(),
                               Transition{q, a, std::numeric_limits<StateId>::min()});
    auto hi = std::upper_bound(lo, transitions_.end(),
                               Transition{q, a, std::numeric_limits<StateId>::max()});
    return {lo, hi};
}

std::vector<StateId> ThreeNfa::successors(StateId q, SymbolId a) const {
    std::vector<StateId> res;
    for (const Transition& t : out(q, a)) res.push_back(t.dst);
    return res;
}

bool ThreeNfa::deterministic() const {
    for (std::size_t i = 1; i < transitions_.size(); ++i)
        if (transitions_[i - 1].src == transitions_[i].src &&
            transitions_[i - 1].sym == transitions_[i].sym)
            return false;
    return true;
}

bool ThreeNfa::complete() const {
    for (StateId q = 0; q < num_states_; ++q) {
        if (!labels_[static_cast<std::size_t>(q)]) return false;
        for (SymbolId a = 0; a < num_symbols_; ++a)
            if (out(q, a).empty()) return false;
    }
    return true;
}

CompleteDfa::CompleteDfa(ThreeNfa a) : inner_(std::move(a)) {
    if (!inner_.deterministic())
        throw std::invalid_argument("complete dfa: automaton is nondeterministic");
    if (!inner_.complete())
        throw std::invalid_argument("complete dfa: missing labels or transitions");
    step_.resize(static_cast<std::size_t>(inner_.num_states()) *
                 static_cast<std::size_t>(inner_.num_symbols()));
    for (StateId q = 0; q < inner_.num_states(); ++q)
        for (SymbolId x = 0; x < inner_.num_symbols(); ++x)
            step_[static_cast<std::size_t>(q) * inner_.num_symbols() + x] =
                inner_.out(q, x).front().dst;
}

StateId CompleteDfa::step(StateId q, SymbolId a) const {
    if (q < 0 || q >= num_states()) throw std::invalid_argument("state out of range");
    if (a < 0 || a >= num_symbols()) throw std::invalid_argument("symbol out of range");
    return step_[static_cast<std::size_t>(q) * num_symbols() + a];
}

StateId CompleteDfa::run(StateId from, const Word& w) const {
    StateId q = from;
    for (SymbolId a : w) q = step(q, a);
    return q;
}

Label CompleteDfa::state_label(StateId q) const { return *inner_.label(q); }

Label CompleteDfa::classify(const Word& w) const { return state_label(run(initial(), w)); }

std::vector<StateId> reachable_states(const ThreeNfa& a) {
    std::vector<bool> seen(static_cast<std::size_t>(a.num_states()), false);
    std::vector<StateId> order;
    std::deque<StateId> queue{a.initial()};
    seen[static_cast<std::size_t>(a.initial())] = true;
    while (!queue.empty()) {
        StateId q = queue.front();
        queue.pop_front();
        order.push_back(q);
        for (SymbolId x = 0; x < a.num_symbols(); ++x)
            for (const Transition& t : a.out(q, x))
                if (!seen[static_cast<std::size_t>(t.dst)]) {
                    seen[static_cast<std::size_t>(t.dst)] = true;
                    queue.push_back(t.dst);
                }
    }
    return order;
}

std::vector<StateId> run_word(const ThreeNfa& a, StateId from, const Word& w) {
    if (from < 0 || from >= a.num_states())
        throw std::invalid_argument("state out of range");
    std::vector<StateId> cur{from};
    for (SymbolId x : w) {
        std::vector<StateId> next;
        for (StateId q : cur)
            for (const Transition& t : a.out(q, x)) next.push_back(t.dst);
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        cur = std::move(next);
        if (cur.empty()) break;
    }
    return cur;
}

bool conflicting(const ThreeNfa& a, StateId p, StateId q) {
    auto lp = a.label(p);
    auto lq = a.label(q);
    return lp && lq && *lp != *lq;
}

bool check_morphism(const ThreeNfa& a, const ThreeNfa& b, const StateMap& f) {
    if (static_cast<int>(f.to.size()) != a.num_states())
        throw std::invalid_argument("morphism: map not total on source states");
    for (StateId img : f.to)
        if (img < 0 || img >= b.num_states())
            throw std::invalid_argument("morphism: image out of range");
    if (a.num_symbols() != b.num_symbols())
        throw std::invalid_argument("morphism: alphabet size mismatch");
    if (f(a.initial()) != b.initial()) return false;
    for (StateId q = 0; q < a.num_states(); ++q) {
        auto la = a.label(q);
        if (!la) continue;
        auto lb = b.label(f(q));
        if (!lb || *lb != *la) return false;
    }
    for (const Transition& t : a.transitions())
        if (!b.has_transition(f(t.src), t.sym, f(t.dst))) return false;
    return true;
}

std::pair<ThreeNfa, StateMap> merge(const ThreeNfa& a, StateId p, StateId q) {
    if (p < 0 || p >= a.num_states() || q < 0 || q >= a.num_states())
        throw std::invalid_argument("merge: state out of range");
    if (p == q) throw std::invalid_argument("merge: states must be distinct");
    if (conflicting(a, p, q)) throw std::invalid_argument("merge: conflicting labels");

    StateMap f;
    f.to.resize(static_cast<std::size_t>(a.num_states()));
    auto renum = [q](StateId r) { return r > q ? r - 1 : r; };
    for (StateId r = 0; r < a.num_states(); ++r)
        f.to[static_cast<std::size_t>(r)] = (r == q) ? renum(p) : renum(r);

    ThreeNfa b(a.num_states() - 1, a.num_symbols(), f(a.initial()));
    for (StateId r = 0; r < a.num_states(); ++r)
        if (auto l = a.label(r)) b.set_label(f(r), *l);
    for (const Transition& t : a.transitions()) b.add_transition(f(t.src), t.sym, f(t.dst));
    return {std::move(b), std::move(f)};
}

namespace {

struct MergeCandidate {
    StateId first;
    StateId second;
};

// All unordered target pairs that share a (state, symbol) source and can be
// merged without a label conflict, in scan order.
std::vector<MergeCandidate> merge_candidates(const ThreeNfa& a) {
    std::vector<MergeCandidate> found;
    for (StateId q = 0; q < a.num_states(); ++q)
        for (SymbolId x = 0; x < a.num_symbols(); ++x) {
            auto succ = a.successors(q, x);
            for (std::size_t i = 0; i + 1 < succ.size(); ++i)
                for (std::size_t j = i + 1; j < succ.size(); ++j)
                    if (!conflicting(a, succ[i], succ[j]))
                        found.push_back({succ[i], succ[j]});
        }
    return found;
}

SdResult run_sd(ThreeNfa a, std::mt19937_64* rng) {
    for (;;) {
        auto cands = merge_candidates(a);
        if (cands.empty()) break;
        std::size_t pick = 0;
        if (rng) pick = static_cast<std::size_t>((*rng)() % cands.size());
        a = merge(a, cands[pick].first, cands[pick].second).first;
    }
    return {a.deterministic(), std::move(a)};
}

}  // namespace

SdResult strongly_determinizable(const ThreeNfa& a) { return run_sd(a, nullptr); }

SdResult strongly_determinizable(const ThreeNfa& a, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return run_sd(a, &rng);
}

bool compatible(const ThreeNfa& a, StateId p, StateId q) {
    if (p == q) throw std::invalid_argument("compatible: states must be distinct");
    if (conflicting(a, p, q)) return false;
    return strongly_determinizable(merge(a, p, q).first).determinizable;
}

CompleteDfa product_intersection(const CompleteDfa& d1, const CompleteDfa& d2,
                                 ProductMode mode) {
    if (d1.num_symbols() != d2.num_symbols())
        throw std::invalid_argument("product: alphabet size mismatch");
    const int n2 = d2.num_states();
    std::vector<int> id(static_cast<std::size_t>(d1.num_states()) * n2, -1);
    std::vector<std::pair<StateId, StateId>> pairs;
    auto intern = [&](StateId p, StateId q) {
        int& slot = id[static_cast<std::size_t>(p) * n2 + q];
        if (slot < 0) {
            slot = static_cast<int>(pairs.size());
            pairs.emplace_back(p, q);
        }
        return slot;
    };
    intern(d1.initial(), d2.initial());
    std::vector<Transition> trans;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto [p, q] = pairs[i];
        for (SymbolId x = 0; x < d1.num_symbols(); ++x)
            trans.push_back({static_cast<StateId>(i), x,
                             intern(d1.step(p, x), d2.step(q, x))});
    }
    ThreeNfa prod(static_cast<int>(pairs.size()), d1.num_symbols(), 0);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto [p, q] = pairs[i];
        bool hit = mode == ProductMode::both_accept
                       ? d1.state_label(p) == Label::accept &&
                             d2.state_label(q) == Label::accept
                       : d1.state_label(p) == Label::accept &&
                             d2.state_label(q) == Label::reject;
        prod.set_label(static_cast<StateId>(i), hit ? Label::accept : Label::reject);
    }
    for (const Transition& t : trans) prod.add_transition(t.src, t.sym, t.dst);
    return CompleteDfa(std::move(prod));
}

std::optional<Word> shortest_word(const CompleteDfa& d) {
    // BFS expanding symbols in index order visits states in length-lex order
    // of their minimal access words, so the first accepting discovery wins.
    if (d.state_label(d.initial()) == Label::accept) return Word{};
    std::vector<std::pair<StateId, SymbolId>> via(
        static_cast<std::size_t>(d.num_states()), {-1, -1});
    std::vector<bool> seen(static_cast<std::size_t>(d.num_states()), false);
    seen[static_cast<std::size_t>(d.initial())] = true;
    std::deque<StateId> queue{d.initial()};
    while (!queue.empty()) {
        StateId q = queue.front();
        queue.pop_front();
        for (SymbolId x = 0; x < d.num_symbols(); ++x) {
            StateId r = d.step(q, x);
            if (seen[static_cast<std::size_t>(r)]) continue;
            seen[static_cast<std::size_t>(r)] = true;
            via[static_cast<std::size_t>(r)] = {q, x};
            if (d.state_label(r) == Label::accept) {
                Word w;
                for (StateId s = r; s != d.initial(); s = via[static_cast<std::size_t>(s)].first)
                    w.push_back(via[static_cast<std::size_t>(s)].second);
                std::reverse(w.begin(), w.end());
                return w;
            }
            queue.push_back(r);
        }
    }
    return std::nullopt;
}

bool language_empty(const CompleteDfa& d) { return !shortest_word(d).has_value(); }

CompleteDfa minimize(const CompleteDfa& d) {
    const std::vector<StateId> reach = reachable_states(d.inner());
    std::vector<int> dense(static_cast<std::size_t>(d.num_states()), -1);
    for (std::size_t i = 0; i < reach.size(); ++i)
        dense[static_cast<std::size_t>(reach[i])] = static_cast<int>(i);
    const int n = static_cast<int>(reach.size());
    const int k = d.num_symbols();

    std::vector<int> cls(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        cls[static_cast<std::size_t>(i)] =
            d.state_label(reach[static_cast<std::size_t>(i)]) == Label::accept ? 0 : 1;

    for (;;) {
        std::map<std::vector<int>, int> sig_to_class;
        std::vector<int> next(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            std::vector<int> sig;
            sig.reserve(static_cast<std::size_t>(k) + 1);
            sig.push_back(cls[static_cast<std::size_t>(i)]);
            for (SymbolId x = 0; x < k; ++x) {
                StateId dst = d.step(reach[static_cast<std::size_t>(i)], x);
                sig.push_back(cls[static_cast<std::size_t>(dense[static_cast<std::size_t>(dst)])]);
            }
            auto [it, inserted] =
                sig_to_class.emplace(std::move(sig), static_cast<int>(sig_to_class.size()));
            next[static_cast<std::size_t>(i)] = it->second;
        }
        bool stable = cls == next;
        cls = std::move(next);
        if (stable) break;
    }

    // Renumber classes in BFS order from the initial state's class.
    const int num_classes = 1 + *std::max_element(cls.begin(), cls.end());
    auto class_of = [&](StateId q) {
        return cls[static_cast<std::size_t>(dense[static_cast<std::size_t>(q)])];
    };
    std::vector<StateId> rep(static_cast<std::size_t>(num_classes), -1);
    for (int i = n - 1; i >= 0; --i)
        rep[static_cast<std::size_t>(cls[static_cast<std::size_t>(i)])] =
            reach[static_cast<std::size_t>(i)];
    std::vector<int> order(static_cast<std::size_t>(num_classes), -1);
    std::deque<int> queue{class_of(d.initial())};
    order[static_cast<std::size_t>(class_of(d.initial()))] = 0;
    int assigned = 1;
    std::vector<Transition> trans;
    while (!queue.empty()) {
        int c = queue.front();
        queue.pop_front();
        for (SymbolId x = 0; x < k; ++x) {
            int t = class_of(d.step(rep[static_cast<std::size_t>(c)], x));
            if (order[static_cast<std::size_t>(t)] < 0) {
                order[static_cast<std::size_t>(t)] = assigned++;
                queue.push_back(t);
            }
            trans.push_back({order[static_cast<std::size_t>(c)], x,
                             order[static_cast<std::size_t>(t)]});
        }
    }

    ThreeNfa quot(assigned, k, 0);
    for (int c = 0; c < num_classes; ++c)
        if (order[static_cast<std::size_t>(c)] >= 0)
            quot.set_label(order[static_cast<std::size_t>(c)],
                           d.state_label(rep[static_cast<std::size_t>(c)]));
    for (const Transition& t : trans) quot.add_transition(t.src, t.sym, t.dst);
    return CompleteDfa(std::move(quot));
}

CompleteDfa random_dfa(int num_states, int num_symbols, std::uint64_t seed) {
    if (num_states < 1 || num_symbols < 1)
        throw std::invalid_argument("random dfa: sizes must be positive");
    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < 1000000; ++attempt) {
        ThreeNfa a(num_states, num_symbols, 0);
        for (StateId q = 0; q < num_states; ++q) {
            a.set_label(q, rng() % 2 == 0 ? Label::accept : Label::reject);
            for (SymbolId x = 0; x < num_symbols; ++x)
                a.add_transition(q, x, static_cast<StateId>(rng() % num_states));
        }
        CompleteDfa d(std::move(a));
        if (static_cast<int>(reachable_states(d.inner()).size()) != num_states) continue;
        if (minimize(d).num_states() != num_states) continue;
        return d;
    }
    throw std::runtime_error("random dfa: no minimal automaton found");
}

std::string write_automaton_text(const ThreeNfa& a) {
    std::ostringstream out;
    out << "3nfa " << a.num_states() << ' ' << a.num_symbols() << '\n';
    out << "initial " << a.initial() << '\n';
    for (StateId q = 0; q < a.num_states(); ++q)
        if (auto l = a.label(q))
            out << "label " << q << ' ' << (*l == Label::accept ? '+' : '-') << '\n';
    for (const Transition& t : a.transitions())
        out << "trans " << t.src << ' ' << t.sym << ' ' << t.dst << '\n';
    return out.str();
}

namespace {

[[noreturn]] void parse_fail(int line, const std::string& what) {
    throw ParseError("line " + std::to_string(line) + ": " + what);
}

}  // namespace

ThreeNfa parse_automaton_text(std::istream& in) {
    int num_states = -1;
    int num_symbols = -1;
    std::optional<StateId> initial;
    std::vector<std::pair<StateId, Label>> labels;
    std::vector<Transition> trans;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw)) continue;
        auto want_int = [&](const char* what) {
            long long v;
            if (!(ls >> v)) parse_fail(lineno, std::string("expected ") + what);
            return static_cast<int>(v);
        };
        if (kw == "3nfa") {
            if (num_states >= 0) parse_fail(lineno, "duplicate header");
            num_states = want_int("state count");
            num_symbols = want_int("symbol count");
            if (num_states < 1 || num_symbols < 1)
                parse_fail(lineno, "state and symbol counts must be positive");
        } else if (num_states < 0) {
            parse_fail(lineno, "expected 3nfa header first");
        } else if (kw == "initial") {
            if (initial) parse_fail(lineno, "duplicate initial");
            int q = want_int("state id");
            if (q < 0 || q >= num_states) parse_fail(lineno, "initial state out of range");
            initial = q;
        } else if (kw == "label") {
            int q = want_int("state id");
            std::string v;
            if (!(ls >> v) || (v != "+" && v != "-"))
                parse_fail(lineno, "expected + or -");
            if (q < 0 || q >= num_states) parse_fail(lineno, "state out of range");
            labels.emplace_back(q, v == "+" ? Label::accept : Label::reject);
        } else if (kw == "trans") {
            int src = want_int("source state");
            int sym = want_int("symbol index");
            int dst = want_int("target state");
            if (src < 0 || src >= num_states || dst < 0 || dst >= num_states)
                parse_fail(lineno, "state out of range");
            if (sym < 0 || sym >= num_symbols) parse_fail(lineno, "symbol out of range");
            trans.push_back({src, sym, dst});
        } else {
            parse_fail(lineno, "unknown directive '" + kw + "'");
        }
        std::string extra;
        if (ls >> extra) parse_fail(lineno, "trailing tokens");
    }
    if (num_states < 0) throw ParseError("missing 3nfa header");
    if (!initial) throw ParseError("missing initial state");

    ThreeNfa a(num_states, num_symbols, *initial);
    for (auto [q, l] : labels) {
        if (auto prev = a.label(q); prev && *prev != l)
            throw ParseError("conflicting labels for state " + std::to_string(q));
        a.set_label(q, l);
    }
    for (const Transition& t : trans) a.add_transition(t.src, t.sym, t.dst);
    return a;
}

ThreeNfa parse_automaton_text(const std::string& text) {
    std::istringstream in(text);
    return parse_automaton_text(in);
}

ThreeNfa load_automaton_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse_automaton_text(in);
}

void save_automaton_file(const ThreeNfa& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << write_automaton_text(a);
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string write_dot(const ThreeNfa& a, const Alphabet& alphabet) {
    std::ostringstream out;
    out << "digraph automaton {\n";
    out << "  rankdir=LR;\n";
    out << "  __start [shape=point];\n";
    out << "  __start -> s" << a.initial() << ";\n";
    for (StateId q = 0; q < a.num_states(); ++q) {
        out << "  s" << q << " [label=\"" << q << "\"";
        auto l = a.label(q);
        if (!l)
            out << ", shape=circle, style=dashed";
        else if (*l == Label::accept)
            out << ", shape=doublecircle";
        else
            out << ", shape=circle";
        out << "];\n";
    }
    // One edge per (src, dst) pair, symbols joined.
    std::map<std::pair<StateId, StateId>, std::vector<SymbolId>> edges;
    for (const Transition& t : a.transitions()) edges[{t.src, t.dst}].push_back(t.sym);
    for (const auto& [key, syms] : edges) {
        out << "  s" << key.first << " -> s" << key.second << " [label=\"";
        for (std::size_t i = 0; i < syms.size(); ++i) {
            if (i != 0) out << ",";
            out << (alphabet.size > 0 ? alphabet.symbol_name(syms[i])
                                      : std::to_string(syms[i]));
        }
        out << "\"];\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace sepdfa
