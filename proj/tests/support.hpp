#pragma once

// Shared helpers for the test binaries: small random instance generators and
// brute-force reference implementations that the library code is checked
// against. The reference code here deliberately avoids the library's own
// algorithms (merging, BFS shortcuts, caching) so agreement is meaningful.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "sepdfa/automata.hpp"
#include "sepdfa/observation_tree.hpp"

namespace test_support {

using sepdfa::CompleteDfa;
using sepdfa::Label;
using sepdfa::StateId;
using sepdfa::SymbolId;
using sepdfa::ThreeNfa;
using sepdfa::Word;

inline Word random_word(std::mt19937_64& rng, int num_symbols, int max_len) {
    Word w(rng() % (static_cast<std::size_t>(max_len) + 1));
    for (auto& a : w) a = static_cast<SymbolId>(rng() % num_symbols);
    return w;
}

inline ThreeNfa random_three_nfa(std::mt19937_64& rng, int max_states,
                                 int max_symbols) {
    int n = 1 + static_cast<int>(rng() % max_states);
    int k = 1 + static_cast<int>(rng() % max_symbols);
    ThreeNfa a(n, k, static_cast<StateId>(rng() % n));
    for (StateId q = 0; q < n; ++q) {
        switch (rng() % 3) {
            case 0: a.set_label(q, Label::accept); break;
            case 1: a.set_label(q, Label::reject); break;
            default: break;
        }
        for (SymbolId x = 0; x < k; ++x) {
            std::size_t arity = rng() % 3;
            for (std::size_t i = 0; i < arity; ++i)
                a.add_transition(q, x, static_cast<StateId>(rng() % n));
        }
    }
    return a;
}

// Step-by-step subset image of a word, recomputed from the raw transition
// list on every step.
inline std::vector<StateId> closure_run(const ThreeNfa& a, StateId from,
                                        const Word& w) {
    std::set<StateId> cur{from};
    for (SymbolId x : w) {
        std::set<StateId> next;
        for (const sepdfa::Transition& t : a.transitions())
            if (t.sym == x && cur.count(t.src)) next.insert(t.dst);
        cur = std::move(next);
    }
    return {cur.begin(), cur.end()};
}

// Whether an assignment of states to classes yields a label-consistent,
// per-symbol deterministic quotient.
inline bool quotient_consistent(const ThreeNfa& a, const std::vector<int>& cls) {
    std::map<int, Label> class_label;
    for (StateId q = 0; q < a.num_states(); ++q) {
        auto l = a.label(q);
        if (!l) continue;
        auto [it, inserted] = class_label.emplace(cls[static_cast<std::size_t>(q)], *l);
        if (!inserted && it->second != *l) return false;
    }
    std::map<std::pair<int, SymbolId>, int> target;
    for (const sepdfa::Transition& t : a.transitions()) {
        auto key = std::make_pair(cls[static_cast<std::size_t>(t.src)], t.sym);
        auto [it, inserted] = target.emplace(key, cls[static_cast<std::size_t>(t.dst)]);
        if (!inserted && it->second != cls[static_cast<std::size_t>(t.dst)]) return false;
    }
    return true;
}

// Exhaustive search over all maps states -> classes. Feasible for <= 7 states.
inline bool exists_consistent_quotient(const ThreeNfa& a,
                                       std::optional<std::pair<StateId, StateId>> glue) {
    const int n = a.num_states();
    std::vector<int> cls(static_cast<std::size_t>(n), 0);
    for (;;) {
        bool glued = !glue || cls[static_cast<std::size_t>(glue->first)] ==
                                  cls[static_cast<std::size_t>(glue->second)];
        if (glued && quotient_consistent(a, cls)) return true;
        int i = 0;
        while (i < n && cls[static_cast<std::size_t>(i)] == n - 1)
            cls[static_cast<std::size_t>(i++)] = 0;
        if (i == n) return false;
        ++cls[static_cast<std::size_t>(i)];
    }
}

inline bool sd_oracle(const ThreeNfa& a) {
    return exists_consistent_quotient(a, std::nullopt);
}

inline bool compatible_oracle(const ThreeNfa& a, StateId p, StateId q) {
    return exists_consistent_quotient(a, std::make_pair(p, q));
}

// All words over k symbols with length <= max_len, in length-lex order.
inline std::vector<Word> all_words_upto(int k, int max_len) {
    std::vector<Word> out{Word{}};
    std::size_t level_begin = 0;
    for (int len = 1; len <= max_len; ++len) {
        std::size_t level_end = out.size();
        for (std::size_t i = level_begin; i < level_end; ++i)
            for (SymbolId x = 0; x < k; ++x) {
                Word w = out[i];
                w.push_back(x);
                out.push_back(std::move(w));
            }
        level_begin = level_end;
    }
    return out;
}

inline std::optional<Word> brute_shortest_accepted(const CompleteDfa& d, int max_len) {
    for (const Word& w : all_words_upto(d.num_symbols(), max_len))
        if (d.accepts(w)) return w;
    return std::nullopt;
}

// True iff every pair of distinct states is separated by some word of length
// <= max_len.
inline bool pairwise_distinguishable(const CompleteDfa& d, int max_len) {
    auto words = all_words_upto(d.num_symbols(), max_len);
    for (StateId p = 0; p < d.num_states(); ++p)
        for (StateId q = p + 1; q < d.num_states(); ++q) {
            bool split = false;
            for (const Word& w : words)
                if (d.state_label(d.run(p, w)) != d.state_label(d.run(q, w))) {
                    split = true;
                    break;
                }
            if (!split) return false;
        }
    return true;
}

// Two-symbol alphabet throughout: symbol 0 is "a", symbol 1 is "b".

// Accepts words containing an even number of a's and an even number of b's.
// State id = 2 * (a-parity) + (b-parity).
inline CompleteDfa even_even_dfa() {
    ThreeNfa m(4, 2, 0);
    for (StateId q = 0; q < 4; ++q) {
        m.set_label(q, q == 0 ? Label::accept : Label::reject);
        m.add_transition(q, 0, q ^ 2);
        m.add_transition(q, 1, q ^ 1);
    }
    return CompleteDfa(std::move(m));
}

// Accepts words of odd length.
inline CompleteDfa odd_length_dfa() {
    ThreeNfa m(2, 2, 0);
    m.set_label(0, Label::reject);
    m.set_label(1, Label::accept);
    for (StateId q = 0; q < 2; ++q)
        for (SymbolId x = 0; x < 2; ++x) m.add_transition(q, x, 1 - q);
    return CompleteDfa(std::move(m));
}

// Five-state tree where the root (0) and its b-child (2) cannot be mapped to
// a common state of any deterministic automaton, even though no shared word
// exposes a label conflict directly:
//   0:+ --a--> 1:-      0 --b--> 2:unlabeled --b--> 3:+ --a--> 4:+
inline ThreeNfa clash_after_merge_tree() {
    ThreeNfa t(5, 2, 0);
    t.set_label(0, Label::accept);
    t.set_label(1, Label::reject);
    t.set_label(3, Label::accept);
    t.set_label(4, Label::accept);
    t.add_transition(0, 0, 1);
    t.add_transition(0, 1, 2);
    t.add_transition(2, 1, 3);
    t.add_transition(3, 0, 4);
    return t;
}

// Exact language equivalence through the complement-free product construction.
inline bool same_language(const CompleteDfa& d1, const CompleteDfa& d2) {
    using sepdfa::ProductMode;
    return sepdfa::language_empty(
               sepdfa::product_intersection(d1, d2, ProductMode::first_accepts_second_rejects)) &&
           sepdfa::language_empty(
               sepdfa::product_intersection(d2, d1, ProductMode::first_accepts_second_rejects));
}

// Per-word pseudo-random answer that depends only on the word and the salt,
// so repeated queries in one generated scenario can never contradict.
inline std::uint64_t word_hash(const Word& w, std::uint64_t salt) {
    std::uint64_t h = 1469598103934665603ull ^ salt;
    for (SymbolId a : w) {
        h ^= static_cast<std::uint64_t>(a) + 0x9e3779b97f4a7c15ull;
        h *= 1099511628211ull;
    }
    return h;
}

inline sepdfa::Answer hashed_answer(const Word& w, std::uint64_t salt) {
    switch (word_hash(w, salt) % 5) {
        case 0:
        case 1: return sepdfa::Answer::accept;
        case 2:
        case 3: return sepdfa::Answer::reject;
        default: return sepdfa::Answer::dont_care;
    }
}

inline sepdfa::ObservationTree random_tree(std::mt19937_64& rng, int num_words,
                                           int max_len, int num_symbols) {
    std::uint64_t salt = rng();
    sepdfa::ObservationTree t(num_symbols);
    t.add_observation({}, hashed_answer({}, salt));
    for (int i = 0; i < num_words; ++i) {
        Word w = random_word(rng, num_symbols, max_len);
        t.add_observation(w, hashed_answer(w, salt));
    }
    return t;
}

}  // namespace test_support
