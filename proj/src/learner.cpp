#include "sepdfa/learner.hpp"

#include <algorithm>
#include <deque>

namespace sepdfa {

namespace {

bool node_queried(const ObservationTree& t, NodeId q) {
    return t.label(q).has_value() || t.is_dont_care(q);
}

std::optional<NodeId> descend(const ObservationTree& t, NodeId from, const Word& w) {
    NodeId q = from;
    for (SymbolId x : w) {
        auto c = t.child(q, x);
        if (!c) return std::nullopt;
        q = *c;
    }
    return q;
}

// Tree nodes in (depth, id) order.
std::vector<NodeId> breadth_first_nodes(const ObservationTree& t) {
    std::vector<NodeId> order(static_cast<std::size_t>(t.num_nodes()));
    for (NodeId q = 0; q < t.num_nodes(); ++q) order[static_cast<std::size_t>(q)] = q;
    std::stable_sort(order.begin(), order.end(),
                     [&](NodeId a, NodeId b) { return t.depth(a) < t.depth(b); });
    return order;
}

// Nodes x, x·u, x·u², ... while they exist in the tree.
std::vector<NodeId> cycle_chain(const ObservationTree& t, NodeId x, const Word& u) {
    std::vector<NodeId> chain{x};
    while (auto next = descend(t, chain.back(), u)) chain.push_back(*next);
    return chain;
}

// Labeled descendants of `from` as words relative to it, in (length, lex)
// order (breadth-first traversal of a tree with symbol-ordered children).
std::vector<Word> labeled_suffixes(const ObservationTree& t, NodeId from) {
    std::vector<Word> out;
    std::deque<std::pair<NodeId, Word>> queue{{from, {}}};
    while (!queue.empty()) {
        auto [q, w] = queue.front();
        queue.pop_front();
        if (t.label(q)) out.push_back(w);
        for (SymbolId x = 0; x < t.num_symbols(); ++x)
            if (auto c = t.child(q, x)) {
                Word next = w;
                next.push_back(x);
                queue.emplace_back(*c, std::move(next));
            }
    }
    return out;
}

Word concat(Word a, const Word& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

class ApartnessEstablisher {
public:
    ApartnessEstablisher(ObservationTree& tree, Teacher& teacher, bool binary_search)
        : tree_(tree), teacher_(teacher), binary_(binary_search) {}

    std::optional<Word> establish(NodeId p, NodeId q) {
        if (auto w = tree_.apart(p, q)) return w;
        // When one node sits in the other's subtree, merging them closes a
        // cycle; otherwise the subtrees are simply zipped together.
        if (auto u = path_between(p, q)) return around_cycle(p, *u, p, q);
        if (auto u = path_between(q, p)) return around_cycle(q, *u, p, q);
        replay_subtree(p, q);
        if (auto w = tree_.apart(p, q)) return w;
        replay_subtree(q, p);
        return tree_.apart(p, q);
    }

private:
    // Word leading from ancestor to descendant, if the containment holds.
    std::optional<Word> path_between(NodeId ancestor, NodeId descendant) const {
        Word u;
        NodeId q = descendant;
        while (q != ancestor) {
            auto par = tree_.parent(q);
            if (!par) return std::nullopt;
            u.push_back(tree_.incoming_symbol(q));
            q = *par;
        }
        std::reverse(u.begin(), u.end());
        return u;
    }

    void query_if_new(const Word& w) {
        NodeId q = tree_.root();
        bool known = true;
        for (SymbolId x : w) {
            auto c = tree_.child(q, x);
            if (!c) {
                known = false;
                break;
            }
            q = *c;
        }
        if (known && node_queried(tree_, q)) return;
        tree_.add_observation(w, teacher_.membership(w));
    }

    // Merging `top` with top·u identifies all nodes top·z·u^j for a fixed
    // offset z; an apartness witness between two such nodes, replayed from
    // the nodes in between, forces some adjacent pair apart, which descends
    // to the original pair by peeling common suffixes.
    std::optional<Word> around_cycle(NodeId top, const Word& u, NodeId p, NodeId q) {
        for (std::size_t d = 0; d < u.size(); ++d) {
            Word offset(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(d));
            Word rotated(u.begin() + static_cast<std::ptrdiff_t>(d), u.end());
            rotated.insert(rotated.end(), u.begin(),
                           u.begin() + static_cast<std::ptrdiff_t>(d));
            NodeId anchor = *descend(tree_, top, offset);
            std::vector<NodeId> chain = cycle_chain(tree_, anchor, rotated);
            for (std::size_t i = 0; i + 1 < chain.size(); ++i)
                for (std::size_t j = i + 1; j < chain.size(); ++j) {
                    auto witness = tree_.apart(chain[i], chain[j]);
                    if (!witness) continue;
                    if (auto w = replay_chain(chain, i, j, *witness, p, q)) return w;
                }
        }
        return std::nullopt;
    }

    std::optional<Word> replay_chain(const std::vector<NodeId>& chain, std::size_t lo,
                                     std::size_t hi, const Word& witness, NodeId p,
                                     NodeId q) {
        if (binary_) {
            while (hi - lo > 1) {
                std::size_t mid = lo + (hi - lo) / 2;
                query_if_new(concat(tree_.access(chain[mid]), witness));
                if (auto w = tree_.apart(p, q)) return w;
                auto mid_label = label_after(chain[mid], witness);
                if (!mid_label) return std::nullopt;  // bisection needs answers
                if (mid_label == label_after(chain[lo], witness))
                    lo = mid;
                else
                    hi = mid;
            }
            return tree_.apart(p, q);
        }
        for (std::size_t l = lo + 1; l < hi; ++l) {
            query_if_new(concat(tree_.access(chain[l]), witness));
            if (auto w = tree_.apart(p, q)) return w;
        }
        return tree_.apart(p, q);
    }

    std::optional<Label> label_after(NodeId from, const Word& w) const {
        auto node = descend(tree_, from, w);
        return node ? tree_.label(*node) : std::nullopt;
    }

    // Queries the words that carry one subtree's definite labels from under
    // the other node, until the pair comes apart or labels run out.
    void replay_subtree(NodeId source, NodeId target) {
        for (const Word& v : labeled_suffixes(tree_, source)) {
            if (tree_.apart(source, target)) return;
            query_if_new(concat(tree_.access(target), v));
        }
    }

    ObservationTree& tree_;
    Teacher& teacher_;
    bool binary_;
};

}  // namespace

std::optional<Word> establish_apartness(ObservationTree& tree, Teacher& teacher,
                                        NodeId p, NodeId q, bool binary_search) {
    if (p == q) throw std::invalid_argument("establish_apartness: states must differ");
    return ApartnessEstablisher(tree, teacher, binary_search).establish(p, q);
}

Learner::Learner(Teacher& teacher, LearnerConfig config)
    : teacher_(teacher), config_(std::move(config)), tree_(teacher.num_symbols()) {
    if (config_.establish_apartness_queries &&
        config_.promotion_relation != Relation::incompatibility)
        throw std::invalid_argument(
            "learner: apartness-establishing queries need incompatibility mode");
}

void Learner::start() {
    if (started_) return;
    started_ = true;
    started_at_ = std::chrono::steady_clock::now();
    basis_.members = {tree_.root()};
    n_ = 1;
    query({});
}

Answer Learner::query(const Word& w) {
    if (config_.max_membership_queries != 0 &&
        teacher_.stats().membership_queries >= config_.max_membership_queries)
        throw LearningBudgetError("learner: membership-query budget exhausted",
                                  snapshot());
    Answer a = teacher_.membership(w);
    tree_.add_observation(w, a);
    return a;
}

bool Learner::queried(const Word& w) const {
    auto node = descend(tree_, tree_.root(), w);
    return node && node_queried(tree_, *node);
}

void Learner::check_time_budget() {
    if (config_.time_budget_ms == 0) return;
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - started_at_)
                       .count();
    if (elapsed > config_.time_budget_ms)
        throw LearningBudgetError("learner: time budget exhausted", snapshot());
}

RunStats Learner::current_stats() const {
    RunStats stats = teacher_.stats();
    stats.unsat_rounds = unsat_rounds_;
    if (started_)
        stats.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - started_at_)
                                 .count();
    return stats;
}

LearnerSnapshot Learner::snapshot() const {
    return LearnerSnapshot{tree_, basis_, n_, current_stats()};
}

bool Learner::rule_promotion() {
    start();
    const Relation mode = config_.promotion_relation;
    for (NodeId q : breadth_first_nodes(tree_)) {
        if (basis_.contains(q)) continue;
        if (!candidate_set(tree_, basis_, mode, q).empty()) continue;
        n_ = promote(tree_, basis_, mode, q, n_);
        if (config_.establish_apartness_queries)
            for (NodeId other : basis_.members)
                if (other != q && !tree_.apart(q, other))
                    establish_apartness(tree_, teacher_, q, other,
                                        config_.establish_binary_search);
        return true;
    }
    if (!config_.basis_replacement) return false;
    for (NodeId q : breadth_first_nodes(tree_)) {
        if (basis_.contains(q)) continue;
        auto candidates = candidate_set(tree_, basis_, mode, q);
        if (candidates.size() != 1) continue;
        NodeId p = candidates.front();
        if (tree_.depth(q) >= tree_.depth(p)) continue;
        replace_basis(tree_, basis_, mode, q, p);
        return true;
    }
    return false;
}

bool Learner::rule_extension() {
    start();
    const int max_len = n_ - basis_.size() + 1;
    for (NodeId b : basis_.members) {
        if (!node_queried(tree_, b)) {
            query(tree_.access(b));
            return true;
        }
        // Words under b in (length, lex) order; the first missing child slot
        // or unqueried node is the query target.
        std::deque<std::pair<NodeId, int>> queue{{b, 0}};
        while (!queue.empty()) {
            auto [q, len] = queue.front();
            queue.pop_front();
            if (len == max_len) continue;
            for (SymbolId x = 0; x < tree_.num_symbols(); ++x) {
                auto c = tree_.child(q, x);
                if (!c || !node_queried(tree_, *c)) {
                    Word w = tree_.access(q);
                    w.push_back(x);
                    query(w);
                    return true;
                }
                queue.emplace_back(*c, len + 1);
            }
        }
    }
    return false;
}

bool Learner::rule_identification() {
    start();
    const Relation mode = config_.promotion_relation;
    for (NodeId q : frontier(tree_, basis_)) {
        auto candidates = candidate_set(tree_, basis_, mode, q);
        if (candidates.size() < 2) continue;
        for (std::size_t i = 0; i < candidates.size(); ++i)
            for (std::size_t j = i + 1; j < candidates.size(); ++j) {
                auto witness = tree_.apart(candidates[i], candidates[j]);
                if (!witness) continue;  // incompatible members may lack one
                Word w = concat(tree_.access(q), *witness);
                if (queried(w)) continue;
                query(w);
                return true;
            }
    }
    return false;
}

ValidityStep Learner::rule_validity() {
    start();
    SynthesisProblem problem{tree_, basis_, n_, config_.promotion_relation,
                             config_.redundant_clauses};
    SolveOptions options;
    options.backend = config_.synthesis_backend;
    options.solver_command = config_.solver_command;
    options.node_budget = config_.synthesis_node_budget;
    if (config_.time_budget_ms != 0)
        options.deadline =
            started_at_ + std::chrono::milliseconds(config_.time_budget_ms);

    ValidityStep step;
    SynthesisOutcome outcome;
    try {
        outcome = solve(problem, options);
    } catch (const SynthesisBudgetError&) {
        // When the run clock (not the node cap) cut the search short, report
        // it as a run budget stop so callers still get the partial tree.
        check_time_budget();
        throw;
    }
    if (!outcome.sat()) {
        ++n_;
        ++unsat_rounds_;
        step.unsat = true;
        return step;
    }
    step.proposed = outcome.model->hypothesis;
    ValidityResult verdict = teacher_.validity(*step.proposed);
    if (verdict.accepted()) {
        step.accepted = true;
        return step;
    }
    step.counterexample = verdict.counterexample;
    process_counterexample(*verdict.counterexample, &*step.proposed);
    return step;
}

void Learner::process_counterexample(const Word& w, const CompleteDfa* rejected) {
    start();
    for (std::size_t len = 0; len < w.size(); ++len) {
        Word prefix(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(len));
        if (!queried(prefix)) query(prefix);
    }
    if (queried(w)) return;
    if (!config_.query_final_counterexample && rejected != nullptr) {
        tree_.add_observation(
            w, rejected->accepts(w) ? Answer::reject : Answer::accept);
        return;
    }
    if (query(w) == Answer::dont_care)
        throw ConsistencyError("learner: counterexample answered don't-care");
}

LearnResult Learner::run() {
    start();
    while (true) {
        check_time_budget();
        if (rule_promotion()) continue;
        if (rule_extension()) continue;
        if (rule_identification()) continue;
        ValidityStep step = rule_validity();
        if (!step.accepted) continue;
        LearnResult result{std::move(*step.proposed), tree_, basis_, n_,
                           current_stats()};
        result.stats.learned_size = result.hypothesis.num_states();
        return result;
    }
}

}  // namespace sepdfa
