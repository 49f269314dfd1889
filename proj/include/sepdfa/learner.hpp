#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sepdfa/automata.hpp"
#include "sepdfa/observation_tree.hpp"
#include "sepdfa/synthesis.hpp"
#include "sepdfa/teacher.hpp"

namespace sepdfa {

struct LearnerConfig {
    /// Relation backing promotion, candidate sets, and the basis invariant.
    Relation promotion_relation = Relation::apartness;
    /// Swap a basis member for a strictly shallower node whose candidate set
    /// is exactly that member.
    bool basis_replacement = false;
    /// After promoting a node that is not apart from some basis member, spend
    /// extra membership queries trying to turn incompatibility into apartness
    /// with a witness. Requires incompatibility mode.
    bool establish_apartness_queries = false;
    /// Locate the newly apart pair by bisection instead of a linear replay.
    bool establish_binary_search = false;
    /// Query the counterexample word itself; when off, its answer is inferred
    /// as the opposite of the rejected hypothesis's output.
    bool query_final_counterexample = true;

    Backend synthesis_backend = Backend::internal;
    std::string solver_command;
    bool redundant_clauses = true;
    std::uint64_t synthesis_node_budget = 10'000'000;

    /// 0 disables the respective budget. The time budget is checked between
    /// rules and inside the internal synthesis search.
    std::uint64_t max_membership_queries = 0;
    std::int64_t time_budget_ms = 0;
};

struct LearnResult {
    CompleteDfa hypothesis;
    ObservationTree tree;
    Basis basis;
    int n = 1;
    RunStats stats;
};

struct LearnerSnapshot {
    ObservationTree tree;
    Basis basis;
    int n = 1;
    RunStats stats;
};

/// A run budget was exhausted before the teacher accepted a hypothesis; the
/// state reached so far rides along.
class LearningBudgetError : public std::runtime_error {
public:
    LearningBudgetError(const std::string& what, LearnerSnapshot snapshot)
        : std::runtime_error(what),
          snapshot_(std::make_shared<LearnerSnapshot>(std::move(snapshot))) {}

    const LearnerSnapshot& snapshot() const { return *snapshot_; }

private:
    std::shared_ptr<const LearnerSnapshot> snapshot_;
};

/// What one validity-rule application did.
struct ValidityStep {
    bool unsat = false;                     // bound was raised
    std::optional<CompleteDfa> proposed;    // hypothesis sent to the teacher
    std::optional<Word> counterexample;     // teacher's objection, if any
    bool accepted = false;
};

/// Tries to upgrade "p and q are incompatible" to an apartness witness by
/// querying along the cycle that merging p and q would create (for nested
/// subtrees) or by replaying one subtree's labels under the other (for
/// disjoint ones). Returns the witness if p and q end up apart; don't-care
/// answers can leave the pair incompatible but witness-free, giving nullopt.
std::optional<Word> establish_apartness(ObservationTree& tree, Teacher& teacher,
                                        NodeId p, NodeId q,
                                        bool binary_search = false);

/// Active learner for a minimal DFA separating the teacher's two languages.
/// Rules are applied with priority promotion > extension > identification >
/// validity; each rule_* method applies the rule once if possible. run()
/// drives them to completion.
class Learner {
public:
    /// Throws std::invalid_argument for inconsistent configurations.
    Learner(Teacher& teacher, LearnerConfig config = {});

    /// Learns until the teacher accepts a hypothesis. Throws
    /// LearningBudgetError when a run budget is hit; SynthesisBudgetError
    /// from the solver passes through.
    LearnResult run();

    /// Issues the initial membership query for the empty word; no-op once
    /// started. The rule methods and run() call this themselves.
    void start();

    /// Adds the first node (breadth-first) that is separated from the whole
    /// basis; with basis replacement enabled, otherwise swaps a deep member
    /// for a shallower equivalent.
    bool rule_promotion();
    /// Queries the first unqueried word access(q)·v, q in basis order, v in
    /// length-lex order up to length n - |S| + 1.
    bool rule_extension();
    /// Queries a separating witness of two candidates under a frontier node.
    bool rule_identification();
    /// Synthesizes at the current bound: raises it on unsat, otherwise asks
    /// the teacher. Callers loop until `accepted`.
    ValidityStep rule_validity();

    /// Queries every unqueried proper prefix of w shortest-first, then w
    /// itself. `rejected` feeds the inferred answer when final-word querying
    /// is off. Throws ConsistencyError if the teacher answers don't-care on w.
    void process_counterexample(const Word& w, const CompleteDfa* rejected = nullptr);

    const ObservationTree& tree() const { return tree_; }
    const Basis& basis() const { return basis_; }
    int bound() const { return n_; }
    RunStats current_stats() const;

private:
    Answer query(const Word& w);
    bool queried(const Word& w) const;
    void check_time_budget();
    LearnerSnapshot snapshot() const;

    Teacher& teacher_;
    LearnerConfig config_;
    ObservationTree tree_;
    Basis basis_;
    int n_ = 1;
    bool started_ = false;
    std::uint64_t unsat_rounds_ = 0;
    std::chrono::steady_clock::time_point started_at_;
};

}  // namespace sepdfa
