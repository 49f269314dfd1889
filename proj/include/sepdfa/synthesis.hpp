#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

#include "sepdfa/automata.hpp"
#include "sepdfa/observation_tree.hpp"

namespace sepdfa {

/// Immutable snapshot of one synthesis question: is there a complete DFA with
/// at most n states that the tree maps into, sending each basis member to its
/// own state?
struct SynthesisProblem {
    ObservationTree tree;
    Basis basis;
    int n = 1;
    /// Relation backing the candidate-set domain clauses.
    Relation relation = Relation::apartness;
    /// Emit/use the redundant basis-fixing and candidate-domain constraints.
    bool redundant_clauses = true;
};

/// Throws std::invalid_argument unless basis members are distinct in-tree
/// nodes, pairwise separated under the problem relation, and |basis| <= n.
void validate_problem(const SynthesisProblem& p);

/// A hypothesis together with the tree-to-hypothesis state map that proves it
/// consistent with every observation.
struct HypothesisModel {
    CompleteDfa hypothesis;
    StateMap morphism;
};

struct SynthesisOutcome {
    std::optional<HypothesisModel> model;

    bool sat() const { return model.has_value(); }
};

/// The internal search ran out of its node-expansion budget; distinct from
/// Unsat, which is a definite answer.
class SynthesisBudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// External solver process failed or produced unreadable output.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// SMT-LIB v2 script deciding the problem, over integer-valued functions
///   delta : [1..n] x [0..k-1] -> [1..n]   hypothesis transitions
///   final : [1..n] -> {0, 1}              1 accepts
///   f     : [1..m] -> [1..n]              tree node map
/// Tree nodes are numbered so that basis member i gets index i+1. The script
/// asserts ranges, one transition equation per tree edge, one label equation
/// per answered node, then (when redundant_clauses) the basis fixing and the
/// per-node domain disjunctions; it ends with (check-sat) and one (get-value)
/// per cell. Output is byte-identical for equal problems.
std::string encode_smtlib(const SynthesisProblem& p);

/// Complete decision procedure: backtracking assignment of the node map in
/// breadth-first order. Assigning a node decides the parent's transition
/// cell, so later siblings under a decided cell are forced, branching happens
/// only on undecided cells, and label clashes prune. A fresh hypothesis state
/// may be opened only in index order. Throws SynthesisBudgetError after
/// node_budget assignment attempts, or once the deadline has passed (the
/// clock is polled periodically during the search).
SynthesisOutcome solve_internal(
    const SynthesisProblem& p, std::uint64_t node_budget = 10'000'000,
    std::optional<std::chrono::steady_clock::time_point> deadline = {});

/// True iff hyp is a complete deterministic automaton with at most p.n
/// states, f is a morphism from the tree into it, and every basis member
/// maps to its own index.
bool verify_model(const SynthesisProblem& p, const ThreeNfa& hyp, const StateMap& f);
bool verify_model(const SynthesisProblem& p, const HypothesisModel& model);

enum class Backend { internal, external_smt };

struct SolveOptions {
    Backend backend = Backend::internal;
    /// Solver launch command for the external backend, whitespace-split;
    /// receives the script on stdin, must answer "sat"/"unsat" and then
    /// one value response per get-value. Example: "z3 -in".
    std::string solver_command;
    std::uint64_t node_budget = 10'000'000;
    /// Wall-clock cutoff honored by the internal search only.
    std::optional<std::chrono::steady_clock::time_point> deadline;
};

/// Backend dispatch. Sat models from either backend are normalized (pruned
/// to reachable states, basis members on their own indices) and re-verified
/// before being returned.
SynthesisOutcome solve(const SynthesisProblem& p, const SolveOptions& opts = {});

}  // namespace sepdfa
