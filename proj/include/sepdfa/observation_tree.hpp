#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sepdfa/automata.hpp"

namespace sepdfa {

using NodeId = int;

/// Outcome of a membership query: in L1, in L2, or in neither.
enum class Answer : std::uint8_t { accept, reject, dont_care };

/// Raised when an observation contradicts an earlier answer for the same word.
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Which pairwise relation separates states: apartness (a witness word with
/// conflicting defined endpoints) or incompatibility (no merge into any
/// deterministic automaton possible). Apartness implies incompatibility, so
/// the incompatibility relation separates at least as many pairs.
enum class Relation : std::uint8_t { apartness, incompatibility };

struct Basis;

/// Prefix tree of all membership queries issued so far. Nodes are created for
/// every prefix of a queried word; each answered node carries + or - or is
/// marked don't-care, and answers are write-once. Node ids are dense.
class ObservationTree {
public:
    explicit ObservationTree(int num_symbols);

    int num_symbols() const { return num_symbols_; }
    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    NodeId root() const { return root_; }

    std::optional<NodeId> child(NodeId q, SymbolId a) const;
    std::optional<NodeId> parent(NodeId q) const;
    /// Symbol on the edge from parent(q) to q; root has none.
    SymbolId incoming_symbol(NodeId q) const;
    int depth(NodeId q) const;

    std::optional<Label> label(NodeId q) const;
    bool is_dont_care(NodeId q) const;
    /// A node has an answer iff its word was actually queried; prefix nodes
    /// created on the way stay unanswered.
    std::optional<Answer> answer(NodeId q) const;

    /// Records a query outcome, creating the path to w as needed. Repeating
    /// an identical observation is a no-op; contradicting an earlier one
    /// throws ConsistencyError.
    NodeId add_observation(const Word& w, Answer answer);

    /// Node for w if the whole path exists.
    std::optional<NodeId> node_at(const Word& w) const;

    /// Word spelled by the unique root-to-q path.
    Word access(NodeId q) const;

    /// Shortest word (ties lexicographic) leading from both p and q to
    /// defined, different labels; none if no such word exists in the tree.
    std::optional<Word> apart(NodeId p, NodeId q) const;

    /// No deterministic automaton can receive p and q under one morphism.
    /// Holds whenever apart(p, q) does, and also when a clash appears only
    /// after forced follow-up merges.
    bool incompatible(NodeId p, NodeId q) const;

    bool related(Relation mode, NodeId p, NodeId q) const;

    /// The tree seen as an automaton: answered +/- nodes labeled, everything
    /// else (unanswered and don't-care) unlabeled.
    ThreeNfa to_three_nfa() const;

private:
    struct Node {
        NodeId parent = -1;
        SymbolId in_sym = -1;
        std::vector<NodeId> children;  // one slot per symbol, -1 when absent
        std::optional<Label> label;
        bool dont_care = false;
        int depth = 0;
    };

    friend std::pair<ObservationTree, Basis> parse_tree_text(std::istream&);

    void check_node(NodeId q) const;
    NodeId ensure_child(NodeId q, SymbolId a);

    int num_symbols_;
    NodeId root_ = 0;
    std::vector<Node> nodes_;
    std::uint64_t label_version_ = 0;

    // Apartness witnesses are permanent; compatibility verdicts are
    // remembered with the label version they were computed at, since only
    // new labels can break compatibility.
    mutable std::map<std::pair<NodeId, NodeId>, Word> witness_cache_;
    mutable std::map<std::pair<NodeId, NodeId>, std::pair<bool, std::uint64_t>>
        compat_cache_;
};

/// Ordered set of pairwise separated tree nodes; position in `members` is the
/// state index the synthesized automaton must assign to each member.
struct Basis {
    std::vector<NodeId> members;

    bool contains(NodeId q) const;
    /// Position of q in members, or -1.
    int index_of(NodeId q) const;
    int size() const { return static_cast<int>(members.size()); }
};

/// Basis members not separated from q under the given relation, in basis
/// order. q must not itself be a basis member.
std::vector<NodeId> candidate_set(const ObservationTree& t, const Basis& basis,
                                  Relation mode, NodeId q);

/// Non-basis nodes whose parent is a basis member.
std::vector<NodeId> frontier(const ObservationTree& t, const Basis& basis);

/// Adds q (whose candidate set must be empty) to the basis; returns the state
/// bound raised to the new basis size if it grew past it.
int promote(const ObservationTree& t, Basis& basis, Relation mode, NodeId q, int n);

/// Swaps basis member p for the strictly shallower node q, which must be
/// separated from every other member (candidate set exactly {p}).
void replace_basis(const ObservationTree& t, Basis& basis, Relation mode,
                   NodeId q, NodeId p);

/// Automaton text format plus `dontcare <id>` and `basis <id> <index>` lines.
std::string write_tree_text(const ObservationTree& t, const Basis* basis = nullptr);
std::pair<ObservationTree, Basis> parse_tree_text(std::istream& in);
std::pair<ObservationTree, Basis> parse_tree_text(const std::string& text);

}  // namespace sepdfa
