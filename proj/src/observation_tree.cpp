#include "sepdfa/observation_tree.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace sepdfa {

ObservationTree::ObservationTree(int num_symbols) : num_symbols_(num_symbols) {
    if (num_symbols < 1)
        throw std::invalid_argument("observation tree needs at least one symbol");
    Node root;
    root.children.assign(static_cast<std::size_t>(num_symbols), -1);
    nodes_.push_back(std::move(root));
}

void ObservationTree::check_node(NodeId q) const {
    if (q < 0 || q >= num_nodes()) throw std::invalid_argument("node out of range");
}

std::optional<NodeId> ObservationTree::child(NodeId q, SymbolId a) const {
    check_node(q);
    if (a < 0 || a >= num_symbols_) throw std::invalid_argument("symbol out of range");
    NodeId c = nodes_[static_cast<std::size_t>(q)].children[static_cast<std::size_t>(a)];
    if (c < 0) return std::nullopt;
    return c;
}

std::optional<NodeId> ObservationTree::parent(NodeId q) const {
    check_node(q);
    NodeId p = nodes_[static_cast<std::size_t>(q)].parent;
    if (p < 0) return std::nullopt;
    return p;
}

SymbolId ObservationTree::incoming_symbol(NodeId q) const {
    check_node(q);
    if (nodes_[static_cast<std::size_t>(q)].parent < 0)
        throw std::invalid_argument("root has no incoming symbol");
    return nodes_[static_cast<std::size_t>(q)].in_sym;
}

int ObservationTree::depth(NodeId q) const {
    check_node(q);
    return nodes_[static_cast<std::size_t>(q)].depth;
}

std::optional<Label> ObservationTree::label(NodeId q) const {
    check_node(q);
    return nodes_[static_cast<std::size_t>(q)].label;
}

bool ObservationTree::is_dont_care(NodeId q) const {
    check_node(q);
    return nodes_[static_cast<std::size_t>(q)].dont_care;
}

std::optional<Answer> ObservationTree::answer(NodeId q) const {
    check_node(q);
    const Node& node = nodes_[static_cast<std::size_t>(q)];
    if (node.dont_care) return Answer::dont_care;
    if (node.label)
        return *node.label == Label::accept ? Answer::accept : Answer::reject;
    return std::nullopt;
}

NodeId ObservationTree::ensure_child(NodeId q, SymbolId a) {
    NodeId c = nodes_[static_cast<std::size_t>(q)].children[static_cast<std::size_t>(a)];
    if (c >= 0) return c;
    Node node;
    node.parent = q;
    node.in_sym = a;
    node.children.assign(static_cast<std::size_t>(num_symbols_), -1);
    node.depth = nodes_[static_cast<std::size_t>(q)].depth + 1;
    NodeId id = num_nodes();
    nodes_.push_back(std::move(node));
    nodes_[static_cast<std::size_t>(q)].children[static_cast<std::size_t>(a)] = id;
    return id;
}

NodeId ObservationTree::add_observation(const Word& w, Answer answer) {
    for (SymbolId a : w)
        if (a < 0 || a >= num_symbols_)
            throw std::invalid_argument("symbol out of range");
    NodeId q = root_;
    for (SymbolId a : w) q = ensure_child(q, a);
    Node& node = nodes_[static_cast<std::size_t>(q)];
    if (answer == Answer::dont_care) {
        if (node.label)
            throw ConsistencyError("word answered don't-care was labeled before");
        node.dont_care = true;
        return q;
    }
    Label l = answer == Answer::accept ? Label::accept : Label::reject;
    if (node.dont_care)
        throw ConsistencyError("word labeled now was answered don't-care before");
    if (node.label) {
        if (*node.label != l) throw ConsistencyError("contradictory answers for a word");
        return q;
    }
    node.label = l;
    ++label_version_;
    return q;
}

std::optional<NodeId> ObservationTree::node_at(const Word& w) const {
    NodeId q = root_;
    for (SymbolId a : w) {
        auto c = child(q, a);
        if (!c) return std::nullopt;
        q = *c;
    }
    return q;
}

Word ObservationTree::access(NodeId q) const {
    check_node(q);
    Word w;
    for (NodeId cur = q; nodes_[static_cast<std::size_t>(cur)].parent >= 0;
         cur = nodes_[static_cast<std::size_t>(cur)].parent)
        w.push_back(nodes_[static_cast<std::size_t>(cur)].in_sym);
    std::reverse(w.begin(), w.end());
    return w;
}

std::optional<Word> ObservationTree::apart(NodeId p, NodeId q) const {
    check_node(p);
    check_node(q);
    if (p == q) return std::nullopt;
    auto key = std::minmax(p, q);
    if (auto it = witness_cache_.find(key); it != witness_cache_.end())
        return it->second;

    // Walk the common shape of the two subtrees in length-lex word order.
    std::deque<std::pair<std::pair<NodeId, NodeId>, Word>> queue;
    queue.push_back({{p, q}, {}});
    while (!queue.empty()) {
        auto [pair, w] = queue.front();
        queue.pop_front();
        auto [a, b] = pair;
        const auto& la = nodes_[static_cast<std::size_t>(a)].label;
        const auto& lb = nodes_[static_cast<std::size_t>(b)].label;
        if (la && lb && *la != *lb) {
            witness_cache_.emplace(key, w);
            return w;
        }
        for (SymbolId x = 0; x < num_symbols_; ++x) {
            NodeId ca = nodes_[static_cast<std::size_t>(a)].children[static_cast<std::size_t>(x)];
            NodeId cb = nodes_[static_cast<std::size_t>(b)].children[static_cast<std::size_t>(x)];
            if (ca < 0 || cb < 0) continue;
            Word wx = w;
            wx.push_back(x);
            queue.push_back({{ca, cb}, std::move(wx)});
        }
    }
    return std::nullopt;
}

bool ObservationTree::incompatible(NodeId p, NodeId q) const {
    check_node(p);
    check_node(q);
    if (p == q) return false;
    auto key = std::minmax(p, q);
    if (auto it = compat_cache_.find(key); it != compat_cache_.end()) {
        auto [verdict, version] = it->second;
        if (verdict) return true;  // labels only ever get added
        if (version == label_version_) return false;
    }
    bool verdict = !compatible(to_three_nfa(), p, q);
    compat_cache_[key] = {verdict, label_version_};
    return verdict;
}

bool ObservationTree::related(Relation mode, NodeId p, NodeId q) const {
    return mode == Relation::apartness ? apart(p, q).has_value() : incompatible(p, q);
}

ThreeNfa ObservationTree::to_three_nfa() const {
    ThreeNfa a(num_nodes(), num_symbols_, root_);
    for (NodeId q = 0; q < num_nodes(); ++q) {
        const Node& node = nodes_[static_cast<std::size_t>(q)];
        if (node.label) a.set_label(q, *node.label);
        for (SymbolId x = 0; x < num_symbols_; ++x)
            if (node.children[static_cast<std::size_t>(x)] >= 0)
                a.add_transition(q, x, node.children[static_cast<std::size_t>(x)]);
    }
    return a;
}

bool Basis::contains(NodeId q) const {
    return std::find(members.begin(), members.end(), q) != members.end();
}

int Basis::index_of(NodeId q) const {
    auto it = std::find(members.begin(), members.end(), q);
    if (it == members.end()) return -1;
    return static_cast<int>(it - members.begin());
}

std::vector<NodeId> candidate_set(const ObservationTree& t, const Basis& basis,
                                  Relation mode, NodeId q) {
    if (basis.contains(q))
        throw std::invalid_argument("candidate set is only defined off the basis");
    std::vector<NodeId> cands;
    for (NodeId member : basis.members)
        if (!t.related(mode, q, member)) cands.push_back(member);
    return cands;
}

std::vector<NodeId> frontier(const ObservationTree& t, const Basis& basis) {
    std::vector<NodeId> result;
    for (NodeId member : basis.members)
        for (SymbolId x = 0; x < t.num_symbols(); ++x)
            if (auto c = t.child(member, x); c && !basis.contains(*c))
                result.push_back(*c);
    return result;
}

int promote(const ObservationTree& t, Basis& basis, Relation mode, NodeId q, int n) {
    if (basis.contains(q)) throw std::invalid_argument("promote: already a basis member");
    if (!candidate_set(t, basis, mode, q).empty())
        throw std::invalid_argument("promote: candidate set not empty");
    basis.members.push_back(q);
    return std::max(n, basis.size());
}

void replace_basis(const ObservationTree& t, Basis& basis, Relation mode,
                   NodeId q, NodeId p) {
    if (basis.contains(q)) throw std::invalid_argument("replace: already a basis member");
    int pos = basis.index_of(p);
    if (pos < 0) throw std::invalid_argument("replace: not a basis member");
    if (t.depth(q) >= t.depth(p))
        throw std::invalid_argument("replace: replacement must be shallower");
    if (candidate_set(t, basis, mode, q) != std::vector<NodeId>{p})
        throw std::invalid_argument("replace: candidate set must be exactly the replaced member");
    basis.members[static_cast<std::size_t>(pos)] = q;
}

std::string write_tree_text(const ObservationTree& t, const Basis* basis) {
    std::ostringstream out;
    out << write_automaton_text(t.to_three_nfa());
    for (NodeId q = 0; q < t.num_nodes(); ++q)
        if (t.is_dont_care(q)) out << "dontcare " << q << '\n';
    if (basis)
        for (int i = 0; i < basis->size(); ++i)
            out << "basis " << basis->members[static_cast<std::size_t>(i)] << ' ' << i
                << '\n';
    return out.str();
}

std::pair<ObservationTree, Basis> parse_tree_text(std::istream& in) {
    // Reuse the automaton syntax by separating the extension lines first.
    std::ostringstream base;
    std::vector<NodeId> dontcare;
    std::vector<std::pair<NodeId, int>> basis_lines;
    std::string line;
    int lineno = 0;
    auto fail = [](int no, const std::string& what) -> void {
        throw ParseError("line " + std::to_string(no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream probe(line);
        std::string kw;
        probe >> kw;
        if (kw == "dontcare") {
            int id;
            std::string extra;
            if (!(probe >> id) || (probe >> extra && extra[0] != '#'))
                fail(lineno, "expected dontcare <id>");
            dontcare.push_back(id);
        } else if (kw == "basis") {
            int id, index;
            std::string extra;
            if (!(probe >> id >> index) || (probe >> extra && extra[0] != '#'))
                fail(lineno, "expected basis <id> <index>");
            basis_lines.emplace_back(id, index);
        } else {
            base << line << '\n';
        }
    }
    ThreeNfa a = parse_automaton_text(base.str());

    ObservationTree t(a.num_symbols());
    t.root_ = a.initial();
    t.nodes_.assign(static_cast<std::size_t>(a.num_states()), {});
    for (auto& node : t.nodes_)
        node.children.assign(static_cast<std::size_t>(a.num_symbols()), -1);
    for (const Transition& tr : a.transitions()) {
        if (tr.dst == t.root_) throw ParseError("tree root has an incoming edge");
        auto& child_slot =
            t.nodes_[static_cast<std::size_t>(tr.src)].children[static_cast<std::size_t>(tr.sym)];
        if (child_slot >= 0) throw ParseError("node has two children on one symbol");
        auto& dst = t.nodes_[static_cast<std::size_t>(tr.dst)];
        if (dst.parent >= 0) throw ParseError("node has two parents");
        child_slot = tr.dst;
        dst.parent = tr.src;
        dst.in_sym = tr.sym;
    }
    // Depth assignment doubles as the connectivity check.
    std::deque<NodeId> queue{t.root_};
    int seen = 1;
    while (!queue.empty()) {
        NodeId q = queue.front();
        queue.pop_front();
        for (NodeId c : t.nodes_[static_cast<std::size_t>(q)].children)
            if (c >= 0) {
                t.nodes_[static_cast<std::size_t>(c)].depth =
                    t.nodes_[static_cast<std::size_t>(q)].depth + 1;
                ++seen;
                queue.push_back(c);
            }
    }
    if (seen != a.num_states()) throw ParseError("nodes not reachable from the root");

    for (NodeId q = 0; q < a.num_states(); ++q)
        if (auto l = a.label(q)) {
            t.nodes_[static_cast<std::size_t>(q)].label = *l;
            ++t.label_version_;
        }
    for (NodeId q : dontcare) {
        if (q < 0 || q >= t.num_nodes()) throw ParseError("dontcare node out of range");
        if (t.nodes_[static_cast<std::size_t>(q)].label)
            throw ParseError("node both labeled and dontcare");
        t.nodes_[static_cast<std::size_t>(q)].dont_care = true;
    }

    Basis basis;
    basis.members.assign(basis_lines.size(), -1);
    for (auto [id, index] : basis_lines) {
        if (id < 0 || id >= t.num_nodes()) throw ParseError("basis node out of range");
        if (index < 0 || index >= static_cast<int>(basis_lines.size()))
            throw ParseError("basis indices must be dense");
        if (basis.members[static_cast<std::size_t>(index)] >= 0)
            throw ParseError("duplicate basis index");
        basis.members[static_cast<std::size_t>(index)] = id;
    }
    for (std::size_t i = 1; i < basis.members.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (basis.members[i] == basis.members[j])
                throw ParseError("duplicate basis member");
    return {std::move(t), std::move(basis)};
}

std::pair<ObservationTree, Basis> parse_tree_text(const std::string& text) {
    std::istringstream in(text);
    return parse_tree_text(in);
}

}  // namespace sepdfa
