#include "sepdfa/synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <deque>
#include <sstream>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace sepdfa {

void validate_problem(const SynthesisProblem& p) {
    if (p.n < 1) throw std::invalid_argument("synthesis: state bound must be positive");
    if (p.basis.size() > p.n)
        throw std::invalid_argument("synthesis: basis larger than the state bound");
    for (NodeId b : p.basis.members)
        if (b < 0 || b >= p.tree.num_nodes())
            throw std::invalid_argument("synthesis: basis node out of range");
    for (std::size_t i = 0; i < p.basis.members.size(); ++i)
        for (std::size_t j = i + 1; j < p.basis.members.size(); ++j) {
            if (p.basis.members[i] == p.basis.members[j])
                throw std::invalid_argument("synthesis: duplicate basis member");
            if (!p.tree.related(p.relation, p.basis.members[i], p.basis.members[j]))
                throw std::invalid_argument("synthesis: basis members not pairwise separated");
        }
}

namespace {

// 1-based node numbering with basis member i at index i+1.
std::vector<int> smt_node_index(const SynthesisProblem& p) {
    const int m = p.tree.num_nodes();
    std::vector<int> index(static_cast<std::size_t>(m), 0);
    for (int i = 0; i < p.basis.size(); ++i)
        index[static_cast<std::size_t>(p.basis.members[static_cast<std::size_t>(i)])] =
            i + 1;
    int next = p.basis.size() + 1;
    for (NodeId q = 0; q < m; ++q)
        if (index[static_cast<std::size_t>(q)] == 0) index[static_cast<std::size_t>(q)] = next++;
    return index;
}

// Breadth-first node order, children by symbol.
std::vector<NodeId> bfs_order(const ObservationTree& t) {
    std::vector<NodeId> order;
    std::deque<NodeId> queue{t.root()};
    while (!queue.empty()) {
        NodeId q = queue.front();
        queue.pop_front();
        order.push_back(q);
        for (SymbolId x = 0; x < t.num_symbols(); ++x)
            if (auto c = t.child(q, x)) queue.push_back(*c);
    }
    return order;
}

// Allowed hypothesis indices per node under the domain clauses: basis nodes
// are pinned, other nodes may take a candidate's index or any index past the
// basis block.
struct Domains {
    std::vector<int> fixed;                // node -> index, -1 when free
    std::vector<std::vector<char>> allow;  // node -> allowed flags, empty when free
};

Domains make_domains(const SynthesisProblem& p) {
    const int m = p.tree.num_nodes();
    Domains d;
    d.fixed.assign(static_cast<std::size_t>(m), -1);
    d.allow.resize(static_cast<std::size_t>(m));
    if (!p.redundant_clauses) return d;
    const int s = p.basis.size();
    for (int i = 0; i < s; ++i)
        d.fixed[static_cast<std::size_t>(p.basis.members[static_cast<std::size_t>(i)])] = i;
    for (NodeId q = 0; q < m; ++q) {
        if (d.fixed[static_cast<std::size_t>(q)] >= 0) continue;
        std::vector<char> allow(static_cast<std::size_t>(p.n), 0);
        for (int v = s; v < p.n; ++v) allow[static_cast<std::size_t>(v)] = 1;
        for (int i = 0; i < s; ++i)
            if (!p.tree.related(p.relation, q, p.basis.members[static_cast<std::size_t>(i)]))
                allow[static_cast<std::size_t>(i)] = 1;
        d.allow[static_cast<std::size_t>(q)] = std::move(allow);
    }
    return d;
}

// Prunes unreachable hypothesis states and renumbers so that basis member i
// sits on state i, preserving the relative order of the remaining states.
HypothesisModel finalize_model(const SynthesisProblem& p, const std::vector<int>& delta,
                               const std::vector<int>& fin, const std::vector<int>& fraw) {
    const int n = p.n;
    const int k = p.tree.num_symbols();
    const int init = fraw[static_cast<std::size_t>(p.tree.root())];

    std::vector<bool> reach(static_cast<std::size_t>(n), false);
    std::deque<int> queue{init};
    reach[static_cast<std::size_t>(init)] = true;
    while (!queue.empty()) {
        int s = queue.front();
        queue.pop_front();
        for (int x = 0; x < k; ++x) {
            int t = delta[static_cast<std::size_t>(s) * k + x];
            if (!reach[static_cast<std::size_t>(t)]) {
                reach[static_cast<std::size_t>(t)] = true;
                queue.push_back(t);
            }
        }
    }

    std::vector<int> renum(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < p.basis.size(); ++i) {
        int s = fraw[static_cast<std::size_t>(p.basis.members[static_cast<std::size_t>(i)])];
        if (renum[static_cast<std::size_t>(s)] >= 0)
            throw std::logic_error("two basis members share a hypothesis state");
        renum[static_cast<std::size_t>(s)] = i;
    }
    int next = p.basis.size();
    for (int s = 0; s < n; ++s)
        if (reach[static_cast<std::size_t>(s)] && renum[static_cast<std::size_t>(s)] < 0)
            renum[static_cast<std::size_t>(s)] = next++;

    ThreeNfa hyp(next, k, renum[static_cast<std::size_t>(init)]);
    for (int s = 0; s < n; ++s) {
        if (!reach[static_cast<std::size_t>(s)]) continue;
        int rs = renum[static_cast<std::size_t>(s)];
        hyp.set_label(rs, fin[static_cast<std::size_t>(s)] == 1 ? Label::accept
                                                                : Label::reject);
        for (int x = 0; x < k; ++x)
            hyp.add_transition(rs, x,
                               renum[static_cast<std::size_t>(
                                   delta[static_cast<std::size_t>(s) * k + x])]);
    }

    StateMap f;
    f.to.resize(fraw.size());
    for (std::size_t q = 0; q < fraw.size(); ++q)
        f.to[q] = renum[static_cast<std::size_t>(fraw[q])];
    return HypothesisModel{CompleteDfa(std::move(hyp)), std::move(f)};
}

class InternalSearch {
public:
    InternalSearch(const SynthesisProblem& p, std::uint64_t budget,
                   std::optional<std::chrono::steady_clock::time_point> deadline)
        : p_(p),
          n_(p.n),
          k_(p.tree.num_symbols()),
          budget_(budget),
          deadline_(deadline),
          order_(bfs_order(p.tree)),
          domains_(make_domains(p)),
          f_(static_cast<std::size_t>(p.tree.num_nodes()), -1),
          delta_(static_cast<std::size_t>(p.n) * p.tree.num_symbols(), -1),
          final_(static_cast<std::size_t>(p.n), -1),
          used_(p.redundant_clauses ? p.basis.size() : 0) {}

    SynthesisOutcome run() {
        if (!expand(0)) return {};
        // Free cells are completed by a fixed rule: self-looping transitions
        // and rejecting states; any completion satisfies the constraints.
        for (int s = 0; s < n_; ++s) {
            if (final_[static_cast<std::size_t>(s)] < 0)
                final_[static_cast<std::size_t>(s)] = 0;
            for (int x = 0; x < k_; ++x)
                if (delta_[static_cast<std::size_t>(s) * k_ + x] < 0)
                    delta_[static_cast<std::size_t>(s) * k_ + x] = s;
        }
        return {finalize_model(p_, delta_, final_, f_)};
    }

private:
    bool value_ok(NodeId q, int v) const {
        if (domains_.fixed[static_cast<std::size_t>(q)] >= 0)
            return v == domains_.fixed[static_cast<std::size_t>(q)];
        const auto& allow = domains_.allow[static_cast<std::size_t>(q)];
        return allow.empty() || allow[static_cast<std::size_t>(v)];
    }

    // Tries f(node) = v plus the propagations it entails; recurses and rolls
    // back on failure.
    bool attempt(std::size_t pos, NodeId node, int v, int cell) {
        if (budget_ == 0)
            throw SynthesisBudgetError("synthesis: node expansion budget exhausted");
        --budget_;
        // Poll the clock on the first attempt and then every 4096th, so the
        // check stays off the hot path but a stale deadline fires at once.
        if (deadline_ && (ticks_++ & 0xfff) == 0 &&
            std::chrono::steady_clock::now() >= *deadline_)
            throw SynthesisBudgetError("synthesis: time budget exhausted");

        bool cell_set = false;
        if (cell >= 0 && delta_[static_cast<std::size_t>(cell)] < 0) {
            delta_[static_cast<std::size_t>(cell)] = v;
            cell_set = true;
        }
        bool final_set = false;
        auto label = p_.tree.label(node);
        if (label) {
            int bit = *label == Label::accept ? 1 : 0;
            if (final_[static_cast<std::size_t>(v)] < 0) {
                final_[static_cast<std::size_t>(v)] = bit;
                final_set = true;
            } else if (final_[static_cast<std::size_t>(v)] != bit) {
                if (cell_set) delta_[static_cast<std::size_t>(cell)] = -1;
                return false;
            }
        }
        f_[static_cast<std::size_t>(node)] = v;
        int used_before = used_;
        used_ = std::max(used_, v + 1);

        if (expand(pos + 1)) return true;

        used_ = used_before;
        f_[static_cast<std::size_t>(node)] = -1;
        if (final_set) final_[static_cast<std::size_t>(v)] = -1;
        if (cell_set) delta_[static_cast<std::size_t>(cell)] = -1;
        return false;
    }

    bool expand(std::size_t pos) {
        if (pos == order_.size()) return true;
        NodeId node = order_[pos];

        int cell = -1;
        if (auto par = p_.tree.parent(node)) {
            int fp = f_[static_cast<std::size_t>(*par)];
            cell = fp * k_ + p_.tree.incoming_symbol(node);
            int forced = delta_[static_cast<std::size_t>(cell)];
            if (forced >= 0)
                return value_ok(node, forced) && attempt(pos, node, forced, cell);
        }
        if (int fixed = domains_.fixed[static_cast<std::size_t>(node)]; fixed >= 0)
            return attempt(pos, node, fixed, cell);
        // A fresh state may be opened only in index order; this only skips
        // renamings of models that are also reachable with lower indices.
        int limit = std::min(used_, n_ - 1);
        for (int v = 0; v <= limit; ++v)
            if (value_ok(node, v) && attempt(pos, node, v, cell)) return true;
        return false;
    }

    const SynthesisProblem& p_;
    int n_;
    int k_;
    std::uint64_t budget_;
    std::optional<std::chrono::steady_clock::time_point> deadline_;
    std::uint64_t ticks_ = 0;
    std::vector<NodeId> order_;
    Domains domains_;
    std::vector<int> f_;
    std::vector<int> delta_;
    std::vector<int> final_;
    int used_;
};

}  // namespace

SynthesisOutcome solve_internal(
    const SynthesisProblem& p, std::uint64_t node_budget,
    std::optional<std::chrono::steady_clock::time_point> deadline) {
    validate_problem(p);
    SynthesisOutcome outcome = InternalSearch(p, node_budget, deadline).run();
    if (outcome.sat() && !verify_model(p, *outcome.model))
        throw std::logic_error("synthesis: produced model failed verification");
    return outcome;
}

std::string encode_smtlib(const SynthesisProblem& p) {
    validate_problem(p);
    const int n = p.n;
    const int k = p.tree.num_symbols();
    const int m = p.tree.num_nodes();
    const int s = p.basis.size();
    std::vector<int> index = smt_node_index(p);

    std::ostringstream out;
    out << "(set-logic UFLIA)\n";
    out << "(declare-fun delta (Int Int) Int)\n";
    out << "(declare-fun final (Int) Int)\n";
    out << "(declare-fun f (Int) Int)\n";
    out << "; ranges\n";
    for (int st = 1; st <= n; ++st)
        for (int x = 0; x < k; ++x)
            out << "(assert (and (<= 1 (delta " << st << ' ' << x << ")) (<= (delta "
                << st << ' ' << x << ") " << n << ")))\n";
    for (int st = 1; st <= n; ++st)
        out << "(assert (or (= (final " << st << ") 0) (= (final " << st << ") 1)))\n";
    for (int j = 1; j <= m; ++j)
        out << "(assert (and (<= 1 (f " << j << ")) (<= (f " << j << ") " << n << ")))\n";

    out << "; tree transitions\n";
    for (NodeId q = 0; q < m; ++q)
        for (SymbolId x = 0; x < k; ++x)
            if (auto c = p.tree.child(q, x))
                out << "(assert (= (f " << index[static_cast<std::size_t>(*c)]
                    << ") (delta (f " << index[static_cast<std::size_t>(q)] << ") " << x
                    << ")))\n";

    out << "; node labels\n";
    for (NodeId q = 0; q < m; ++q)
        if (auto l = p.tree.label(q))
            out << "(assert (= (final (f " << index[static_cast<std::size_t>(q)] << ")) "
                << (*l == Label::accept ? 1 : 0) << "))\n";

    if (p.redundant_clauses) {
        out << "; basis fixing\n";
        for (int i = 1; i <= s; ++i)
            out << "(assert (= (f " << i << ") " << i << "))\n";
        out << "; allowed images\n";
        for (NodeId q = 0; q < m; ++q) {
            if (p.basis.contains(q)) continue;
            std::vector<std::string> alts;
            for (int v = s + 1; v <= n; ++v)
                alts.push_back("(= (f " + std::to_string(index[static_cast<std::size_t>(q)]) +
                               ") " + std::to_string(v) + ")");
            for (int i = 0; i < s; ++i)
                if (!p.tree.related(p.relation, q,
                                    p.basis.members[static_cast<std::size_t>(i)]))
                    alts.push_back("(= (f " +
                                   std::to_string(index[static_cast<std::size_t>(q)]) + ") " +
                                   std::to_string(i + 1) + ")");
            if (alts.empty()) {
                out << "(assert false)\n";
            } else if (alts.size() == 1) {
                out << "(assert " << alts[0] << ")\n";
            } else {
                out << "(assert (or";
                for (const std::string& a : alts) out << ' ' << a;
                out << "))\n";
            }
        }
    }

    out << "(check-sat)\n";
    for (int st = 1; st <= n; ++st)
        for (int x = 0; x < k; ++x)
            out << "(get-value ((delta " << st << ' ' << x << ")))\n";
    for (int st = 1; st <= n; ++st) out << "(get-value ((final " << st << ")))\n";
    for (int j = 1; j <= m; ++j) out << "(get-value ((f " << j << ")))\n";
    return out.str();
}

bool verify_model(const SynthesisProblem& p, const ThreeNfa& hyp, const StateMap& f) {
    if (hyp.num_states() > p.n) return false;
    if (!hyp.deterministic() || !hyp.complete()) return false;
    if (static_cast<int>(f.to.size()) != p.tree.num_nodes()) return false;
    for (StateId img : f.to)
        if (img < 0 || img >= hyp.num_states()) return false;
    if (!check_morphism(p.tree.to_three_nfa(), hyp, f)) return false;
    for (int i = 0; i < p.basis.size(); ++i)
        if (f(p.basis.members[static_cast<std::size_t>(i)]) != i) return false;
    return true;
}

bool verify_model(const SynthesisProblem& p, const HypothesisModel& model) {
    return verify_model(p, model.hypothesis.inner(), model.morphism);
}

namespace {

// Runs a command with `input` on stdin and returns its stdout. Both pipes are
// serviced through poll so neither side can deadlock on a full buffer.
std::string run_process(const std::string& command, const std::string& input) {
    std::vector<std::string> parts;
    std::istringstream split(command);
    for (std::string word; split >> word;) parts.push_back(word);
    if (parts.empty()) throw SolverError("solver command is empty");

    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
        throw SolverError("solver: pipe failed");

    pid_t pid = fork();
    if (pid < 0) throw SolverError("solver: fork failed");
    if (pid == 0) {
        dup2(to_child[0], STDIN_FILENO);
        dup2(from_child[1], STDOUT_FILENO);
        close(to_child[0]);
        close(to_child[1]);
        close(from_child[0]);
        close(from_child[1]);
        std::vector<char*> argv;
        for (std::string& part : parts) argv.push_back(part.data());
        argv.push_back(nullptr);
        execvp(argv[0], argv.data());
        _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    fcntl(to_child[1], F_SETFL, O_NONBLOCK);

    std::string output;
    std::size_t written = 0;
    bool write_open = true;
    char buf[4096];
    while (true) {
        pollfd fds[2];
        nfds_t count = 0;
        fds[count++] = {from_child[0], POLLIN, 0};
        if (write_open) fds[count++] = {to_child[1], POLLOUT, 0};
        if (poll(fds, count, -1) < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (fds[0].revents & (POLLIN | POLLHUP)) {
            ssize_t got = read(from_child[0], buf, sizeof buf);
            if (got > 0) {
                output.append(buf, static_cast<std::size_t>(got));
                continue;
            }
            if (got == 0) break;
            if (errno != EAGAIN && errno != EINTR) break;
        }
        if (write_open && count > 1 && fds[1].revents & (POLLOUT | POLLERR)) {
            if (written == input.size()) {
                close(to_child[1]);
                write_open = false;
                continue;
            }
            ssize_t put = write(to_child[1], input.data() + written,
                                input.size() - written);
            if (put > 0) {
                written += static_cast<std::size_t>(put);
                if (written == input.size()) {
                    close(to_child[1]);
                    write_open = false;
                }
            } else if (put < 0 && errno != EAGAIN && errno != EINTR) {
                close(to_child[1]);  // e.g. solver exited early
                write_open = false;
            }
        }
    }
    if (write_open) close(to_child[1]);
    close(from_child[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    if (WIFEXITED(status) && WEXITSTATUS(status) == 127)
        throw SolverError("solver: cannot execute '" + command + "'");
    return output;
}

// Minimal s-expression reader for solver replies.
struct SExpr {
    std::string atom;
    std::vector<SExpr> list;
    bool is_atom = false;
};

std::optional<SExpr> read_sexpr(const std::string& text, std::size_t& pos) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos >= text.size()) return std::nullopt;
    if (text[pos] == '(') {
        ++pos;
        SExpr node;
        while (true) {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
                ++pos;
            if (pos >= text.size()) throw SolverError("solver: unbalanced reply");
            if (text[pos] == ')') {
                ++pos;
                return node;
            }
            auto sub = read_sexpr(text, pos);
            if (!sub) throw SolverError("solver: unbalanced reply");
            node.list.push_back(std::move(*sub));
        }
    }
    if (text[pos] == ')') throw SolverError("solver: stray ')' in reply");
    SExpr atom;
    atom.is_atom = true;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
           text[pos] != '(' && text[pos] != ')')
        atom.atom.push_back(text[pos++]);
    return atom;
}

int sexpr_int(const SExpr& e) {
    if (e.is_atom) {
        try {
            return std::stoi(e.atom);
        } catch (...) {
            throw SolverError("solver: expected integer, got '" + e.atom + "'");
        }
    }
    // negative numbers print as (- k)
    if (e.list.size() == 2 && e.list[0].is_atom && e.list[0].atom == "-")
        return -sexpr_int(e.list[1]);
    throw SolverError("solver: expected integer value");
}

SynthesisOutcome parse_solver_reply(const SynthesisProblem& p, const std::string& reply) {
    std::istringstream lines(reply);
    std::string line;
    std::size_t value_start = 0;
    bool sat = false;
    bool verdict_found = false;
    std::size_t consumed = 0;
    while (std::getline(lines, line)) {
        std::size_t line_len = line.size() + 1;
        std::string trimmed = line;
        trimmed.erase(0, trimmed.find_first_not_of(" \t\r"));
        trimmed.erase(trimmed.find_last_not_of(" \t\r") + 1);
        if (trimmed == "sat" || trimmed == "unsat") {
            sat = trimmed == "sat";
            verdict_found = true;
            value_start = consumed + line_len;
            break;
        }
        consumed += line_len;
    }
    if (!verdict_found) throw SolverError("solver: no sat/unsat verdict in reply");
    if (!sat) return {};

    const int n = p.n;
    const int k = p.tree.num_symbols();
    const int m = p.tree.num_nodes();
    std::vector<int> delta(static_cast<std::size_t>(n) * k, -1);
    std::vector<int> fin(static_cast<std::size_t>(n), -1);
    std::vector<int> fval(static_cast<std::size_t>(m + 1), -1);  // 1-based

    std::size_t pos = std::min(value_start, reply.size());
    while (true) {
        std::optional<SExpr> form;
        form = read_sexpr(reply, pos);
        if (!form) break;
        // Each reply form looks like (((f 3) 2)).
        if (form->is_atom || form->list.size() != 1 || form->list[0].list.size() != 2)
            throw SolverError("solver: malformed value reply");
        const SExpr& cell = form->list[0].list[0];
        const SExpr& value = form->list[0].list[1];
        if (cell.is_atom || cell.list.empty() || !cell.list[0].is_atom)
            throw SolverError("solver: malformed value cell");
        const std::string& fn = cell.list[0].atom;
        int v = sexpr_int(value);
        if (fn == "delta" && cell.list.size() == 3) {
            int st = sexpr_int(cell.list[1]);
            int x = sexpr_int(cell.list[2]);
            if (st < 1 || st > n || x < 0 || x >= k || v < 1 || v > n)
                throw SolverError("solver: transition value out of range");
            delta[static_cast<std::size_t>(st - 1) * k + x] = v - 1;
        } else if (fn == "final" && cell.list.size() == 2) {
            int st = sexpr_int(cell.list[1]);
            if (st < 1 || st > n || v < 0 || v > 1)
                throw SolverError("solver: final value out of range");
            fin[static_cast<std::size_t>(st - 1)] = v;
        } else if (fn == "f" && cell.list.size() == 2) {
            int j = sexpr_int(cell.list[1]);
            if (j < 1 || j > m || v < 1 || v > n)
                throw SolverError("solver: node map value out of range");
            fval[static_cast<std::size_t>(j)] = v - 1;
        } else {
            throw SolverError("solver: unknown cell '" + fn + "'");
        }
    }
    for (int x : delta)
        if (x < 0) throw SolverError("solver: incomplete transition model");
    for (int x : fin)
        if (x < 0) throw SolverError("solver: incomplete final-state model");

    std::vector<int> index = smt_node_index(p);
    std::vector<int> fraw(static_cast<std::size_t>(m), -1);
    for (NodeId q = 0; q < m; ++q) {
        int v = fval[static_cast<std::size_t>(index[static_cast<std::size_t>(q)])];
        if (v < 0) throw SolverError("solver: incomplete node map");
        fraw[static_cast<std::size_t>(q)] = v;
    }
    return {finalize_model(p, delta, fin, fraw)};
}

}  // namespace

SynthesisOutcome solve(const SynthesisProblem& p, const SolveOptions& opts) {
    validate_problem(p);
    if (opts.backend == Backend::internal)
        return solve_internal(p, opts.node_budget, opts.deadline);
    if (opts.solver_command.empty())
        throw SolverError("external backend selected but no solver command configured");
    std::string reply = run_process(opts.solver_command, encode_smtlib(p));
    SynthesisOutcome outcome = parse_solver_reply(p, reply);
    if (outcome.sat() && !verify_model(p, *outcome.model))
        throw SolverError("solver: model failed verification");
    return outcome;
}

}  // namespace sepdfa
