#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "sepdfa/observation_tree.hpp"
#include "sepdfa/synthesis.hpp"
#include "support.hpp"

using namespace sepdfa;
using namespace test_support;

namespace {

// Reference decision procedure: a hypothesis with at most n states consistent
// with the tree exists iff some transition table folds every labeled node
// class conflict-free. Enumerates all n^(n*k) tables; the image of the root
// can be pinned to 0 because states are interchangeable.
bool synth_oracle(const ObservationTree& t, int n) {
    const int k = t.num_symbols();
    const int m = t.num_nodes();
    std::vector<int> delta(static_cast<std::size_t>(n) * k, 0);
    std::vector<int> f(static_cast<std::size_t>(m), 0);
    std::vector<int> lab(static_cast<std::size_t>(n), -1);
    while (true) {
        f[static_cast<std::size_t>(t.root())] = 0;
        for (NodeId q = 1; q < m; ++q)
            f[static_cast<std::size_t>(q)] =
                delta[static_cast<std::size_t>(f[static_cast<std::size_t>(*t.parent(q))]) * k +
                      t.incoming_symbol(q)];
        std::fill(lab.begin(), lab.end(), -1);
        bool ok = true;
        for (NodeId q = 0; q < m && ok; ++q) {
            auto l = t.label(q);
            if (!l) continue;
            int bit = *l == Label::accept ? 1 : 0;
            int& slot = lab[static_cast<std::size_t>(f[static_cast<std::size_t>(q)])];
            if (slot == -1)
                slot = bit;
            else if (slot != bit)
                ok = false;
        }
        if (ok) return true;
        int i = 0;
        for (; i < n * k; ++i) {
            if (++delta[static_cast<std::size_t>(i)] < n) break;
            delta[static_cast<std::size_t>(i)] = 0;
        }
        if (i == n * k) return false;
    }
}

// Largest-first greedy clique of pairwise separated nodes, capped at `cap`.
Basis greedy_basis(const ObservationTree& t, Relation mode, int cap) {
    Basis basis;
    for (NodeId q = 0; q < t.num_nodes() && basis.size() < cap; ++q) {
        bool fits = true;
        for (NodeId b : basis.members)
            if (!t.related(mode, q, b)) fits = false;
        if (fits) basis.members.push_back(q);
    }
    return basis;
}

ObservationTree salted_tree(std::mt19937_64& rng, std::uint64_t salt, int num_words,
                            int max_len, int num_symbols) {
    ObservationTree t(num_symbols);
    t.add_observation({}, hashed_answer({}, salt));
    for (int i = 0; i < num_words; ++i) {
        Word w = random_word(rng, num_symbols, max_len);
        t.add_observation(w, hashed_answer(w, salt));
    }
    return t;
}

SynthesisProblem random_problem(std::mt19937_64& rng, int k) {
    int pick = static_cast<int>(rng() % 10);
    int n = pick < 2 ? 1 : pick < 5 ? 2 : pick < 8 ? 3 : 4;
    if (k > 2) n = std::min(n, 3);
    int words = 3 + static_cast<int>(rng() % (n == 4 ? 10u : 14u));
    ObservationTree t = salted_tree(rng, rng(), words, 5, k);
    Basis basis = greedy_basis(t, Relation::apartness, n);
    return SynthesisProblem{std::move(t), std::move(basis), n, Relation::apartness, true};
}

// Acceptance of a word by the synthesized hypothesis must replay the tree
// label along every access path; checked directly, without check_morphism.
void check_model_against_tree(const SynthesisProblem& p, const HypothesisModel& model) {
    const CompleteDfa& h = model.hypothesis;
    REQUIRE(h.num_states() <= p.n);
    for (NodeId q = 0; q < p.tree.num_nodes(); ++q) {
        StateId s = h.run(h.initial(), p.tree.access(q));
        CHECK(s == model.morphism(q));
        if (auto l = p.tree.label(q)) CHECK(h.state_label(s) == *l);
    }
    for (int i = 0; i < p.basis.size(); ++i)
        CHECK(model.morphism(p.basis.members[static_cast<std::size_t>(i)]) == i);
}

// Parity fixture: accepts exactly the even number of a's seen so far, with
// one don't-care leaf. Nodes: 0=eps(+), 1=a(-), 2=b(-), 3=aa(+), 4=ab(?).
ObservationTree parity_tree() {
    ObservationTree t(2);
    t.add_observation({}, Answer::accept);
    t.add_observation({0}, Answer::reject);
    t.add_observation({1}, Answer::reject);
    t.add_observation({0, 0}, Answer::accept);
    t.add_observation({0, 1}, Answer::dont_care);
    return t;
}

const char* mini_solver_cmd() {
    static std::string cmd = std::string("python3 ") + TEST_SOURCE_DIR + "/mini_smt_solver.py";
    return cmd.c_str();
}

}  // namespace

TEST_CASE("problem validation rejects malformed inputs") {
    ObservationTree t = parity_tree();
    Basis good;
    good.members = {0, 1};

    CHECK_THROWS_AS(validate_problem({t, good, 0}), std::invalid_argument);
    CHECK_THROWS_AS(validate_problem({t, good, 1}), std::invalid_argument);  // |S| > n
    CHECK_NOTHROW(validate_problem({t, good, 2}));

    Basis out_of_range;
    out_of_range.members = {0, 99};
    CHECK_THROWS_AS(validate_problem({t, out_of_range, 3}), std::invalid_argument);

    Basis duplicate;
    duplicate.members = {1, 1};
    CHECK_THROWS_AS(validate_problem({t, duplicate, 3}), std::invalid_argument);

    // eps and aa carry the same label and aa's subtree is a leaf: not apart.
    Basis unrelated;
    unrelated.members = {0, 3};
    CHECK_THROWS_AS(validate_problem({t, unrelated, 3}), std::invalid_argument);
    CHECK_THROWS_AS(solve_internal({t, unrelated, 3}), std::invalid_argument);
}

TEST_CASE("internal solver agrees with the enumeration oracle") {
    std::mt19937_64 rng(20240811);
    int sat_count = 0;
    int unsat_count = 0;
    for (int round = 0; round < 400; ++round) {
        SynthesisProblem p = random_problem(rng, 2);
        bool expect = synth_oracle(p.tree, p.n);
        SynthesisOutcome out = solve_internal(p);
        REQUIRE(out.sat() == expect);
        if (out.sat()) {
            ++sat_count;
            check_model_against_tree(p, *out.model);
        } else {
            ++unsat_count;
        }
    }
    for (int round = 0; round < 60; ++round) {
        SynthesisProblem p = random_problem(rng, 3);
        REQUIRE(solve_internal(p).sat() == synth_oracle(p.tree, p.n));
    }
    CHECK(sat_count > 40);
    CHECK(unsat_count > 40);
}

TEST_CASE("verdict is unchanged by clause redundancy and relation mode") {
    std::mt19937_64 rng(77001);
    int flips = 0;
    for (int round = 0; round < 120; ++round) {
        SynthesisProblem p = random_problem(rng, 2);
        bool base = solve_internal(p).sat();
        for (bool redundant : {true, false}) {
            for (Relation mode : {Relation::apartness, Relation::incompatibility}) {
                SynthesisProblem q = p;
                q.redundant_clauses = redundant;
                q.relation = mode;
                SynthesisOutcome out = solve_internal(q);
                CHECK(out.sat() == base);
                if (out.sat()) check_model_against_tree(q, *out.model);
            }
        }
        if (base) ++flips;
    }
    CHECK(flips > 20);
    CHECK(flips < 120);
}

TEST_CASE("parity fixture needs exactly two states") {
    ObservationTree t = parity_tree();
    Basis basis;
    basis.members = {0, 1};

    SynthesisProblem one{t, Basis{{0}}, 1};
    CHECK_FALSE(solve_internal(one).sat());

    SynthesisProblem two{t, basis, 2};
    SynthesisOutcome out = solve_internal(two);
    REQUIRE(out.sat());
    const CompleteDfa& h = out.model->hypothesis;
    CHECK(h.num_states() == 2);
    CHECK(h.accepts({}));
    CHECK_FALSE(h.accepts({0}));
    CHECK_FALSE(h.accepts({1}));
    CHECK(h.accepts({0, 0}));
    CHECK(out.model->morphism(0) == 0);
    CHECK(out.model->morphism(1) == 1);
}

TEST_CASE("satisfiability is monotone in the state bound") {
    std::mt19937_64 rng(5150);
    int reached_sat = 0;
    for (int round = 0; round < 60; ++round) {
        ObservationTree t = salted_tree(rng, rng(), 10, 5, 2);
        bool seen_sat = false;
        for (int n = 1; n <= 4; ++n) {
            Basis basis = greedy_basis(t, Relation::apartness, n);
            bool sat = solve_internal({t, basis, n}).sat();
            if (seen_sat) CHECK(sat);
            seen_sat = seen_sat || sat;
        }
        if (seen_sat) ++reached_sat;
    }
    CHECK(reached_sat > 30);
}

TEST_CASE("models for a grown tree still verify against the original problem") {
    std::mt19937_64 rng(909090);
    int grown_sat = 0;
    for (int round = 0; round < 80; ++round) {
        std::uint64_t salt = rng();
        std::mt19937_64 words(rng());
        ObservationTree t = salted_tree(words, salt, 8, 4, 2);
        int n = 2 + static_cast<int>(rng() % 3);
        Basis basis = greedy_basis(t, Relation::apartness, n);
        SynthesisProblem original{t, basis, n};
        bool original_sat = solve_internal(original).sat();

        ObservationTree grown = t;
        for (int i = 0; i < 6; ++i) {
            Word w = random_word(words, 2, 6);
            grown.add_observation(w, hashed_answer(w, salt));
        }
        SynthesisProblem extended{grown, basis, n};
        SynthesisOutcome out = solve_internal(extended);
        if (!original_sat) CHECK_FALSE(out.sat());
        if (!out.sat()) continue;
        ++grown_sat;
        StateMap restricted;
        restricted.to.assign(out.model->morphism.to.begin(),
                             out.model->morphism.to.begin() + t.num_nodes());
        CHECK(verify_model(original, out.model->hypothesis.inner(), restricted));
    }
    CHECK(grown_sat > 20);
}

TEST_CASE("encoding is byte-deterministic with a fixed golden form") {
    ObservationTree t(1);
    t.add_observation({}, Answer::accept);
    t.add_observation({0}, Answer::reject);
    SynthesisProblem p{t, Basis{{0}}, 2};

    std::string script = encode_smtlib(p);
    CHECK(script == encode_smtlib(p));

    ObservationTree again(1);
    again.add_observation({}, Answer::accept);
    again.add_observation({0}, Answer::reject);
    CHECK(script == encode_smtlib({again, Basis{{0}}, 2}));

    const char* expected =
        "(set-logic UFLIA)\n"
        "(declare-fun delta (Int Int) Int)\n"
        "(declare-fun final (Int) Int)\n"
        "(declare-fun f (Int) Int)\n"
        "; ranges\n"
        "(assert (and (<= 1 (delta 1 0)) (<= (delta 1 0) 2)))\n"
        "(assert (and (<= 1 (delta 2 0)) (<= (delta 2 0) 2)))\n"
        "(assert (or (= (final 1) 0) (= (final 1) 1)))\n"
        "(assert (or (= (final 2) 0) (= (final 2) 1)))\n"
        "(assert (and (<= 1 (f 1)) (<= (f 1) 2)))\n"
        "(assert (and (<= 1 (f 2)) (<= (f 2) 2)))\n"
        "; tree transitions\n"
        "(assert (= (f 2) (delta (f 1) 0)))\n"
        "; node labels\n"
        "(assert (= (final (f 1)) 1))\n"
        "(assert (= (final (f 2)) 0))\n"
        "; basis fixing\n"
        "(assert (= (f 1) 1))\n"
        "; allowed images\n"
        "(assert (= (f 2) 2))\n"
        "(check-sat)\n"
        "(get-value ((delta 1 0)))\n"
        "(get-value ((delta 2 0)))\n"
        "(get-value ((final 1)))\n"
        "(get-value ((final 2)))\n"
        "(get-value ((f 1)))\n"
        "(get-value ((f 2)))\n";
    CHECK(script == expected);

    SynthesisProblem lean = p;
    lean.redundant_clauses = false;
    std::string lean_script = encode_smtlib(lean);
    CHECK(lean_script.find("basis fixing") == std::string::npos);
    CHECK(lean_script.find("allowed images") == std::string::npos);
    CHECK(lean_script.find("(check-sat)") != std::string::npos);
}

TEST_CASE("encoding emits a domain clause per unanchored node") {
    ObservationTree t = parity_tree();
    Basis basis;
    basis.members = {0, 1};
    std::string script = encode_smtlib({t, basis, 3});
    // b is compatible with a, so mapping onto a's index stays allowed.
    CHECK(script.find("(assert (or (= (f 3) 3) (= (f 3) 2)))") != std::string::npos);
    // aa is compatible with eps only.
    CHECK(script.find("(assert (or (= (f 4) 3) (= (f 4) 1)))") != std::string::npos);
    CHECK(script.find("(assert (= (f 1) 1))") != std::string::npos);
    CHECK(script.find("(assert (= (f 2) 2))") != std::string::npos);
}

TEST_CASE("external backend matches the internal one via the bundled solver") {
    std::mt19937_64 rng(31337);
    SolveOptions external;
    external.backend = Backend::external_smt;
    external.solver_command = mini_solver_cmd();
    int sat_count = 0;
    int unsat_count = 0;
    for (int round = 0; round < 60; ++round) {
        int pick = static_cast<int>(rng() % 10);
        int n = pick < 3 ? 1 : pick < 7 ? 2 : 3;
        ObservationTree t = salted_tree(rng, rng(), 3 + static_cast<int>(rng() % 7), 4, 2);
        Basis basis = greedy_basis(t, Relation::apartness, n);
        SynthesisProblem p{std::move(t), std::move(basis), n};
        if (round % 3 == 0) p.redundant_clauses = false;
        bool expect = solve_internal(p).sat();
        SynthesisOutcome out = solve(p, external);
        REQUIRE(out.sat() == expect);
        if (out.sat()) {
            ++sat_count;
            check_model_against_tree(p, *out.model);
        } else {
            ++unsat_count;
        }
    }
    CHECK(sat_count > 10);
    CHECK(unsat_count > 10);
}

TEST_CASE("external backend failure modes raise solver errors") {
    ObservationTree t = parity_tree();
    SynthesisProblem p{t, Basis{{0, 1}}, 2};

    SolveOptions opts;
    opts.backend = Backend::external_smt;

    opts.solver_command = "";
    CHECK_THROWS_AS(solve(p, opts), SolverError);

    opts.solver_command = "sepdfa-no-such-solver-binary";
    CHECK_THROWS_AS(solve(p, opts), SolverError);

    opts.solver_command = "true";  // exits without printing a verdict
    CHECK_THROWS_AS(solve(p, opts), SolverError);

    opts.solver_command = "echo sat";  // verdict without any model values
    CHECK_THROWS_AS(solve(p, opts), SolverError);

    opts.solver_command = "echo unsat";  // a bare verdict is a complete answer
    CHECK_FALSE(solve(p, opts).sat());
}

TEST_CASE("search budget exhaustion is distinct from unsat") {
    std::mt19937_64 rng(4242);
    ObservationTree t = salted_tree(rng, 123456789, 14, 5, 2);
    Basis basis = greedy_basis(t, Relation::apartness, 4);
    SynthesisProblem p{std::move(t), std::move(basis), 4};

    CHECK_THROWS_AS(solve_internal(p, 1), SynthesisBudgetError);
    CHECK_NOTHROW(solve_internal(p));

    SolveOptions tight;
    tight.node_budget = 1;
    CHECK_THROWS_AS(solve(p, tight), SynthesisBudgetError);
}

TEST_CASE("search stops once its deadline has passed") {
    std::mt19937_64 rng(4242);
    ObservationTree t = salted_tree(rng, 123456789, 14, 5, 2);
    Basis basis = greedy_basis(t, Relation::apartness, 4);
    SynthesisProblem p{std::move(t), std::move(basis), 4};

    auto stale = std::chrono::steady_clock::now() - std::chrono::seconds(1);
    CHECK_THROWS_AS(solve_internal(p, 10'000'000, stale), SynthesisBudgetError);

    SolveOptions opts;
    opts.deadline = stale;
    CHECK_THROWS_AS(solve(p, opts), SynthesisBudgetError);

    opts.deadline = std::chrono::steady_clock::now() + std::chrono::minutes(5);
    CHECK_NOTHROW(solve(p, opts));
}

TEST_CASE("model verification catches each broken obligation") {
    ObservationTree t = parity_tree();
    Basis basis;
    basis.members = {0, 1};
    SynthesisProblem p{t, basis, 2};
    SynthesisOutcome out = solve_internal(p);
    REQUIRE(out.sat());
    CHECK(verify_model(p, *out.model));

    const HypothesisModel& good = *out.model;

    SUBCASE("basis nodes pinned to their own indices") {
        StateMap swapped = good.morphism;
        std::swap(swapped.to[0], swapped.to[1]);
        CHECK_FALSE(verify_model(p, good.hypothesis.inner(), swapped));
    }
    SUBCASE("a remapped interior node breaks the morphism") {
        StateMap bent = good.morphism;
        bent.to[3] = 1 - bent.to[3];
        CHECK_FALSE(verify_model(p, good.hypothesis.inner(), bent));
    }
    SUBCASE("morphism must cover every tree node") {
        StateMap short_map;
        short_map.to = {0, 1};
        CHECK_FALSE(verify_model(p, good.hypothesis.inner(), short_map));
    }
    SUBCASE("hypothesis larger than the bound") {
        ThreeNfa big(3, 2, 0);
        big.set_label(0, Label::accept);
        big.set_label(1, Label::reject);
        big.set_label(2, Label::reject);
        for (StateId s = 0; s < 3; ++s)
            for (SymbolId x = 0; x < 2; ++x) big.add_transition(s, x, (s + 1) % 3);
        StateMap f;
        f.to = {0, 1, 1, 2, 2};
        CHECK_FALSE(verify_model(p, big, f));
    }
    SUBCASE("a dangling transition fails completeness") {
        ThreeNfa partial(2, 2, 0);
        partial.set_label(0, Label::accept);
        partial.set_label(1, Label::reject);
        partial.add_transition(0, 0, 1);
        partial.add_transition(0, 1, 1);
        partial.add_transition(1, 0, 0);  // (1, b) missing
        CHECK_FALSE(verify_model(p, partial, good.morphism));
    }
    SUBCASE("a forked transition fails determinism") {
        ThreeNfa forked(2, 2, 0);
        forked.set_label(0, Label::accept);
        forked.set_label(1, Label::reject);
        forked.add_transition(0, 0, 1);
        forked.add_transition(0, 1, 1);
        forked.add_transition(1, 0, 0);
        forked.add_transition(1, 1, 0);
        forked.add_transition(1, 1, 1);
        CHECK_FALSE(verify_model(p, forked, good.morphism));
    }
    SUBCASE("wrong initial state breaks the root image") {
        ThreeNfa shifted = good.hypothesis.inner();
        ThreeNfa moved(shifted.num_states(), shifted.num_symbols(), 1);
        for (StateId s = 0; s < shifted.num_states(); ++s)
            if (auto l = shifted.label(s)) moved.set_label(s, *l);
        for (const Transition& tr : shifted.transitions())
            moved.add_transition(tr.src, tr.sym, tr.dst);
        CHECK_FALSE(verify_model(p, moved, good.morphism));
    }
}

TEST_CASE("solve dispatches to the internal backend by default") {
    std::mt19937_64 rng(2718);
    for (int round = 0; round < 20; ++round) {
        SynthesisProblem p = random_problem(rng, 2);
        CHECK(solve(p).sat() == solve_internal(p).sat());
    }
}
