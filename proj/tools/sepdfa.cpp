#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sepdfa/automata.hpp"
#include "sepdfa/bench.hpp"
#include "sepdfa/learner.hpp"
#include "sepdfa/observation_tree.hpp"
#include "sepdfa/synthesis.hpp"
#include "sepdfa/teacher.hpp"

namespace fs = std::filesystem;
using namespace sepdfa;

namespace {

struct LearnerFlags {
    std::string backend = "internal";
    std::string solver;
    std::string mode = "apartness";
    bool replace_basis = false;
    bool establish = false;
    bool establish_binary = false;
    bool no_redundant = false;
    std::uint64_t node_budget = 0;
};

void add_learner_flags(CLI::App* cmd, LearnerFlags& f) {
    cmd->add_option("--backend", f.backend, "Synthesis backend")
        ->check(CLI::IsMember({"internal", "smt"}))
        ->capture_default_str();
    cmd->add_option("--solver", f.solver,
                    "External solver command (default: $SEPDFA_SOLVER)");
    cmd->add_option("--mode", f.mode, "Relation used for promotion")
        ->check(CLI::IsMember({"apartness", "incompatibility"}))
        ->capture_default_str();
    cmd->add_flag("--replace-basis", f.replace_basis,
                  "Swap basis members for strictly shallower equivalents");
    cmd->add_flag("--establish", f.establish,
                  "After incompatibility promotions, query for apartness witnesses");
    cmd->add_flag("--establish-binary", f.establish_binary,
                  "Locate those witnesses by bisection instead of a linear replay");
    cmd->add_flag("--no-redundant-clauses", f.no_redundant,
                  "Drop the redundant solver constraints");
    cmd->add_option("--node-budget", f.node_budget,
                    "Internal search node cap per synthesis call")
        ->check(CLI::PositiveNumber);
}

LearnerConfig to_config(const LearnerFlags& f) {
    LearnerConfig config;
    config.promotion_relation = f.mode == "incompatibility"
                                    ? Relation::incompatibility
                                    : Relation::apartness;
    config.basis_replacement = f.replace_basis;
    config.establish_apartness_queries = f.establish;
    config.establish_binary_search = f.establish_binary;
    config.redundant_clauses = !f.no_redundant;
    if (f.node_budget != 0) config.synthesis_node_budget = f.node_budget;
    if (f.backend == "smt") {
        config.synthesis_backend = Backend::external_smt;
        config.solver_command = f.solver;
        if (config.solver_command.empty())
            if (const char* env = std::getenv("SEPDFA_SOLVER"))
                config.solver_command = env;
        if (config.solver_command.empty())
            throw std::runtime_error(
                "--backend smt needs --solver or the SEPDFA_SOLVER variable");
    }
    return config;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

// Tree + basis in the observation-tree text format, followed by a stats
// record on a comment line so the file stays loadable as a tree.
void write_snapshot(const std::string& path, const ObservationTree& tree,
                    const Basis& basis, int n, const RunRecord& record) {
    nlohmann::json stats{{"bound", n},
                         {"basis_size", basis.size()},
                         {"membership_queries", record.mem_q},
                         {"dontcare_answers", record.dontcare},
                         {"validity_queries", record.val_q},
                         {"unsat_rounds", record.unsat_rounds},
                         {"symbols", record.symbols},
                         {"time_ms", record.time_ms},
                         {"learned_size", record.learned_size},
                         {"outcome", record.outcome}};
    write_text_file(path, write_tree_text(tree, &basis) + "# stats " +
                              stats.dump() + "\n");
}

std::string dot_text(const ThreeNfa& a) {
    Alphabet alphabet = a.num_symbols() <= 26 ? Alphabet::lettered(a.num_symbols())
                                              : Alphabet::indexed(a.num_symbols());
    return write_dot(a, alphabet);
}

struct LearnOpts {
    std::string l1, l2, samples;
    LearnerFlags flags;
    std::string validity = "exact";
    std::uint64_t seed = 1;
    std::int64_t timeout_ms = 0;
    std::uint64_t max_queries = 0;
    std::string out, dot, snapshot;
};

int do_learn(const LearnOpts& o) {
    if (o.samples.empty() && o.l1.empty()) {
        std::cerr << "error: provide --l1/--l2 or --samples\n";
        return 1;
    }
    LearnerConfig config = to_config(o.flags);
    if (o.timeout_ms > 0) config.time_budget_ms = o.timeout_ms;
    config.max_membership_queries = o.max_queries;

    RunRecord record;
    record.backend = backend_name(config.synthesis_backend);
    record.mode = mode_name(config.promotion_relation);
    record.seed = o.seed;

    std::unique_ptr<Teacher> teacher;
    if (!o.samples.empty()) {
        if (o.validity == "random-wmethod") {
            std::cerr << "error: --validity random-wmethod needs --l1/--l2\n";
            return 1;
        }
        SampleSet sample = load_sample_file(o.samples);
        teacher = std::make_unique<SampleTeacher>(sample.num_symbols,
                                                  sample.positives,
                                                  sample.negatives);
        record.benchmark = fs::path(o.samples).stem().string();
    } else {
        CompleteDfa l1{load_automaton_file(o.l1)};
        CompleteDfa l2{load_automaton_file(o.l2)};
        CompleteDfa overlap =
            product_intersection(l1, l2, ProductMode::both_accept);
        if (auto w = shortest_word(overlap)) {
            std::cerr << "error: the languages overlap; both accept \"";
            for (SymbolId c : *w) std::cerr << c << ' ';
            std::cerr << "\" (" << w->size() << " symbols)\n";
            return 1;
        }
        record.benchmark = fs::path(o.l1).stem().string();
        record.target_size = l1.num_states();
        if (o.validity == "random-wmethod") {
            RandomValidityConfig rc;
            rc.seed = o.seed;
            teacher = std::make_unique<RandomWTeacher>(std::move(l1),
                                                       std::move(l2), rc);
        } else {
            teacher = std::make_unique<ExactTeacher>(std::move(l1), std::move(l2));
        }
    }

    std::shared_ptr<const LearnerSnapshot> partial;
    std::optional<LearnResult> result =
        run_learning(*teacher, config, record, &partial);

    if (result) {
        if (!o.out.empty())
            write_text_file(o.out, write_automaton_text(result->hypothesis.inner()));
        if (!o.dot.empty())
            write_text_file(o.dot, dot_text(result->hypothesis.inner()));
        if (!o.snapshot.empty())
            write_snapshot(o.snapshot, result->tree, result->basis, result->n,
                           record);
    } else if (partial && !o.snapshot.empty()) {
        write_snapshot(o.snapshot, partial->tree, partial->basis, partial->n,
                       record);
    }

    std::cout << csv_header() << '\n' << csv_row(record) << '\n';
    if (record.outcome == "ok") return 0;
    return record.outcome == "budget" ? 2 : 1;
}

struct GenOpts {
    std::string out_dir;
    std::string preset = "desk";
    std::uint64_t seed = 1;
    int target_states = 0;  // 0: use the preset
    int automata = 19;
    int sets = 5;
    int strings = 20;
    int length = 30;
    int alphabet = 2;
};

int do_gen_bench(const GenOpts& o) {
    std::vector<BenchmarkSpec> specs;
    if (o.target_states > 0) {
        BenchmarkSpec spec;
        spec.target_states = o.target_states;
        spec.alphabet_size = o.alphabet;
        spec.num_automata = o.automata;
        spec.sets_per_automaton = o.sets;
        spec.strings_per_set = o.strings;
        spec.string_length = o.length;
        spec.seed = o.seed;
        specs.push_back(spec);
    } else {
        specs = o.preset == "full" ? full_scale_specs(o.seed)
                                   : desk_scale_specs(o.seed);
    }
    std::vector<ManifestEntry> manifest = generate_benchmarks(specs, o.out_dir);
    std::set<std::string> targets;
    for (const auto& e : manifest) targets.insert(e.target_file);
    std::cout << "generated " << targets.size() << " target automata and "
              << manifest.size() << " sample sets under " << o.out_dir << '\n'
              << "manifest: " << (fs::path(o.out_dir) / "manifest.json").string()
              << '\n';
    return 0;
}

struct RunBenchOpts {
    std::string manifest;
    LearnerFlags flags;
    std::int64_t timeout_ms = 200'000;
    int jobs = 1;
    std::string csv;
};

int do_run_bench(const RunBenchOpts& o) {
    std::vector<ManifestEntry> entries = load_manifest(o.manifest);
    BatchOptions options;
    options.learner = to_config(o.flags);
    options.timeout_ms = o.timeout_ms;
    options.jobs = o.jobs;
    std::string base_dir = fs::path(o.manifest).parent_path().string();

    std::vector<RunRecord> records = run_benchmarks(entries, base_dir, options);

    std::ofstream file;
    if (!o.csv.empty()) {
        file.open(o.csv);
        if (!file) throw std::runtime_error("cannot write " + o.csv);
    }
    std::ostream& out = o.csv.empty() ? std::cout : file;
    out << csv_header() << '\n';
    for (const auto& r : records) out << csv_row(r) << '\n';

    for (const auto& row : completion_summary(records))
        std::cerr << "size " << row.target_size << ": " << row.completed << '/'
                  << row.total << " completed\n";
    return 0;
}

struct ExportOpts {
    std::string in, out;
};

int do_export_dot(const ExportOpts& o) {
    std::string dot = dot_text(load_automaton_file(o.in));
    if (o.out.empty())
        std::cout << dot;
    else
        write_text_file(o.out, dot);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learn minimal DFAs separating two disjoint languages"};
    app.require_subcommand(1);

    LearnOpts learn_opts;
    CLI::App* learn = app.add_subcommand(
        "learn", "Run the learner on automaton files or a labeled sample");
    auto* l1 = learn->add_option("--l1", learn_opts.l1,
                                 "Automaton for the language to accept")
                   ->check(CLI::ExistingFile);
    auto* l2 = learn->add_option("--l2", learn_opts.l2,
                                 "Automaton for the language to reject")
                   ->check(CLI::ExistingFile);
    auto* samples = learn->add_option("--samples", learn_opts.samples,
                                      "Labeled sample file")
                        ->check(CLI::ExistingFile);
    l1->needs(l2);
    l2->needs(l1);
    samples->excludes(l1)->excludes(l2);
    add_learner_flags(learn, learn_opts.flags);
    learn->add_option("--validity", learn_opts.validity,
                      "Validity checking against exact languages")
        ->check(CLI::IsMember({"exact", "random-wmethod"}))
        ->capture_default_str();
    learn->add_option("--seed", learn_opts.seed, "Randomized-validity seed")
        ->capture_default_str();
    learn->add_option("--timeout-ms", learn_opts.timeout_ms,
                      "Wall-clock budget, 0 for none")
        ->capture_default_str();
    learn->add_option("--max-queries", learn_opts.max_queries,
                      "Membership-query budget, 0 for none")
        ->capture_default_str();
    learn->add_option("--out", learn_opts.out, "Write the learned automaton here");
    learn->add_option("--dot", learn_opts.dot, "Write the learned automaton as DOT");
    learn->add_option("--snapshot", learn_opts.snapshot,
                      "Write the final observation tree, basis, and stats here");

    GenOpts gen_opts;
    CLI::App* gen = app.add_subcommand(
        "gen-bench", "Generate random target automata with labeled samples");
    gen->add_option("--out-dir", gen_opts.out_dir, "Output directory")->required();
    gen->add_option("--preset", gen_opts.preset,
                    "desk: sizes 4-8, 5x2 sets; full: sizes 4-23, 19x5 sets")
        ->check(CLI::IsMember({"desk", "full"}))
        ->capture_default_str();
    gen->add_option("--seed", gen_opts.seed, "Generation seed")
        ->capture_default_str();
    gen->add_option("--target-states", gen_opts.target_states,
                    "Generate a single family of this size instead of a preset");
    gen->add_option("--automata", gen_opts.automata, "Automata per size")
        ->capture_default_str();
    gen->add_option("--sets", gen_opts.sets, "Sample sets per automaton")
        ->capture_default_str();
    gen->add_option("--strings", gen_opts.strings, "Random strings per set")
        ->capture_default_str();
    gen->add_option("--length", gen_opts.length, "Length of each random string")
        ->capture_default_str();
    gen->add_option("--alphabet", gen_opts.alphabet, "Alphabet size")
        ->capture_default_str();

    RunBenchOpts run_opts;
    CLI::App* run = app.add_subcommand(
        "run-bench", "Learn every benchmark in a manifest and emit CSV");
    run->add_option("--manifest", run_opts.manifest, "manifest.json from gen-bench")
        ->required()
        ->check(CLI::ExistingFile);
    add_learner_flags(run, run_opts.flags);
    run->add_option("--timeout-ms", run_opts.timeout_ms, "Per-run wall-clock budget")
        ->capture_default_str();
    run->add_option("--jobs", run_opts.jobs, "Parallel runs")
        ->capture_default_str();
    run->add_option("--csv", run_opts.csv, "CSV output path (default: stdout)");

    ExportOpts export_opts;
    CLI::App* export_dot =
        app.add_subcommand("export-dot", "Render an automaton file as DOT");
    export_dot->add_option("--in", export_opts.in, "Automaton text file")
        ->required()
        ->check(CLI::ExistingFile);
    export_dot->add_option("--out", export_opts.out,
                           "DOT output path (default: stdout)");

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(learn)) return do_learn(learn_opts);
        if (app.got_subcommand(gen)) return do_gen_bench(gen_opts);
        if (app.got_subcommand(run)) return do_run_bench(run_opts);
        if (app.got_subcommand(export_dot)) return do_export_dot(export_opts);
        return 1;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
