#include "sepdfa/bench.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "sepdfa/automata.hpp"
#include "sepdfa/synthesis.hpp"

namespace sepdfa {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

bool shortlex_less(const Word& a, const Word& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
}

// The drawn strings plus all their prefixes, deduplicated, labeled by the
// target's verdict on each word.
SampleSet draw_sample(const CompleteDfa& target, const BenchmarkSpec& spec,
                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> symbol(0, spec.alphabet_size - 1);
    std::set<Word, decltype(&shortlex_less)> words(&shortlex_less);
    for (int i = 0; i < spec.strings_per_set; ++i) {
        Word w(static_cast<std::size_t>(spec.string_length));
        for (auto& c : w) c = symbol(rng);
        for (std::size_t len = 0; len <= w.size(); ++len)
            words.insert(Word(w.begin(), w.begin() + static_cast<long>(len)));
    }
    SampleSet out;
    out.num_symbols = spec.alphabet_size;
    for (const Word& w : words)
        (target.accepts(w) ? out.positives : out.negatives).push_back(w);
    return out;
}

std::string sanitize_field(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = '_';
    return s;
}

void fill_counts(RunRecord& record, const RunStats& stats) {
    record.mem_q = stats.membership_queries;
    record.dontcare = stats.dont_care_answers;
    record.val_q = stats.validity_queries;
    record.unsat_rounds = stats.unsat_rounds;
    record.symbols = stats.symbols_queried;
}

}  // namespace

void validate_spec(const BenchmarkSpec& spec) {
    auto positive = [](int v, const char* name) {
        if (v <= 0)
            throw std::invalid_argument(std::string(name) + " must be positive");
    };
    positive(spec.target_states, "target_states");
    positive(spec.alphabet_size, "alphabet_size");
    positive(spec.num_automata, "num_automata");
    positive(spec.sets_per_automaton, "sets_per_automaton");
    positive(spec.strings_per_set, "strings_per_set");
    positive(spec.string_length, "string_length");
    if (spec.seed == 0) throw std::invalid_argument("seed must be positive");
}

std::vector<BenchmarkSpec> full_scale_specs(std::uint64_t seed) {
    std::vector<BenchmarkSpec> specs;
    for (int size = 4; size <= 23; ++size) {
        BenchmarkSpec spec;
        spec.target_states = size;
        spec.seed = seed;
        specs.push_back(spec);
    }
    return specs;
}

std::vector<BenchmarkSpec> desk_scale_specs(std::uint64_t seed) {
    std::vector<BenchmarkSpec> specs;
    for (int size = 4; size <= 8; ++size) {
        BenchmarkSpec spec;
        spec.target_states = size;
        spec.num_automata = 5;
        spec.sets_per_automaton = 2;
        spec.strings_per_set = 10;
        spec.string_length = 10;
        spec.seed = seed;
        specs.push_back(spec);
    }
    return specs;
}

std::vector<ManifestEntry> generate_benchmarks(const std::vector<BenchmarkSpec>& specs,
                                               const std::string& out_dir) {
    std::set<int> sizes;
    for (const auto& spec : specs) {
        validate_spec(spec);
        if (!sizes.insert(spec.target_states).second)
            throw std::invalid_argument("duplicate target_states across specs");
    }
    fs::create_directories(out_dir);

    std::vector<ManifestEntry> manifest;
    for (const auto& spec : specs) {
        for (int a = 0; a < spec.num_automata; ++a) {
            std::uint64_t dfa_seed =
                mix(mix(spec.seed, static_cast<std::uint64_t>(spec.target_states)),
                    static_cast<std::uint64_t>(a) + 1);
            CompleteDfa target =
                random_dfa(spec.target_states, spec.alphabet_size, dfa_seed);
            std::string stem = "s" + std::to_string(spec.target_states) + "_a" +
                               std::to_string(a);
            std::string target_file = "target_" + stem + ".dfa";
            save_automaton_file(target.inner(),
                                (fs::path(out_dir) / target_file).string());
            for (int t = 0; t < spec.sets_per_automaton; ++t) {
                std::uint64_t set_seed =
                    mix(dfa_seed, 0x51ed270bull + static_cast<std::uint64_t>(t));
                SampleSet sample = draw_sample(target, spec, set_seed);
                std::string sample_file =
                    "sample_" + stem + "_t" + std::to_string(t) + ".words";
                save_sample_file(sample,
                                 (fs::path(out_dir) / sample_file).string());
                manifest.push_back({stem + "_t" + std::to_string(t), target_file,
                                    sample_file, spec.target_states, set_seed});
            }
        }
    }
    save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
    return manifest;
}

void save_manifest(const std::vector<ManifestEntry>& entries,
                   const std::string& path) {
    json doc;
    doc["entries"] = json::array();
    for (const auto& e : entries) {
        doc["entries"].push_back({{"id", e.id},
                                  {"target_file", e.target_file},
                                  {"sample_file", e.sample_file},
                                  {"target_size", e.target_size},
                                  {"seed", e.seed}});
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << doc.dump(2) << '\n';
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<ManifestEntry> entries;
    try {
        json doc = json::parse(in);
        for (const auto& e : doc.at("entries")) {
            ManifestEntry entry;
            entry.id = e.at("id").get<std::string>();
            entry.target_file = e.at("target_file").get<std::string>();
            entry.sample_file = e.at("sample_file").get<std::string>();
            entry.target_size = e.at("target_size").get<int>();
            entry.seed = e.at("seed").get<std::uint64_t>();
            entries.push_back(std::move(entry));
        }
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed manifest " + path + ": " + e.what());
    }
    return entries;
}

std::string csv_header() {
    return "benchmark,target_size,learned_size,mem_q,dontcare,val_q,unsat_rounds,"
           "symbols,time_ms,backend,mode,seed,outcome";
}

std::string csv_row(const RunRecord& r) {
    std::ostringstream out;
    out << sanitize_field(r.benchmark) << ',' << r.target_size << ','
        << r.learned_size << ',' << r.mem_q << ',' << r.dontcare << ','
        << r.val_q << ',' << r.unsat_rounds << ',' << r.symbols << ','
        << r.time_ms << ',' << sanitize_field(r.backend) << ','
        << sanitize_field(r.mode) << ',' << r.seed << ','
        << sanitize_field(r.outcome);
    return out.str();
}

const char* backend_name(Backend b) {
    return b == Backend::internal ? "internal" : "smt";
}

const char* mode_name(Relation r) {
    return r == Relation::apartness ? "apartness" : "incompatibility";
}

std::optional<LearnResult> run_learning(
    Teacher& teacher, const LearnerConfig& config, RunRecord& record,
    std::shared_ptr<const LearnerSnapshot>* partial) {
    auto started = std::chrono::steady_clock::now();
    auto elapsed_ms = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - started)
            .count();
    };
    try {
        Learner learner(teacher, config);
        LearnResult result = learner.run();
        fill_counts(record, result.stats);
        record.learned_size = result.stats.learned_size;
        record.time_ms = elapsed_ms();
        record.outcome = "ok";
        return result;
    } catch (const LearningBudgetError& e) {
        fill_counts(record, e.snapshot().stats);
        record.outcome = "budget";
        if (partial)
            *partial = std::make_shared<const LearnerSnapshot>(e.snapshot());
    } catch (const SynthesisBudgetError&) {
        fill_counts(record, teacher.stats());
        record.outcome = "budget";
    } catch (const std::exception&) {
        fill_counts(record, teacher.stats());
        record.outcome = "error";
    }
    record.learned_size = 0;
    record.time_ms = elapsed_ms();
    return std::nullopt;
}

std::vector<RunRecord> run_benchmarks(const std::vector<ManifestEntry>& entries,
                                      const std::string& base_dir,
                                      const BatchOptions& options) {
    std::vector<RunRecord> records(entries.size());

    LearnerConfig config = options.learner;
    if (options.timeout_ms > 0) config.time_budget_ms = options.timeout_ms;

    auto run_one = [&](std::size_t i) {
        const ManifestEntry& entry = entries[i];
        RunRecord& record = records[i];
        record.benchmark = entry.id;
        record.target_size = entry.target_size;
        record.backend = backend_name(config.synthesis_backend);
        record.mode = mode_name(config.promotion_relation);
        record.seed = entry.seed;
        try {
            SampleSet sample = load_sample_file(
                (fs::path(base_dir) / entry.sample_file).string());
            SampleTeacher teacher(sample.num_symbols, sample.positives,
                                  sample.negatives);
            run_learning(teacher, config, record);
        } catch (const std::exception&) {
            record.outcome = "error";
        }
    };

    std::size_t jobs = static_cast<std::size_t>(std::max(1, options.jobs));
    jobs = std::min(jobs, entries.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < entries.size(); ++i) run_one(i);
        return records;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < entries.size();
                 i = next.fetch_add(1))
                run_one(i);
        });
    }
    for (auto& worker : workers) worker.join();
    return records;
}

std::vector<CompletionRow> completion_summary(const std::vector<RunRecord>& records) {
    std::map<int, CompletionRow> by_size;
    for (const auto& r : records) {
        CompletionRow& row = by_size[r.target_size];
        row.target_size = r.target_size;
        ++row.total;
        if (r.outcome == "ok") ++row.completed;
    }
    std::vector<CompletionRow> rows;
    rows.reserve(by_size.size());
    for (const auto& [size, row] : by_size) rows.push_back(row);
    return rows;
}

}  // namespace sepdfa
