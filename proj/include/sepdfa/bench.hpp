#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sepdfa/learner.hpp"
#include "sepdfa/teacher.hpp"

namespace sepdfa {

/// One family of generated problems: random target DFAs of a fixed size,
/// each paired with labeled sample sets of random words.
struct BenchmarkSpec {
    int target_states = 4;
    int alphabet_size = 2;
    int num_automata = 19;
    int sets_per_automaton = 5;
    int strings_per_set = 20;
    int string_length = 30;
    std::uint64_t seed = 1;
};

/// Throws std::invalid_argument unless every field is positive.
void validate_spec(const BenchmarkSpec& spec);

/// Target sizes 4..23, 19 automata each, 5 sets of 20 strings of length 30
/// over two symbols (1900 sample sets in total).
std::vector<BenchmarkSpec> full_scale_specs(std::uint64_t seed = 1);
/// Target sizes 4..8, 5 automata each, 2 sets of 10 strings of length 10.
std::vector<BenchmarkSpec> desk_scale_specs(std::uint64_t seed = 1);

struct ManifestEntry {
    std::string id;
    std::string target_file;  // paths relative to the manifest's directory
    std::string sample_file;
    int target_size = 0;
    std::uint64_t seed = 0;  // seed the sample set was drawn from
};

/// Draws the target DFAs and sample sets for every spec, writes them under
/// out_dir together with manifest.json, and returns the manifest. Each
/// sample holds the drawn strings plus all their prefixes, deduplicated,
/// each labeled by the target. Deterministic in the spec seeds.
std::vector<ManifestEntry> generate_benchmarks(const std::vector<BenchmarkSpec>& specs,
                                               const std::string& out_dir);

void save_manifest(const std::vector<ManifestEntry>& entries, const std::string& path);
std::vector<ManifestEntry> load_manifest(const std::string& path);

/// One CSV row describing a learning run.
struct RunRecord {
    std::string benchmark;
    int target_size = 0;
    int learned_size = 0;
    std::uint64_t mem_q = 0;
    std::uint64_t dontcare = 0;
    std::uint64_t val_q = 0;
    std::uint64_t unsat_rounds = 0;
    std::uint64_t symbols = 0;
    std::int64_t time_ms = 0;
    std::string backend = "internal";
    std::string mode = "apartness";
    std::uint64_t seed = 0;
    std::string outcome = "ok";  // ok | budget | error
};

std::string csv_header();
std::string csv_row(const RunRecord& r);

const char* backend_name(Backend b);
const char* mode_name(Relation r);

/// Runs the learner on `teacher`, filling the count, timing, and outcome
/// fields of `record`. Budget exhaustion becomes outcome "budget" (with the
/// state reached so far in *partial when requested), any other failure
/// becomes "error"; neither propagates. The result is present only for "ok".
std::optional<LearnResult> run_learning(
    Teacher& teacher, const LearnerConfig& config, RunRecord& record,
    std::shared_ptr<const LearnerSnapshot>* partial = nullptr);

struct BatchOptions {
    LearnerConfig learner;
    std::int64_t timeout_ms = 200'000;  // per run; 0 disables
    int jobs = 1;
};

/// Runs every manifest entry as a sample-teacher problem, `jobs` at a time.
/// Rows come back in manifest order regardless of completion order; a failed
/// run yields a row with a non-ok outcome rather than aborting the batch.
std::vector<RunRecord> run_benchmarks(const std::vector<ManifestEntry>& entries,
                                      const std::string& base_dir,
                                      const BatchOptions& options);

struct CompletionRow {
    int target_size = 0;
    int completed = 0;  // rows with outcome "ok"
    int total = 0;
};

/// Per-target-size completion counts, sizes ascending.
std::vector<CompletionRow> completion_summary(const std::vector<RunRecord>& records);

}  // namespace sepdfa
