#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sepdfa/automata.hpp"
#include "sepdfa/observation_tree.hpp"

namespace sepdfa {

/// Query counters for one learner run. The symbol counter sums the lengths of
/// all membership queries.
struct RunStats {
    std::uint64_t membership_queries = 0;
    std::uint64_t dont_care_answers = 0;
    std::uint64_t validity_queries = 0;
    std::uint64_t symbols_queried = 0;
    // Filled in by the learner; teachers leave these at zero.
    std::uint64_t unsat_rounds = 0;
    std::int64_t wall_time_ms = 0;
    int learned_size = 0;
};

struct ValidityResult {
    std::optional<Word> counterexample;

    bool accepted() const { return !counterexample.has_value(); }
};

/// Answers membership queries with accept for words of the first language,
/// reject for words of the second, and don't-care otherwise, plus validity
/// queries against a candidate separator. Owns its counters; one instance
/// serves one learner run.
class Teacher {
public:
    virtual ~Teacher() = default;

    virtual int num_symbols() const = 0;
    Answer membership(const Word& w);
    ValidityResult validity(const CompleteDfa& h);

    const RunStats& stats() const { return stats_; }

protected:
    virtual Answer answer(const Word& w) = 0;
    virtual ValidityResult find_counterexample(const CompleteDfa& h) = 0;

    RunStats stats_;
};

/// L(l1) ∩ L(l2) = ∅, per product emptiness.
bool check_disjoint(const CompleteDfa& l1, const CompleteDfa& l2);

/// Teacher backed by two disjoint automata. Validity is decided exactly with
/// product constructions; a rejected hypothesis yields the overall shortest
/// counterexample (ties broken lexicographically, then in favor of a word
/// from the first language).
class ExactTeacher : public Teacher {
public:
    /// Throws std::invalid_argument on alphabet mismatch or overlapping
    /// languages.
    ExactTeacher(CompleteDfa l1, CompleteDfa l2);

    int num_symbols() const override { return l1_.num_symbols(); }
    const CompleteDfa& first_language() const { return l1_; }
    const CompleteDfa& second_language() const { return l2_; }

protected:
    Answer answer(const Word& w) override;
    ValidityResult find_counterexample(const CompleteDfa& h) override;

private:
    CompleteDfa l1_;
    CompleteDfa l2_;
};

/// Teacher backed by two finite word samples. Validity scans the union of
/// both samples in (length, lexicographic) order and reports the first
/// misclassified word, so counterexamples never leave the sample.
class SampleTeacher : public Teacher {
public:
    /// Throws std::invalid_argument when the samples overlap or contain
    /// out-of-range symbols.
    SampleTeacher(int num_symbols, std::vector<Word> positives,
                  std::vector<Word> negatives);

    int num_symbols() const override { return num_symbols_; }
    std::size_t sample_size() const { return ordered_.size(); }

protected:
    Answer answer(const Word& w) override;
    ValidityResult find_counterexample(const CompleteDfa& h) override;

private:
    int num_symbols_;
    std::set<Word> positives_;
    std::set<Word> negatives_;
    std::vector<Word> ordered_;  // union in (length, lex) order
};

struct RandomValidityConfig {
    int walks = 1000;
    int expected_extra_states = 2;
    int max_suffix = 4;
    std::uint64_t seed = 1;
};

/// Exact membership answers combined with randomized-testing validity: each
/// test word is a random walk of the hypothesis followed by a short random
/// suffix. Acceptance is unsound; a missed counterexample stays missed only
/// for that call, later calls draw fresh words.
class RandomWTeacher : public Teacher {
public:
    RandomWTeacher(CompleteDfa l1, CompleteDfa l2, RandomValidityConfig config);

    int num_symbols() const override { return l1_.num_symbols(); }

protected:
    Answer answer(const Word& w) override;
    ValidityResult find_counterexample(const CompleteDfa& h) override;

private:
    CompleteDfa l1_;
    CompleteDfa l2_;
    RandomValidityConfig config_;
    std::mt19937_64 rng_;
};

/// Classified word sample, Abbadingo-style on disk:
///   line 1: <count> <alphabet_size>
///   then per word: <label> <length> <symbols...>, label 1 = accept, 0 = reject.
/// '#' starts a comment; blank lines are skipped.
struct SampleSet {
    int num_symbols = 0;
    std::vector<Word> positives;
    std::vector<Word> negatives;
};

std::string write_sample_text(const SampleSet& s);
SampleSet parse_sample_text(std::istream& in);
SampleSet parse_sample_text(const std::string& text);
SampleSet load_sample_file(const std::string& path);
void save_sample_file(const SampleSet& s, const std::string& path);

}  // namespace sepdfa
