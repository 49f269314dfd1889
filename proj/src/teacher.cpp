#include "sepdfa/teacher.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace sepdfa {

namespace {

bool length_lex_less(const Word& a, const Word& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
}

void require_same_alphabet(int a, int b) {
    if (a != b) throw std::invalid_argument("teacher: alphabet mismatch");
}

}  // namespace

Answer Teacher::membership(const Word& w) {
    for (SymbolId x : w)
        if (x < 0 || x >= num_symbols())
            throw std::invalid_argument("teacher: symbol out of range");
    Answer a = answer(w);
    ++stats_.membership_queries;
    stats_.symbols_queried += w.size();
    if (a == Answer::dont_care) ++stats_.dont_care_answers;
    return a;
}

ValidityResult Teacher::validity(const CompleteDfa& h) {
    require_same_alphabet(h.num_symbols(), num_symbols());
    ++stats_.validity_queries;
    return find_counterexample(h);
}

bool check_disjoint(const CompleteDfa& l1, const CompleteDfa& l2) {
    return language_empty(product_intersection(l1, l2, ProductMode::both_accept));
}

ExactTeacher::ExactTeacher(CompleteDfa l1, CompleteDfa l2)
    : l1_(std::move(l1)), l2_(std::move(l2)) {
    require_same_alphabet(l1_.num_symbols(), l2_.num_symbols());
    if (!check_disjoint(l1_, l2_))
        throw std::invalid_argument("teacher: languages overlap");
}

Answer ExactTeacher::answer(const Word& w) {
    if (l1_.accepts(w)) return Answer::accept;
    if (l2_.accepts(w)) return Answer::reject;
    return Answer::dont_care;
}

ValidityResult ExactTeacher::find_counterexample(const CompleteDfa& h) {
    auto missed = shortest_word(
        product_intersection(l1_, h, ProductMode::first_accepts_second_rejects));
    auto leaked = shortest_word(product_intersection(l2_, h, ProductMode::both_accept));
    if (!missed && !leaked) return {};
    if (missed && leaked)
        return {length_lex_less(*leaked, *missed) ? *leaked : *missed};
    return {missed ? *missed : *leaked};
}

SampleTeacher::SampleTeacher(int num_symbols, std::vector<Word> positives,
                             std::vector<Word> negatives)
    : num_symbols_(num_symbols) {
    if (num_symbols < 1) throw std::invalid_argument("teacher: empty alphabet");
    auto take = [&](std::vector<Word>& words, std::set<Word>& into) {
        for (Word& w : words) {
            for (SymbolId x : w)
                if (x < 0 || x >= num_symbols)
                    throw std::invalid_argument("teacher: sample symbol out of range");
            into.insert(std::move(w));
        }
    };
    take(positives, positives_);
    take(negatives, negatives_);
    for (const Word& w : positives_)
        if (negatives_.count(w))
            throw std::invalid_argument("teacher: samples overlap");
    ordered_.reserve(positives_.size() + negatives_.size());
    ordered_.insert(ordered_.end(), positives_.begin(), positives_.end());
    ordered_.insert(ordered_.end(), negatives_.begin(), negatives_.end());
    std::sort(ordered_.begin(), ordered_.end(), length_lex_less);
}

Answer SampleTeacher::answer(const Word& w) {
    if (positives_.count(w)) return Answer::accept;
    if (negatives_.count(w)) return Answer::reject;
    return Answer::dont_care;
}

ValidityResult SampleTeacher::find_counterexample(const CompleteDfa& h) {
    for (const Word& w : ordered_) {
        bool accepted = h.accepts(w);
        if (positives_.count(w) ? !accepted : accepted) return {w};
    }
    return {};
}

RandomWTeacher::RandomWTeacher(CompleteDfa l1, CompleteDfa l2,
                               RandomValidityConfig config)
    : l1_(std::move(l1)), l2_(std::move(l2)), config_(config), rng_(config.seed) {
    require_same_alphabet(l1_.num_symbols(), l2_.num_symbols());
    if (!check_disjoint(l1_, l2_))
        throw std::invalid_argument("teacher: languages overlap");
    if (config_.walks < 1 || config_.max_suffix < 1 || config_.expected_extra_states < 0)
        throw std::invalid_argument("teacher: bad validity configuration");
}

Answer RandomWTeacher::answer(const Word& w) {
    if (l1_.accepts(w)) return Answer::accept;
    if (l2_.accepts(w)) return Answer::reject;
    return Answer::dont_care;
}

ValidityResult RandomWTeacher::find_counterexample(const CompleteDfa& h) {
    const int k = num_symbols();
    for (int i = 0; i < config_.walks; ++i) {
        std::uint64_t span =
            static_cast<std::uint64_t>(h.num_states()) + config_.expected_extra_states;
        std::size_t walk = rng_() % span;
        std::size_t suffix = rng_() % (static_cast<std::uint64_t>(config_.max_suffix) + 1);
        Word w;
        w.reserve(walk + suffix);
        for (std::size_t j = 0; j < walk + suffix; ++j)
            w.push_back(static_cast<SymbolId>(rng_() % k));
        bool hypothesis = h.accepts(w);
        if (l1_.accepts(w) && !hypothesis) return {w};
        if (l2_.accepts(w) && hypothesis) return {w};
    }
    return {};
}

std::string write_sample_text(const SampleSet& s) {
    std::ostringstream out;
    out << s.positives.size() + s.negatives.size() << ' ' << s.num_symbols << '\n';
    auto emit = [&](const std::vector<Word>& words, int label) {
        for (const Word& w : words) {
            out << label << ' ' << w.size();
            for (SymbolId x : w) out << ' ' << x;
            out << '\n';
        }
    };
    emit(s.positives, 1);
    emit(s.negatives, 0);
    return out.str();
}

SampleSet parse_sample_text(std::istream& in) {
    std::string cleaned;
    for (std::string line; std::getline(in, line);) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        cleaned += line;
        cleaned += '\n';
    }
    std::istringstream tokens(cleaned);
    auto next_int = [&](const char* what) {
        long long v;
        if (!(tokens >> v)) throw ParseError(std::string("sample set: missing ") + what);
        return v;
    };

    long long count = next_int("word count");
    long long k = next_int("alphabet size");
    if (count < 0) throw ParseError("sample set: negative word count");
    if (k < 1) throw ParseError("sample set: alphabet size must be positive");

    SampleSet s;
    s.num_symbols = static_cast<int>(k);
    for (long long i = 0; i < count; ++i) {
        long long label = next_int("label");
        if (label != 0 && label != 1) throw ParseError("sample set: label must be 0 or 1");
        long long len = next_int("word length");
        if (len < 0) throw ParseError("sample set: negative word length");
        Word w;
        w.reserve(static_cast<std::size_t>(len));
        for (long long j = 0; j < len; ++j) {
            long long sym = next_int("symbol");
            if (sym < 0 || sym >= k) throw ParseError("sample set: symbol out of range");
            w.push_back(static_cast<SymbolId>(sym));
        }
        (label == 1 ? s.positives : s.negatives).push_back(std::move(w));
    }
    std::string rest;
    if (tokens >> rest) throw ParseError("sample set: trailing input");
    return s;
}

SampleSet parse_sample_text(const std::string& text) {
    std::istringstream in(text);
    return parse_sample_text(in);
}

SampleSet load_sample_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("sample set: cannot open " + path);
    return parse_sample_text(in);
}

void save_sample_file(const SampleSet& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("sample set: cannot write " + path);
    out << write_sample_text(s);
}

}  // namespace sepdfa
