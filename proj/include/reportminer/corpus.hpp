#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "reportminer/date.hpp"

namespace reportminer::corpus {

// One daily drilling report.
struct Report {
    std::string well_id;
    Date date;
    std::string operator_id;
    bool npt = false;
    std::string text;
};

struct SentenceSource {
    std::string well_id;
    Date date;
    std::string operator_id;
    int index = 0;  // position within the report, >= 0
};

// Cleaned, tokenized sentence. Tokens never contain whitespace.
struct Sentence {
    std::vector<std::string> tokens;
    SentenceSource source;
};

// Dense token ids ordered by (count desc, token asc). ids are 0..V-1.
struct Vocabulary {
    std::unordered_map<std::string, int> id_of;
    std::vector<std::string> token_of;   // id -> token
    std::vector<std::int64_t> counts;    // id -> corpus frequency
    std::int64_t total_tokens = 0;       // T, retained occurrences only

    int size() const { return static_cast<int>(token_of.size()); }

    std::optional<int> lookup(const std::string& token) const {
        auto it = id_of.find(token);
        if (it == id_of.end()) return std::nullopt;
        return it->second;
    }
};

struct CorpusStats {
    std::int64_t token_count = 0;  // T
    int vocab_size = 0;            // V
    // bucket start (inclusive) -> number of reports; bucket width fixed at
    // build time, counts sum to the number of reports
    std::map<std::int64_t, std::int64_t> length_histogram;
    std::vector<std::pair<std::string, std::int64_t>> top_tokens;
};

// Reads JSON Lines, one report per line. Fields: well_id, date, operator_id,
// npt, text. Unknown fields ignored. Errors name the offending line.
std::vector<Report> ingest_reports(const std::filesystem::path& path);

// The ten denoising substitutions, applied in order, followed by whitespace
// collapse and trim. Total and idempotent on its own output range.
std::string clean_text(const std::string& raw);

// Whitespace split of already-cleaned text. No case folding, no further
// punctuation stripping.
std::vector<std::string> tokenize(const std::string& cleaned);

// Splits raw report text on newlines and on period-followed-by-whitespace,
// cleans and tokenizes each segment, drops segments with no tokens, and
// assigns indices in order.
std::vector<Sentence> segment_sentences(const Report& report);

// Throws if nothing survives the min_count filter.
Vocabulary build_vocabulary(const std::vector<Sentence>& sentences,
                            int min_count = 1);

// p_i = count_i / T; sums to 1 within 1e-12.
std::vector<double> unigram_distribution(const Vocabulary& vocab);

CorpusStats corpus_stats(const std::vector<Report>& reports,
                         int bucket_width = 50, int top_k = 20);

// n-grams counted within sentence boundaries, ranked by count desc then
// lexicographic asc; at most k entries. Gram tokens are space-joined.
std::vector<std::pair<std::string, std::int64_t>> top_ngrams(
    const std::vector<Sentence>& sentences, int n, int k);

}  // namespace reportminer::corpus
