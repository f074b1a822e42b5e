#include "reportminer/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace reportminer::corpus {

namespace {

using nlohmann::json;

struct Rule {
    std::regex pattern;
    std::string replacement;  // std::regex_replace format, "$1" for group 1
};

// The ten denoising substitutions, in execution order: trailing commas,
// commas glued to words, enclosing parentheses, bullet marks, dashes,
// horizontal bars, enclosing brackets, pounds/semicolons, underscores,
// orphan slashes. Byte-level, matching the reference engine on ASCII
// whitespace; the bullet is the UTF-8 sequence E2 80 A2.
const std::vector<Rule>& rules() {
    static const std::vector<Rule> r = [] {
        auto flags = std::regex::ECMAScript | std::regex::optimize;
        std::vector<Rule> v;
        v.push_back({std::regex(R"(,\s)", flags), " "});
        v.push_back({std::regex(R"(,([a-zA-Z]))", flags), " $1"});
        v.push_back({std::regex(R"(\((.*?)\))", flags), " $1 "});
        v.push_back({std::regex("\xe2\x80\xa2", flags), " "});
        v.push_back({std::regex(R"(-\s)", flags), " "});
        v.push_back({std::regex(R"(==+|\*\*+)", flags), " "});
        v.push_back({std::regex(R"(\[(.*?)\])", flags), " $1 "});
        v.push_back({std::regex(R"(#|;)", flags), " "});
        v.push_back({std::regex(R"(_)", flags), " "});
        v.push_back({std::regex(R"(\s/\s)", flags), " "});
        return v;
    }();
    return r;
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' ||
           c == '\r';
}

[[noreturn]] void record_error(const std::filesystem::path& path, int line,
                               const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line) +
                             ": " + what);
}

std::string require_string(const json& record, const char* field,
                           const std::filesystem::path& path, int line) {
    auto it = record.find(field);
    if (it == record.end() || !it->is_string()) {
        record_error(path, line,
                     std::string("missing or non-string field '") + field + "'");
    }
    return it->get<std::string>();
}

}  // namespace

std::string clean_text(const std::string& raw) {
    std::string s = raw;
    for (const auto& rule : rules()) {
        s = std::regex_replace(s, rule.pattern, rule.replacement);
    }
    // the substitutions insert spacing; collapse runs and trim so
    // tokenization is deterministic
    std::string out;
    out.reserve(s.size());
    bool in_space = false;
    for (char c : s) {
        if (is_space(c)) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(c);
    }
    return out;
}

std::vector<std::string> tokenize(const std::string& cleaned) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < cleaned.size()) {
        while (i < cleaned.size() && is_space(cleaned[i])) ++i;
        std::size_t start = i;
        while (i < cleaned.size() && !is_space(cleaned[i])) ++i;
        if (i > start) tokens.push_back(cleaned.substr(start, i - start));
    }
    return tokens;
}

std::vector<Report> ingest_reports(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open reports file: " + path.string());
    }
    std::vector<Report> reports;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            record_error(path, lineno, std::string("malformed record: ") + e.what());
        }
        if (!record.is_object()) {
            record_error(path, lineno, "record is not a JSON object");
        }
        Report r;
        r.well_id = require_string(record, "well_id", path, lineno);
        if (r.well_id.empty()) record_error(path, lineno, "empty well_id");
        try {
            r.date = parse_date(require_string(record, "date", path, lineno));
        } catch (const std::invalid_argument& e) {
            record_error(path, lineno, e.what());
        }
        r.operator_id = require_string(record, "operator_id", path, lineno);
        auto npt = record.find("npt");
        if (npt == record.end() || !npt->is_boolean()) {
            record_error(path, lineno, "missing or non-boolean field 'npt'");
        }
        r.npt = npt->get<bool>();
        r.text = require_string(record, "text", path, lineno);
        reports.push_back(std::move(r));
    }
    if (in.bad()) {
        throw std::runtime_error("I/O error reading " + path.string());
    }
    return reports;
}

std::vector<Sentence> segment_sentences(const Report& report) {
    // split raw text on newlines and on period-followed-by-whitespace (the
    // period is consumed); segments are then cleaned and tokenized, and
    // token-less segments are dropped
    std::vector<std::string> segments;
    std::string current;
    const std::string& text = report.text;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\n') {
            segments.push_back(current);
            current.clear();
        } else if (c == '.' && i + 1 < text.size() && is_space(text[i + 1])) {
            segments.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    segments.push_back(current);

    std::vector<Sentence> sentences;
    int index = 0;
    for (const auto& segment : segments) {
        auto tokens = tokenize(clean_text(segment));
        if (tokens.empty()) continue;
        Sentence s;
        s.tokens = std::move(tokens);
        s.source = {report.well_id, report.date, report.operator_id, index};
        ++index;
        sentences.push_back(std::move(s));
    }
    return sentences;
}

Vocabulary build_vocabulary(const std::vector<Sentence>& sentences,
                            int min_count) {
    if (min_count < 1) {
        throw std::invalid_argument("min_count must be >= 1");
    }
    std::unordered_map<std::string, std::int64_t> freq;
    for (const auto& s : sentences) {
        for (const auto& t : s.tokens) ++freq[t];
    }
    std::vector<std::pair<std::string, std::int64_t>> kept;
    for (auto& [token, count] : freq) {
        if (count >= min_count) kept.emplace_back(token, count);
    }
    if (kept.empty()) {
        throw std::runtime_error("empty vocabulary after min_count filter");
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary vocab;
    vocab.token_of.reserve(kept.size());
    vocab.counts.reserve(kept.size());
    for (auto& [token, count] : kept) {
        vocab.id_of.emplace(token, static_cast<int>(vocab.token_of.size()));
        vocab.token_of.push_back(token);
        vocab.counts.push_back(count);
        vocab.total_tokens += count;
    }
    return vocab;
}

std::vector<double> unigram_distribution(const Vocabulary& vocab) {
    if (vocab.size() == 0) {
        throw std::invalid_argument("empty vocabulary");
    }
    std::vector<double> p(vocab.counts.size());
    double total = static_cast<double>(vocab.total_tokens);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = static_cast<double>(vocab.counts[i]) / total;
    }
    return p;
}

CorpusStats corpus_stats(const std::vector<Report>& reports, int bucket_width,
                         int top_k) {
    if (bucket_width < 1) {
        throw std::invalid_argument("bucket_width must be >= 1");
    }
    CorpusStats stats;
    std::unordered_map<std::string, std::int64_t> freq;
    for (const auto& r : reports) {
        auto tokens = tokenize(clean_text(r.text));
        auto length = static_cast<std::int64_t>(tokens.size());
        stats.token_count += length;
        stats.length_histogram[length / bucket_width * bucket_width] += 1;
        for (auto& t : tokens) ++freq[t];
    }
    stats.vocab_size = static_cast<int>(freq.size());
    std::vector<std::pair<std::string, std::int64_t>> ranked(freq.begin(),
                                                             freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (top_k >= 0 && ranked.size() > std::size_t(top_k)) {
        ranked.resize(std::size_t(top_k));
    }
    stats.top_tokens = std::move(ranked);
    return stats;
}

std::vector<std::pair<std::string, std::int64_t>> top_ngrams(
    const std::vector<Sentence>& sentences, int n, int k) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (k < 0) throw std::invalid_argument("k must be >= 0");
    std::unordered_map<std::string, std::int64_t> counts;
    for (const auto& s : sentences) {
        if (s.tokens.size() < std::size_t(n)) continue;
        for (std::size_t i = 0; i + n <= s.tokens.size(); ++i) {
            std::string gram = s.tokens[i];
            for (std::size_t j = 1; j < std::size_t(n); ++j) {
                gram += ' ';
                gram += s.tokens[i + j];
            }
            ++counts[gram];
        }
    }
    std::vector<std::pair<std::string, std::int64_t>> ranked(counts.begin(),
                                                             counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > std::size_t(k)) ranked.resize(std::size_t(k));
    return ranked;
}

}  // namespace reportminer::corpus
