#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reportminer/classifier.hpp"
#include "reportminer/corpus.hpp"

namespace reportminer::mining {

struct TimelineEntry {
    Date date;
    int report_seq = 0;      // ingestion order, breaks same-date ties
    int sentence_index = 0;  // within the report
    std::string operator_id;
    std::string text;        // cleaned tokens, space-joined
    classifier::Label label = classifier::Label::Event;
    std::array<double, classifier::kNumLabels> probs{};
};

// Entries sorted by (date, report_seq, sentence_index).
struct WellTimeline {
    std::string well_id;
    std::vector<TimelineEntry> entries;
};

struct FieldSummary {
    int wells_total = 0;
    int wells_with_npt = 0;
    double performance_estimate = 0.0;  // 1 - wells_with_npt / wells_total
    // NPT duration proxy: distinct NPT report dates per well
    std::map<std::string, int> npt_duration_per_well;
    std::map<std::string, int> reports_per_well;
};

struct RegressionFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r = 0.0;  // Pearson correlation, 0 when y has no variance
};

// Labels every sentence of every selected report; timelines come back
// sorted by well id with chronological entries.
std::vector<WellTimeline> classify_corpus(
    const std::vector<corpus::Report>& reports,
    const classifier::TrainedClassifier& model, bool npt_only);

FieldSummary field_summary(const std::vector<corpus::Report>& reports);

// Descending EVENT count, ties by well_id ascending; all wells listed,
// truncated to top_n.
std::vector<std::pair<std::string, std::int64_t>> rank_problematic_wells(
    const std::vector<WellTimeline>& timelines, int top_n);

// Per-operator label proportions on one well; operators with zero sentences
// excluded; each row sums to 1.
std::map<std::string, std::array<double, classifier::kNumLabels>>
operator_behavior(const std::vector<WellTimeline>& timelines,
                  const std::string& well_id);

// Ordinary least squares; throws on fewer than 2 points or constant xs.
RegressionFit fit_regression(const std::vector<double>& xs,
                             const std::vector<double>& ys);

struct SequencePattern {
    classifier::Label label = classifier::Label::Symptom;
    // case-sensitive substring filter on the sentence text
    std::optional<std::string> contains;
};

struct SequenceMatch {
    std::string well_id;
    TimelineEntry antecedent;
    TimelineEntry consequent;
    // the entry immediately after the consequent, when one exists — the raw
    // outcome context
    std::optional<TimelineEntry> following;
};

// All (antecedent, consequent) pairs where the consequent occurs within
// `horizon` subsequent entries of the same well. Output order is
// independent of the order in which wells are supplied.
std::vector<SequenceMatch> find_sequences(
    const std::vector<WellTimeline>& timelines,
    const SequencePattern& antecedent, const SequencePattern& consequent,
    int horizon);

// EVENT/SYMPTOM/ACTION proportions over all entries; throws on empty input.
std::array<double, classifier::kNumLabels> label_distribution(
    const std::vector<WellTimeline>& timelines);

// JSON Lines, one entry per sentence.
void save_timelines(const std::vector<WellTimeline>& timelines,
                    const std::filesystem::path& path);
std::vector<WellTimeline> load_timelines(const std::filesystem::path& path);

}  // namespace reportminer::mining
