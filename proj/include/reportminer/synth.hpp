#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reportminer/classifier.hpp"
#include "reportminer/corpus.hpp"

namespace reportminer::synth {

// Seeded generator for desk-scale test data: templated EVENT/SYMPTOM/ACTION
// sentences over a ~200-token vocabulary, spread across wells and operators.
struct SynthConfig {
    std::uint64_t seed = 7;
    int wells = 50;
    int operators = 5;
    // reports per well grow with the well's NPT day count so that report
    // count and NPT duration stay positively coupled
    int base_reports_per_well = 4;
    int max_npt_days = 8;
    int sentences_per_report_min = 2;
    int sentences_per_report_max = 6;
};

// ~2000 sentences across ~50 wells when called with defaults.
std::vector<corpus::Report> make_reports(const SynthConfig& config);

// Token pairs that the report generator uses interchangeably in identical
// template slots; their context distributions match exactly.
std::vector<std::pair<std::string, std::string>> interchangeable_pairs();

struct LabeledRow {
    classifier::Label label;
    std::string text;
};

// Keyword-separable labeled set with the requested label mix (counts are
// apportioned largest-remainder, so sizes are exact).
std::vector<LabeledRow> make_labeled(std::uint64_t seed, int n,
                                     double event_frac = 0.28,
                                     double symptom_frac = 0.15);

// Order-dependent task: identical bags of words, label decided by token
// order (EVENT vs ACTION, balanced). A bag-of-words feature cannot beat
// chance here.
std::vector<LabeledRow> make_order_task(std::uint64_t seed, int n);

void write_reports_jsonl(const std::vector<corpus::Report>& reports,
                         const std::string& path);
void write_labeled_tsv(const std::vector<LabeledRow>& rows,
                       const std::string& path);

}  // namespace reportminer::synth
