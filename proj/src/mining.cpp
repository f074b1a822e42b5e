#include "reportminer/mining.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include <json.hpp>

namespace reportminer::mining {

namespace {

using nlohmann::json;

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

bool matches_pattern(const TimelineEntry& entry,
                     const SequencePattern& pattern) {
    if (entry.label != pattern.label) return false;
    if (pattern.contains &&
        entry.text.find(*pattern.contains) == std::string::npos) {
        return false;
    }
    return true;
}

json entry_json(const std::string& well_id, const TimelineEntry& e) {
    json j;
    j["well_id"] = well_id;
    j["date"] = e.date.to_string();
    j["report_seq"] = e.report_seq;
    j["sentence_index"] = e.sentence_index;
    j["operator_id"] = e.operator_id;
    j["text"] = e.text;
    j["label"] = classifier::to_string(e.label);
    j["probs"] = e.probs;
    return j;
}

}  // namespace

std::vector<WellTimeline> classify_corpus(
    const std::vector<corpus::Report>& reports,
    const classifier::TrainedClassifier& model, bool npt_only) {
    std::unordered_map<std::string, std::vector<TimelineEntry>> by_well;
    for (std::size_t seq = 0; seq < reports.size(); ++seq) {
        const auto& report = reports[seq];
        if (npt_only && !report.npt) continue;
        for (const auto& sentence : corpus::segment_sentences(report)) {
            auto [label, probs] = classifier::predict(model, sentence.tokens);
            TimelineEntry entry;
            entry.date = report.date;
            entry.report_seq = static_cast<int>(seq);
            entry.sentence_index = sentence.source.index;
            entry.operator_id = report.operator_id;
            entry.text = join_tokens(sentence.tokens);
            entry.label = label;
            std::copy_n(probs.begin(), classifier::kNumLabels,
                        entry.probs.begin());
            by_well[report.well_id].push_back(std::move(entry));
        }
    }
    std::vector<WellTimeline> timelines;
    timelines.reserve(by_well.size());
    for (auto& [well_id, entries] : by_well) {
        std::sort(entries.begin(), entries.end(),
                  [](const TimelineEntry& a, const TimelineEntry& b) {
                      if (a.date != b.date) return a.date < b.date;
                      if (a.report_seq != b.report_seq)
                          return a.report_seq < b.report_seq;
                      return a.sentence_index < b.sentence_index;
                  });
        timelines.push_back({well_id, std::move(entries)});
    }
    std::sort(timelines.begin(), timelines.end(),
              [](const WellTimeline& a, const WellTimeline& b) {
                  return a.well_id < b.well_id;
              });
    return timelines;
}

FieldSummary field_summary(const std::vector<corpus::Report>& reports) {
    FieldSummary summary;
    std::map<std::string, std::set<Date>> npt_dates;
    for (const auto& report : reports) {
        summary.reports_per_well[report.well_id] += 1;
        summary.npt_duration_per_well.try_emplace(report.well_id, 0);
        if (report.npt) npt_dates[report.well_id].insert(report.date);
    }
    summary.wells_total = static_cast<int>(summary.reports_per_well.size());
    if (summary.wells_total == 0) {
        throw std::invalid_argument("no wells in input");
    }
    for (const auto& [well, dates] : npt_dates) {
        summary.npt_duration_per_well[well] = static_cast<int>(dates.size());
        if (!dates.empty()) ++summary.wells_with_npt;
    }
    summary.performance_estimate =
        1.0 - double(summary.wells_with_npt) / double(summary.wells_total);
    return summary;
}

std::vector<std::pair<std::string, std::int64_t>> rank_problematic_wells(
    const std::vector<WellTimeline>& timelines, int top_n) {
    std::vector<std::pair<std::string, std::int64_t>> ranked;
    ranked.reserve(timelines.size());
    for (const auto& timeline : timelines) {
        std::int64_t events = 0;
        for (const auto& entry : timeline.entries) {
            if (entry.label == classifier::Label::Event) ++events;
        }
        ranked.emplace_back(timeline.well_id, events);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (top_n >= 0 && ranked.size() > std::size_t(top_n)) {
        ranked.resize(std::size_t(top_n));
    }
    return ranked;
}

std::map<std::string, std::array<double, classifier::kNumLabels>>
operator_behavior(const std::vector<WellTimeline>& timelines,
                  const std::string& well_id) {
    const WellTimeline* well = nullptr;
    for (const auto& timeline : timelines) {
        if (timeline.well_id == well_id) {
            well = &timeline;
            break;
        }
    }
    if (!well) throw std::invalid_argument("unknown well: " + well_id);

    std::map<std::string, std::array<std::int64_t, classifier::kNumLabels>> counts;
    for (const auto& entry : well->entries) {
        counts[entry.operator_id][std::size_t(int(entry.label))] += 1;
    }
    std::map<std::string, std::array<double, classifier::kNumLabels>> out;
    for (const auto& [op, c] : counts) {
        double total = double(c[0] + c[1] + c[2]);
        if (total == 0.0) continue;  // operators with no sentences excluded
        out[op] = {c[0] / total, c[1] / total, c[2] / total};
    }
    return out;
}

RegressionFit fit_regression(const std::vector<double>& xs,
                             const std::vector<double>& ys) {
    if (xs.size() != ys.size()) {
        throw std::invalid_argument("regression: size mismatch");
    }
    const std::size_t n = xs.size();
    if (n < 2) throw std::invalid_argument("regression: need at least 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("regression: xs are all equal");
    }
    RegressionFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r = syy == 0.0 ? 0.0 : sxy / std::sqrt(sxx * syy);
    return fit;
}

std::vector<SequenceMatch> find_sequences(
    const std::vector<WellTimeline>& timelines,
    const SequencePattern& antecedent, const SequencePattern& consequent,
    int horizon) {
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    // canonical well order keeps output independent of input order
    std::vector<const WellTimeline*> wells;
    wells.reserve(timelines.size());
    for (const auto& t : timelines) wells.push_back(&t);
    std::sort(wells.begin(), wells.end(),
              [](const WellTimeline* a, const WellTimeline* b) {
                  return a->well_id < b->well_id;
              });

    std::vector<SequenceMatch> matches;
    for (const WellTimeline* well : wells) {
        const auto& entries = well->entries;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (!matches_pattern(entries[i], antecedent)) continue;
            std::size_t hi = std::min(entries.size(), i + 1 + std::size_t(horizon));
            for (std::size_t j = i + 1; j < hi; ++j) {
                if (!matches_pattern(entries[j], consequent)) continue;
                SequenceMatch match;
                match.well_id = well->well_id;
                match.antecedent = entries[i];
                match.consequent = entries[j];
                if (j + 1 < entries.size()) match.following = entries[j + 1];
                matches.push_back(std::move(match));
            }
        }
    }
    return matches;
}

std::array<double, classifier::kNumLabels> label_distribution(
    const std::vector<WellTimeline>& timelines) {
    std::array<std::int64_t, classifier::kNumLabels> counts{};
    std::int64_t total = 0;
    for (const auto& timeline : timelines) {
        for (const auto& entry : timeline.entries) {
            counts[std::size_t(int(entry.label))] += 1;
            ++total;
        }
    }
    if (total == 0) throw std::invalid_argument("no labeled sentences");
    return {double(counts[0]) / double(total), double(counts[1]) / double(total),
            double(counts[2]) / double(total)};
}

void save_timelines(const std::vector<WellTimeline>& timelines,
                    const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& timeline : timelines) {
        for (const auto& entry : timeline.entries) {
            out << entry_json(timeline.well_id, entry).dump() << '\n';
        }
    }
    if (!out) throw std::runtime_error("I/O error writing " + path.string());
}

std::vector<WellTimeline> load_timelines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::map<std::string, std::vector<TimelineEntry>> by_well;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": " + e.what());
        }
        TimelineEntry entry;
        entry.date = parse_date(j.at("date").get<std::string>());
        entry.report_seq = j.at("report_seq").get<int>();
        entry.sentence_index = j.at("sentence_index").get<int>();
        entry.operator_id = j.at("operator_id").get<std::string>();
        entry.text = j.at("text").get<std::string>();
        entry.label = classifier::label_from_string(j.at("label").get<std::string>());
        auto probs = j.at("probs");
        for (int i = 0; i < classifier::kNumLabels; ++i) {
            entry.probs[std::size_t(i)] = probs.at(i).get<double>();
        }
        by_well[j.at("well_id").get<std::string>()].push_back(std::move(entry));
    }
    std::vector<WellTimeline> timelines;
    for (auto& [well_id, entries] : by_well) {
        std::sort(entries.begin(), entries.end(),
                  [](const TimelineEntry& a, const TimelineEntry& b) {
                      if (a.date != b.date) return a.date < b.date;
                      if (a.report_seq != b.report_seq)
                          return a.report_seq < b.report_seq;
                      return a.sentence_index < b.sentence_index;
                  });
        timelines.push_back({well_id, std::move(entries)});
    }
    return timelines;
}

}  // namespace reportminer::mining
