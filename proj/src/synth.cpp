#include "reportminer/synth.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "reportminer/rng.hpp"

namespace reportminer::synth {

namespace {

using classifier::Label;

// Discriminative tokens are drawn only from their class list; everything
// else comes from the shared pools, so a labeled sentence carries no
// cross-class signal.
const std::vector<std::string> kEventKw = {
    "stuck",  "twistoff", "kick",    "packoff", "blowout",
    "parted", "collapsed", "washout", "sheared", "cracked"};
const std::vector<std::string> kSymptomKw = {
    "erratic",  "overpull", "tight", "losses",     "vibration",
    "dragging", "swabbing", "ballooning", "gains", "fluctuating"};
const std::vector<std::string> kActionKw = {
    "circulate", "circ",   "ream", "wash",   "spot",
    "displace",  "pooh",   "rih",  "jarred", "cemented"};
const std::vector<std::string> kUnits = {"psi", "ppg",  "klbs", "bbls", "gpm",
                                         "rpm", "mmd",  "mtvd", "ft",   "m"};
const std::vector<std::string> kNumbers = {
    "50",   "100",  "150",  "200",  "250",  "300",  "400",
    "500",  "750",  "900",  "1200", "1500", "1800", "2200",
    "2500", "3000", "3500", "4000", "4500", "5000"};
const std::vector<std::string> kDevices = {
    "valve",  "liner",     "motor",  "nozzle", "stabilizer", "reamer",
    "crossover", "swivel", "kelly",  "elevator", "slips",    "sub"};

constexpr const char* kPairA1 = "flusha";
constexpr const char* kPairA2 = "flushb";
constexpr const char* kPairB1 = "reamx";
constexpr const char* kPairB2 = "reamy";

const std::string& pick(Rng& rng, const std::vector<std::string>& pool) {
    return pool[rng.index(pool.size())];
}

std::string event_sentence(Rng& rng) {
    switch (rng.index(5)) {
        case 0: return pick(rng, kEventKw) + " pipe at " + pick(rng, kNumbers) +
                       " " + pick(rng, kUnits);
        case 1: return pick(rng, kEventKw) + " while drilling at " +
                       pick(rng, kNumbers) + " " + pick(rng, kUnits);
        case 2: return "major " + pick(rng, kEventKw) + " in " +
                       pick(rng, kNumbers) + " " + pick(rng, kUnits) + " interval";
        case 3: return pick(rng, kEventKw) + " and " + pick(rng, kEventKw) +
                       " reported on bottom";
        default: return "bha " + pick(rng, kEventKw) + " downhole near " +
                        pick(rng, kNumbers) + " " + pick(rng, kUnits);
    }
}

std::string symptom_sentence(Rng& rng) {
    switch (rng.index(5)) {
        case 0: return pick(rng, kSymptomKw) + " torque observed at " +
                       pick(rng, kNumbers) + " " + pick(rng, kUnits);
        case 1: return pick(rng, kSymptomKw) + " " + pick(rng, kSymptomKw) +
                       " noted during trip";
        case 2: return "mud " + pick(rng, kSymptomKw) + " increasing to " +
                       pick(rng, kNumbers) + " " + pick(rng, kUnits);
        case 3: return pick(rng, kSymptomKw) + " pressure seen on connection";
        default: return "hole " + pick(rng, kSymptomKw) + " with " +
                        pick(rng, kNumbers) + " klbs pulls";
    }
}

std::string action_sentence(Rng& rng) {
    switch (rng.index(5)) {
        case 0: return pick(rng, kActionKw) + " bottoms up at " +
                       pick(rng, kNumbers) + " " + pick(rng, kUnits);
        case 1: return pick(rng, kActionKw) + " and " + pick(rng, kActionKw) +
                       " to " + pick(rng, kNumbers) + " " + pick(rng, kUnits);
        case 2: return pick(rng, kActionKw) + " hole with " +
                       pick(rng, kNumbers) + " bbls pill";
        case 3: return "crew " + pick(rng, kActionKw) + " string to bottom";
        default: return pick(rng, kActionKw) + " mud weight to " +
                        pick(rng, kNumbers) + " ppg";
    }
}

std::string neutral_sentence(Rng& rng) {
    switch (rng.index(8)) {
        case 0: return "routine drilling ahead at " + pick(rng, kNumbers) +
                       " " + pick(rng, kUnits);
        case 1: return "replaced " + pick(rng, kDevices) + " during maintenance";
        case 2: return std::string("crew checked ") +
                       (rng.index(2) ? kPairA1 : kPairA2) +
                       " unit before connection";
        case 3: return std::string(rng.index(2) ? kPairB1 : kPairB2) +
                       " tool laid out on deck";
        case 4: return "inspection of " + pick(rng, kDevices) + " completed";
        case 5: return "tested casing to " + pick(rng, kNumbers) + " psi";
        case 6: return "serviced " + pick(rng, kDevices) + " then resumed drilling";
        default: return "changed " + pick(rng, kDevices) + " on bha";
    }
}

Date add_days(Date d, int n) {
    for (int i = 0; i < n; ++i) {
        ++d.day;
        if (!is_valid_date(d.year, d.month, d.day)) {
            d.day = 1;
            ++d.month;
            if (d.month > 12) {
                d.month = 1;
                ++d.year;
            }
        }
    }
    return d;
}

// joins sentences with report-style noise that the cleaning rules remove
std::string compose_text(const std::vector<std::string>& sentences, Rng& rng) {
    std::string text;
    if (rng.index(4) == 0) text += "==== daily summary ====\n";
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (rng.index(5) == 0) text += "\xe2\x80\xa2 ";
        text += sentences[i];
        if (i + 1 < sentences.size()) {
            text += rng.index(3) == 0 ? "\n" : ". ";
        }
    }
    return text;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> interchangeable_pairs() {
    return {{kPairA1, kPairA2}, {kPairB1, kPairB2}};
}

std::vector<corpus::Report> make_reports(const SynthConfig& config) {
    Rng rng(derive_seed(config.seed, "synth-reports"));
    std::vector<corpus::Report> reports;
    const Date field_start = parse_date("2021-01-01");

    for (int w = 0; w < config.wells; ++w) {
        char well_id[16];
        std::snprintf(well_id, sizeof well_id, "W%03d", w + 1);

        int npt_days = static_cast<int>(rng.index(config.max_npt_days + 1));
        int n_reports = config.base_reports_per_well + 2 * npt_days +
                        static_cast<int>(rng.index(3));

        // 2-3 operators per well, a contiguous slice of the roster
        int op_start = static_cast<int>(rng.index(config.operators));
        int op_count = 2 + static_cast<int>(rng.index(2));

        std::vector<int> order(n_reports);
        for (int i = 0; i < n_reports; ++i) order[i] = i;
        rng.shuffle(order);
        std::set<int> npt_reports(order.begin(), order.begin() + npt_days);

        Date well_start = add_days(field_start, w % 200);
        for (int r = 0; r < n_reports; ++r) {
            corpus::Report report;
            report.well_id = well_id;
            report.date = add_days(well_start, r);
            int op = (op_start + static_cast<int>(rng.index(op_count))) %
                     config.operators;
            report.operator_id = "OP" + std::to_string(op + 1);
            report.npt = npt_reports.count(r) > 0;

            std::vector<std::string> sentences;
            int span = config.sentences_per_report_max -
                       config.sentences_per_report_min + 1;
            int n_sentences = config.sentences_per_report_min +
                              static_cast<int>(rng.index(span));
            if (report.npt) {
                // precursor(s), failure, response(s)
                sentences.push_back(symptom_sentence(rng));
                if (n_sentences >= 5) sentences.push_back(symptom_sentence(rng));
                sentences.push_back(event_sentence(rng));
                while (int(sentences.size()) < std::max(n_sentences, 3)) {
                    sentences.push_back(action_sentence(rng));
                }
            } else {
                for (int s = 0; s < n_sentences; ++s) {
                    sentences.push_back(rng.index(3) == 0 ? action_sentence(rng)
                                                          : neutral_sentence(rng));
                }
            }
            report.text = compose_text(sentences, rng);
            reports.push_back(std::move(report));
        }
    }
    return reports;
}

std::vector<LabeledRow> make_labeled(std::uint64_t seed, int n,
                                     double event_frac, double symptom_frac) {
    Rng rng(derive_seed(seed, "synth-labeled"));
    int n_event = static_cast<int>(std::lround(n * event_frac));
    int n_symptom = static_cast<int>(std::lround(n * symptom_frac));
    int n_action = n - n_event - n_symptom;

    std::vector<LabeledRow> rows;
    rows.reserve(std::size_t(n));
    for (int i = 0; i < n_event; ++i) {
        rows.push_back({Label::Event, event_sentence(rng)});
    }
    for (int i = 0; i < n_symptom; ++i) {
        rows.push_back({Label::Symptom, symptom_sentence(rng)});
    }
    for (int i = 0; i < n_action; ++i) {
        rows.push_back({Label::Action, action_sentence(rng)});
    }
    rng.shuffle(rows);
    return rows;
}

std::vector<LabeledRow> make_order_task(std::uint64_t seed, int n) {
    Rng rng(derive_seed(seed, "synth-order"));
    // every unordered token pair appears with both orientations equally
    // often, so the bag of words carries exactly zero label signal and only
    // the token order separates the classes
    std::vector<std::pair<std::size_t, std::size_t>> bags;
    for (std::size_t a = 0; a < kDevices.size(); ++a) {
        for (std::size_t b = a + 1; b < kDevices.size(); ++b) {
            bags.emplace_back(a, b);
        }
    }
    rng.shuffle(bags);
    std::vector<LabeledRow> rows;
    rows.reserve(std::size_t(n));
    for (int e = 0; int(rows.size()) < n; ++e) {
        const auto& [lo, hi] = bags[std::size_t(e) % bags.size()];
        rows.push_back({Label::Event, kDevices[lo] + " then " + kDevices[hi]});
        if (int(rows.size()) < n) {
            rows.push_back({Label::Action, kDevices[hi] + " then " + kDevices[lo]});
        }
    }
    rng.shuffle(rows);
    return rows;
}

void write_reports_jsonl(const std::vector<corpus::Report>& reports,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& r : reports) {
        nlohmann::json j;
        j["well_id"] = r.well_id;
        j["date"] = r.date.to_string();
        j["operator_id"] = r.operator_id;
        j["npt"] = r.npt;
        j["text"] = r.text;
        out << j.dump() << '\n';
    }
}

void write_labeled_tsv(const std::vector<LabeledRow>& rows,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& row : rows) {
        out << classifier::to_string(row.label) << '\t' << row.text << '\n';
    }
}

}  // namespace reportminer::synth
