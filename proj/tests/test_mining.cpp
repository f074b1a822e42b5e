#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "reportminer/mining.hpp"
#include "reportminer/rng.hpp"

#include "testutil.hpp"

using namespace reportminer;
using classifier::Label;
using mining::SequencePattern;
using mining::TimelineEntry;
using mining::WellTimeline;

namespace {

corpus::Report make_report(const std::string& well, const std::string& date,
                           const std::string& op, bool npt,
                           const std::string& text) {
    corpus::Report r;
    r.well_id = well;
    r.date = parse_date(date);
    r.operator_id = op;
    r.npt = npt;
    r.text = text;
    return r;
}

TimelineEntry make_entry(const std::string& date, int seq, int idx,
                         const std::string& op, const std::string& text,
                         Label label) {
    TimelineEntry e;
    e.date = parse_date(date);
    e.report_seq = seq;
    e.sentence_index = idx;
    e.operator_id = op;
    e.text = text;
    e.label = label;
    e.probs = {label == Label::Event ? 1.0 : 0.0,
               label == Label::Symptom ? 1.0 : 0.0,
               label == Label::Action ? 1.0 : 0.0};
    return e;
}

WellTimeline timeline_of(const std::string& well, std::vector<Label> labels) {
    WellTimeline t;
    t.well_id = well;
    int i = 0;
    for (Label l : labels) {
        t.entries.push_back(make_entry("2021-01-01", 0, i, "OP1",
                                       "entry " + std::to_string(i), l));
        ++i;
    }
    return t;
}

// seeded random timelines for oracle comparisons
std::vector<WellTimeline> random_timelines(int wells, int entries_per_well,
                                           std::uint64_t seed) {
    Rng rng(seed);
    std::vector<WellTimeline> timelines;
    for (int w = 0; w < wells; ++w) {
        WellTimeline t;
        t.well_id = "W" + std::to_string(100 + w);
        for (int i = 0; i < entries_per_well; ++i) {
            auto label = Label(int(rng.index(3)));
            auto op = "OP" + std::to_string(1 + rng.index(4));
            std::string text = "tok" + std::to_string(rng.index(20)) + " " +
                               "tok" + std::to_string(rng.index(20));
            t.entries.push_back(make_entry("2021-01-01", 0, i, op, text, label));
        }
        timelines.push_back(std::move(t));
    }
    return timelines;
}

}  // namespace

TEST_CASE("classify_corpus") {
    auto model = testutil::rigged_classifier();

    SUBCASE("no reports, no timelines") {
        CHECK(mining::classify_corpus({}, model, false).empty());
    }
    SUBCASE("one well, two reports, three sentences each, ordered") {
        std::vector<corpus::Report> reports = {
            make_report("W1", "2021-01-02", "OP1", true, "e\ns\na"),
            make_report("W1", "2021-01-01", "OP2", true, "a\na\ne"),
        };
        auto timelines = mining::classify_corpus(reports, model, false);
        REQUIRE(timelines.size() == 1);
        const auto& entries = timelines[0].entries;
        REQUIRE(entries.size() == 6);
        // chronological: the Jan 1 report comes first despite file order
        CHECK(entries[0].date.to_string() == "2021-01-01");
        CHECK(entries[0].operator_id == "OP2");
        CHECK(entries[0].sentence_index == 0);
        CHECK(entries[5].date.to_string() == "2021-01-02");
        CHECK(entries[5].sentence_index == 2);
        // rigged predictions: e -> EVENT, s/a -> ACTION
        CHECK(entries[3].label == Label::Event);   // "e" first sentence of Jan 2
        CHECK(entries[4].label == Label::Action);
        double sum = entries[0].probs[0] + entries[0].probs[1] + entries[0].probs[2];
        CHECK(std::fabs(sum - 1.0) <= 1e-9);
    }
    SUBCASE("npt_only keeps only NPT reports") {
        std::vector<corpus::Report> reports = {
            make_report("W1", "2021-01-01", "OP1", false, "a a a"),
            make_report("W2", "2021-01-02", "OP1", true, "e"),
        };
        auto timelines = mining::classify_corpus(reports, model, true);
        REQUIRE(timelines.size() == 1);
        CHECK(timelines[0].well_id == "W2");
    }
}

TEST_CASE("field_summary") {
    SUBCASE("303 wells, 112 with NPT") {
        std::vector<corpus::Report> reports;
        for (int w = 0; w < 303; ++w) {
            reports.push_back(make_report("W" + std::to_string(w), "2021-01-01",
                                          "OP1", w < 112, "text"));
        }
        auto summary = mining::field_summary(reports);
        CHECK(summary.wells_total == 303);
        CHECK(summary.wells_with_npt == 112);
        CHECK(std::fabs(summary.performance_estimate - 0.6304) <= 1e-4);
    }
    SUBCASE("no NPT wells") {
        auto summary = mining::field_summary(
            {make_report("W1", "2021-01-01", "OP1", false, "")});
        CHECK(summary.performance_estimate == 1.0);
        CHECK(summary.npt_duration_per_well.at("W1") == 0);
    }
    SUBCASE("all NPT wells") {
        auto summary = mining::field_summary(
            {make_report("W1", "2021-01-01", "OP1", true, "")});
        CHECK(summary.performance_estimate == 0.0);
    }
    SUBCASE("duration proxy counts distinct NPT dates") {
        std::vector<corpus::Report> reports = {
            make_report("W1", "2021-01-01", "OP1", true, ""),
            make_report("W1", "2021-01-01", "OP1", true, ""),  // same date
            make_report("W1", "2021-01-03", "OP1", true, ""),
            make_report("W1", "2021-01-04", "OP1", false, ""),
        };
        auto summary = mining::field_summary(reports);
        CHECK(summary.npt_duration_per_well.at("W1") == 2);
        CHECK(summary.reports_per_well.at("W1") == 4);
    }
    SUBCASE("zero wells is an error") {
        CHECK_THROWS_AS(mining::field_summary({}), std::invalid_argument);
    }
}

TEST_CASE("rank_problematic_wells") {
    SUBCASE("no events: zero counts ordered by well id") {
        std::vector<WellTimeline> timelines = {
            timeline_of("B", {Label::Action}),
            timeline_of("A", {Label::Symptom}),
        };
        auto ranked = mining::rank_problematic_wells(timelines, 10);
        REQUIRE(ranked.size() == 2);
        CHECK(ranked[0] == std::pair<std::string, std::int64_t>{"A", 0});
        CHECK(ranked[1] == std::pair<std::string, std::int64_t>{"B", 0});
    }
    SUBCASE("top 2 of 3/1/2 events") {
        std::vector<WellTimeline> timelines = {
            timeline_of("X", {Label::Event, Label::Event, Label::Event}),
            timeline_of("Y", {Label::Event}),
            timeline_of("Z", {Label::Event, Label::Event}),
        };
        auto ranked = mining::rank_problematic_wells(timelines, 2);
        REQUIRE(ranked.size() == 2);
        CHECK(ranked[0].first == "X");
        CHECK(ranked[1].first == "Z");
    }
    SUBCASE("matches a brute-force recount") {
        auto timelines = random_timelines(20, 50, 99);
        auto ranked = mining::rank_problematic_wells(timelines, 1000);
        REQUIRE(ranked.size() == 20);
        std::map<std::string, std::int64_t> oracle;
        for (const auto& t : timelines) {
            std::int64_t n = 0;
            for (const auto& e : t.entries) {
                if (e.label == Label::Event) ++n;
            }
            oracle[t.well_id] = n;
        }
        for (const auto& [well, count] : ranked) CHECK(oracle.at(well) == count);
        for (std::size_t i = 1; i < ranked.size(); ++i) {
            CHECK((ranked[i - 1].second > ranked[i].second ||
                   (ranked[i - 1].second == ranked[i].second &&
                    ranked[i - 1].first < ranked[i].first)));
        }
    }
}

TEST_CASE("operator_behavior") {
    SUBCASE("single operator proportions") {
        auto t = timeline_of("W1", {Label::Action, Label::Action, Label::Event});
        auto behavior = mining::operator_behavior({t}, "W1");
        REQUIRE(behavior.size() == 1);
        const auto& p = behavior.at("OP1");
        CHECK(p[0] == doctest::Approx(1.0 / 3));
        CHECK(p[1] == 0.0);
        CHECK(p[2] == doctest::Approx(2.0 / 3));
    }
    SUBCASE("unknown well rejected") {
        auto t = timeline_of("W1", {Label::Action});
        CHECK_THROWS_AS(mining::operator_behavior({t}, "nope"),
                        std::invalid_argument);
    }
    SUBCASE("two operators hand-tallied, rows sum to one") {
        WellTimeline t;
        t.well_id = "W9";
        t.entries = {
            make_entry("2021-01-01", 0, 0, "OP1", "x", Label::Event),
            make_entry("2021-01-01", 0, 1, "OP2", "x", Label::Action),
            make_entry("2021-01-01", 0, 2, "OP1", "x", Label::Action),
            make_entry("2021-01-01", 0, 3, "OP2", "x", Label::Action),
            make_entry("2021-01-01", 0, 4, "OP1", "x", Label::Symptom),
        };
        auto behavior = mining::operator_behavior({t}, "W9");
        REQUIRE(behavior.size() == 2);
        CHECK(behavior.at("OP1")[0] == doctest::Approx(1.0 / 3));
        CHECK(behavior.at("OP1")[1] == doctest::Approx(1.0 / 3));
        CHECK(behavior.at("OP1")[2] == doctest::Approx(1.0 / 3));
        CHECK(behavior.at("OP2")[2] == doctest::Approx(1.0));
        for (const auto& [op, p] : behavior) {
            CHECK(std::fabs(p[0] + p[1] + p[2] - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("fit_regression") {
    SUBCASE("exact line") {
        auto fit = mining::fit_regression({1, 2, 3}, {2, 4, 6});
        CHECK(fit.slope == doctest::Approx(2.0));
        CHECK(fit.intercept == doctest::Approx(0.0));
        CHECK(fit.r == doctest::Approx(1.0));
    }
    SUBCASE("constant ys give slope 0 and r 0") {
        auto fit = mining::fit_regression({1, 2, 3}, {5, 5, 5});
        CHECK(fit.slope == 0.0);
        CHECK(fit.r == 0.0);
    }
    SUBCASE("matches the closed-form normal equations at 1e-9") {
        Rng rng(123);
        std::vector<double> xs, ys;
        for (int i = 0; i < 50; ++i) {
            xs.push_back(rng.uniform(-10, 10));
            ys.push_back(3.5 * xs.back() - 1.25 + rng.uniform(-2, 2));
        }
        auto fit = mining::fit_regression(xs, ys);
        long double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int i = 0; i < 50; ++i) {
            sx += xs[std::size_t(i)];
            sy += ys[std::size_t(i)];
            sxx += (long double)xs[std::size_t(i)] * xs[std::size_t(i)];
            sxy += (long double)xs[std::size_t(i)] * ys[std::size_t(i)];
        }
        long double n = 50;
        long double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        long double intercept = (sy - slope * sx) / n;
        CHECK(testutil::rel_err(fit.slope, double(slope)) <= 1e-9);
        CHECK(testutil::rel_err(fit.intercept, double(intercept)) <= 1e-9);
        // OLS residuals are orthogonal to xs
        long double dot = 0, scale = 0;
        for (int i = 0; i < 50; ++i) {
            long double resid = ys[std::size_t(i)] -
                                (fit.slope * xs[std::size_t(i)] + fit.intercept);
            dot += resid * xs[std::size_t(i)];
            scale += std::fabs((long double)xs[std::size_t(i)] * ys[std::size_t(i)]);
        }
        CHECK(std::fabs(double(dot)) <= 1e-9 * double(scale));
    }
    SUBCASE("degenerate inputs rejected") {
        CHECK_THROWS_AS(mining::fit_regression({1}, {2}), std::invalid_argument);
        CHECK_THROWS_AS(mining::fit_regression({2, 2, 2}, {1, 2, 3}),
                        std::invalid_argument);
        CHECK_THROWS_AS(mining::fit_regression({1, 2}, {1, 2, 3}),
                        std::invalid_argument);
    }
}

TEST_CASE("find_sequences") {
    SUBCASE("symptom then action within horizon 1") {
        auto t = timeline_of("W1", {Label::Symptom, Label::Action});
        auto matches = mining::find_sequences(
            {t}, {Label::Symptom, {}}, {Label::Action, {}}, 1);
        REQUIRE(matches.size() == 1);
        CHECK(matches[0].well_id == "W1");
        CHECK_FALSE(matches[0].following.has_value());
    }
    SUBCASE("order matters") {
        auto t = timeline_of("W1", {Label::Action, Label::Symptom});
        CHECK(mining::find_sequences({t}, {Label::Symptom, {}},
                                     {Label::Action, {}}, 1)
                  .empty());
    }
    SUBCASE("horizon bounds the lookahead") {
        auto t = timeline_of("W1", {Label::Symptom, Label::Event, Label::Event,
                                    Label::Action});
        CHECK(mining::find_sequences({t}, {Label::Symptom, {}},
                                     {Label::Action, {}}, 2)
                  .empty());
        CHECK(mining::find_sequences({t}, {Label::Symptom, {}},
                                     {Label::Action, {}}, 3)
                  .size() == 1);
    }
    SUBCASE("token filters are substring matches, following entry attached") {
        WellTimeline t;
        t.well_id = "W1";
        t.entries = {
            make_entry("2021-01-01", 0, 0, "OP1", "erratic torque", Label::Symptom),
            make_entry("2021-01-01", 0, 1, "OP1", "circ bottoms up", Label::Action),
            make_entry("2021-01-01", 0, 2, "OP1", "pooh slowly", Label::Action),
        };
        SequencePattern sym{Label::Symptom, std::string("torque")};
        SequencePattern circ{Label::Action, std::string("circ")};
        auto matches = mining::find_sequences({t}, sym, circ, 5);
        REQUIRE(matches.size() == 1);
        REQUIRE(matches[0].following.has_value());
        CHECK(matches[0].following->text == "pooh slowly");
        // case-sensitive: "CIRC" does not match
        SequencePattern upper{Label::Action, std::string("CIRC")};
        CHECK(mining::find_sequences({t}, sym, upper, 5).empty());
    }
    SUBCASE("matches a brute-force double loop and ignores well order") {
        auto timelines = random_timelines(3, 40, 321);
        SequencePattern ante{Label::Symptom, {}};
        SequencePattern cons{Label::Action, {}};
        const int horizon = 4;
        auto got = mining::find_sequences(timelines, ante, cons, horizon);

        std::vector<std::tuple<std::string, int, int>> oracle;
        for (const auto& t : timelines) {
            for (std::size_t i = 0; i < t.entries.size(); ++i) {
                if (t.entries[i].label != Label::Symptom) continue;
                for (std::size_t j = i + 1;
                     j < t.entries.size() && j <= i + horizon; ++j) {
                    if (t.entries[j].label == Label::Action) {
                        oracle.emplace_back(t.well_id, int(i), int(j));
                    }
                }
            }
        }
        REQUIRE(got.size() == oracle.size());
        std::sort(oracle.begin(), oracle.end());
        std::vector<std::tuple<std::string, int, int>> got_keys;
        for (const auto& m : got) {
            got_keys.emplace_back(m.well_id, m.antecedent.sentence_index,
                                  m.consequent.sentence_index);
        }
        auto sorted_keys = got_keys;
        std::sort(sorted_keys.begin(), sorted_keys.end());
        CHECK(sorted_keys == oracle);

        // reversing the well order changes nothing
        auto reversed = timelines;
        std::reverse(reversed.begin(), reversed.end());
        auto got2 = mining::find_sequences(reversed, ante, cons, horizon);
        REQUIRE(got2.size() == got.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].well_id == got2[i].well_id);
            CHECK(got[i].antecedent.sentence_index ==
                  got2[i].antecedent.sentence_index);
            CHECK(got[i].consequent.sentence_index ==
                  got2[i].consequent.sentence_index);
        }
    }
}

TEST_CASE("label_distribution") {
    SUBCASE("quarter quarter half") {
        auto t = timeline_of("W1", {Label::Event, Label::Symptom, Label::Action,
                                    Label::Action});
        auto p = mining::label_distribution({t});
        CHECK(p[0] == doctest::Approx(0.25));
        CHECK(p[1] == doctest::Approx(0.25));
        CHECK(p[2] == doctest::Approx(0.5));
    }
    SUBCASE("empty input rejected") {
        CHECK_THROWS_AS(mining::label_distribution({}), std::invalid_argument);
        WellTimeline empty;
        empty.well_id = "W1";
        CHECK_THROWS_AS(mining::label_distribution({empty}),
                        std::invalid_argument);
    }
    SUBCASE("matches a brute-force tally and sums to one") {
        auto timelines = random_timelines(5, 30, 17);
        auto p = mining::label_distribution(timelines);
        std::array<std::int64_t, 3> counts{};
        std::int64_t total = 0;
        for (const auto& t : timelines) {
            for (const auto& e : t.entries) {
                ++counts[std::size_t(int(e.label))];
                ++total;
            }
        }
        for (int c = 0; c < 3; ++c) {
            CHECK(p[std::size_t(c)] ==
                  doctest::Approx(double(counts[std::size_t(c)]) / double(total)));
        }
        CHECK(std::fabs(p[0] + p[1] + p[2] - 1.0) <= 1e-12);
    }
}

TEST_CASE("timeline save and load round-trip") {
    auto timelines = random_timelines(4, 12, 55);
    auto path = std::filesystem::temp_directory_path() / "rm_timelines.jsonl";
    mining::save_timelines(timelines, path);
    auto loaded = mining::load_timelines(path);
    REQUIRE(loaded.size() == timelines.size());
    for (std::size_t w = 0; w < loaded.size(); ++w) {
        CHECK(loaded[w].well_id == timelines[w].well_id);
        REQUIRE(loaded[w].entries.size() == timelines[w].entries.size());
        for (std::size_t i = 0; i < loaded[w].entries.size(); ++i) {
            const auto& a = loaded[w].entries[i];
            const auto& b = timelines[w].entries[i];
            CHECK(a.date == b.date);
            CHECK(a.operator_id == b.operator_id);
            CHECK(a.text == b.text);
            CHECK(a.label == b.label);
            CHECK(a.probs == b.probs);
        }
    }
}
