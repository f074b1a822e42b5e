// Generates the seeded synthetic fixtures: a report corpus, a
// keyword-separable labeled set, and the order-dependent labeled set.
#include <cstdint>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "reportminer/synth.hpp"

namespace fs = std::filesystem;
using namespace reportminer;

int main(int argc, char** argv) {
    CLI::App app{"synthgen - synthetic drilling-report test data"};
    std::string out_dir = "synth";
    std::uint64_t seed = 7;
    int labeled_n = 1500;
    int order_n = 1500;
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "generator seed");
    app.add_option("--labeled-n", labeled_n, "labeled set size");
    app.add_option("--order-n", order_n, "order task size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        fs::create_directories(out_dir);
        synth::SynthConfig cfg;
        cfg.seed = seed;
        auto reports = synth::make_reports(cfg);
        synth::write_reports_jsonl(reports, (fs::path(out_dir) / "reports.jsonl").string());
        synth::write_labeled_tsv(synth::make_labeled(seed, labeled_n),
                                 (fs::path(out_dir) / "labeled.tsv").string());
        synth::write_labeled_tsv(synth::make_order_task(seed, order_n),
                                 (fs::path(out_dir) / "order_task.tsv").string());
        std::cerr << reports.size() << " reports, " << labeled_n
                  << " labeled rows, " << order_n << " order rows -> "
                  << out_dir << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
