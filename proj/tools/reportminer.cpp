#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "reportminer/classifier.hpp"
#include "reportminer/config.hpp"
#include "reportminer/corpus.hpp"
#include "reportminer/embedding.hpp"
#include "reportminer/log.hpp"
#include "reportminer/mining.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace reportminer;

namespace {

json stats_json(const corpus::CorpusStats& stats) {
    json j;
    j["token_count"] = stats.token_count;
    j["vocab_size"] = stats.vocab_size;
    json hist = json::object();
    for (const auto& [bucket, count] : stats.length_histogram) {
        hist[std::to_string(bucket)] = count;
    }
    j["length_histogram"] = hist;
    auto top = json::array();
    for (const auto& [token, count] : stats.top_tokens) {
        top.push_back({{"token", token}, {"count", count}});
    }
    j["top_tokens"] = top;
    return j;
}

json ngram_json(const std::vector<std::pair<std::string, std::int64_t>>& grams) {
    auto arr = json::array();
    for (const auto& [gram, count] : grams) {
        arr.push_back({{"ngram", gram}, {"count", count}});
    }
    return arr;
}

json entry_to_json(const std::string& well,
                   const mining::TimelineEntry& e) {
    json j;
    j["well_id"] = well;
    j["date"] = e.date.to_string();
    j["report_seq"] = e.report_seq;
    j["sentence_index"] = e.sentence_index;
    j["operator_id"] = e.operator_id;
    j["text"] = e.text;
    j["label"] = classifier::to_string(e.label);
    j["probs"] = e.probs;
    return j;
}

std::vector<classifier::LabeledSentence> load_labeled_or_die(
    const fs::path& path) {
    auto data = classifier::load_labeled(path);
    if (data.items.empty()) {
        throw std::runtime_error("no usable labeled sentences in " +
                                 path.string());
    }
    return std::move(data.items);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reportminer - drilling-report text mining pipeline"};
    app.require_subcommand(0, 1);

    std::string config_path, out_dir, arch_flag;
    std::uint64_t seed_flag = 0;
    bool print_config = false;
    auto* opt_config = app.add_option("--config", config_path, "config file (key = value)");
    auto* opt_seed = app.add_option("--seed", seed_flag, "global seed");
    auto* opt_arch = app.add_option("--arch", arch_flag, "classifier architecture")
                         ->check(CLI::IsMember({"avg", "cnn", "lstm"}));
    auto* opt_out = app.add_option("--out", out_dir, "output directory");
    app.add_flag("--print-config", print_config, "print the effective config and exit");

    // clean
    auto* cmd_clean = app.add_subcommand("clean", "apply the denoising rules to a corpus");
    std::string clean_in, clean_out;
    cmd_clean->add_option("--in", clean_in, "reports JSONL")->required();
    cmd_clean->add_option("--out-file", clean_out, "cleaned corpus output")->required();

    // stats
    auto* cmd_stats = app.add_subcommand("stats", "corpus statistics and n-gram tables");
    std::string stats_in;
    int stats_bucket = 0, stats_topk = 20, stats_ngram_top = 10;
    cmd_stats->add_option("--in", stats_in, "reports JSONL")->required();
    auto* opt_bucket = cmd_stats->add_option("--bucket-width", stats_bucket, "histogram bucket width");
    cmd_stats->add_option("--top-k", stats_topk, "top tokens to report");
    cmd_stats->add_option("--ngram-top", stats_ngram_top, "entries per n-gram table");

    // embed
    auto* cmd_embed = app.add_subcommand("embed", "train skip-gram embeddings");
    std::string embed_in;
    cmd_embed->add_option("--in", embed_in, "reports JSONL")->required();
    int e_window = 0, e_dim = 0, e_neg = 0, e_batch = 0, e_epochs = 0, e_minc = 0;
    double e_lr = 0.0, e_power = 0.0;
    auto* o_window = cmd_embed->add_option("--window", e_window, "context window m");
    auto* o_dim = cmd_embed->add_option("--dim", e_dim, "embedding dimension d");
    auto* o_neg = cmd_embed->add_option("--negatives", e_neg, "negative samples k");
    auto* o_batch = cmd_embed->add_option("--batch", e_batch, "trace batch b");
    auto* o_epochs = cmd_embed->add_option("--epochs", e_epochs, "training epochs");
    auto* o_lr = cmd_embed->add_option("--learning-rate", e_lr, "SGD learning rate");
    auto* o_minc = cmd_embed->add_option("--min-count", e_minc, "vocabulary min count");
    auto* o_power = cmd_embed->add_option("--noise-power", e_power,
                                          "noise distribution exponent (1 = raw unigram)");

    // neighbors
    auto* cmd_neighbors = app.add_subcommand("neighbors", "nearest neighbors of a token");
    std::string nb_embeddings, nb_token;
    int nb_top = 10;
    cmd_neighbors->add_option("--embeddings", nb_embeddings, "embedding text file")->required();
    cmd_neighbors->add_option("--token", nb_token, "query token")->required();
    cmd_neighbors->add_option("-n,--top", nb_top, "number of neighbors");

    // train
    auto* cmd_train = app.add_subcommand("train", "train a sentence classifier");
    std::string tr_labeled, tr_embeddings;
    int c_epochs = 0, c_batch = 0;
    double c_lr = 0.0;
    bool tr_cv = false, tr_fine_tune = false;
    cmd_train->add_option("--labeled", tr_labeled, "labeled TSV")->required();
    cmd_train->add_option("--embeddings", tr_embeddings, "embedding text file")->required();
    auto* o_clr = cmd_train->add_option("--cls-learning-rate", c_lr, "classifier learning rate");
    auto* o_cepochs = cmd_train->add_option("--cls-epochs", c_epochs, "classifier epochs");
    auto* o_cbatch = cmd_train->add_option("--cls-batch", c_batch, "classifier batch");
    cmd_train->add_flag("--fine-tune", tr_fine_tune, "unfreeze the embedding layer");
    cmd_train->add_flag("--cv", tr_cv, "also run 5-fold cross-validation");

    // eval
    auto* cmd_eval = app.add_subcommand("eval", "evaluate a classifier checkpoint");
    std::string ev_checkpoint, ev_labeled;
    cmd_eval->add_option("--checkpoint", ev_checkpoint, "classifier checkpoint")->required();
    cmd_eval->add_option("--labeled", ev_labeled, "labeled TSV")->required();

    // classify
    auto* cmd_classify = app.add_subcommand("classify", "label every report sentence");
    std::string cl_reports, cl_checkpoint, cl_out;
    bool cl_npt_only = false;
    cmd_classify->add_option("--reports", cl_reports, "reports JSONL")->required();
    cmd_classify->add_option("--checkpoint", cl_checkpoint, "classifier checkpoint")->required();
    cmd_classify->add_option("--out-file", cl_out, "timelines JSONL output")->required();
    cmd_classify->add_flag("--npt-only", cl_npt_only, "restrict to NPT reports");

    // query
    auto* cmd_query = app.add_subcommand("query", "analytics over classified timelines");
    cmd_query->require_subcommand(1);
    auto* q_summary = cmd_query->add_subcommand("summary", "field performance summary");
    std::string qs_reports;
    q_summary->add_option("--reports", qs_reports, "reports JSONL")->required();

    auto* q_rank = cmd_query->add_subcommand("rank-wells", "wells by EVENT count");
    std::string qr_timelines;
    int qr_top = 10;
    q_rank->add_option("--timelines", qr_timelines, "timelines JSONL")->required();
    q_rank->add_option("--top", qr_top, "number of wells");

    auto* q_op = cmd_query->add_subcommand("operator-behavior", "per-operator label mix on a well");
    std::string qo_timelines, qo_well;
    q_op->add_option("--timelines", qo_timelines, "timelines JSONL")->required();
    q_op->add_option("--well", qo_well, "well id")->required();

    auto* q_seq = cmd_query->add_subcommand("sequences", "antecedent -> consequent matches");
    std::string qq_timelines, qq_ante = "SYMPTOM", qq_cons = "ACTION";
    std::string qq_ante_contains, qq_cons_contains;
    int qq_horizon = 3;
    q_seq->add_option("--timelines", qq_timelines, "timelines JSONL")->required();
    q_seq->add_option("--antecedent", qq_ante, "antecedent label");
    q_seq->add_option("--consequent", qq_cons, "consequent label");
    q_seq->add_option("--antecedent-contains", qq_ante_contains, "substring filter");
    q_seq->add_option("--consequent-contains", qq_cons_contains, "substring filter");
    q_seq->add_option("--horizon", qq_horizon, "look-ahead in sentences");

    auto* q_reg = cmd_query->add_subcommand("regression", "NPT duration vs report count");
    std::string qg_reports;
    q_reg->add_option("--reports", qg_reports, "reports JSONL")->required();

    // global flags (--seed, --arch, --out, --config) may follow a subcommand
    for (auto* sub : {cmd_clean, cmd_stats, cmd_embed, cmd_neighbors, cmd_train,
                      cmd_eval, cmd_classify, cmd_query}) {
        sub->fallthrough();
    }
    for (auto* sub : {q_summary, q_rank, q_op, q_seq, q_reg}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        // defaults < file < flags
        config::PipelineConfig cfg;
        if (opt_config->count() > 0) cfg = config::load_config_file(config_path);
        if (opt_seed->count() > 0) cfg.seed = seed_flag;
        if (opt_arch->count() > 0) cfg.arch = arch_flag;
        if (opt_out->count() > 0) cfg.out_dir = out_dir;

        if (print_config) {
            std::cout << config::serialize(cfg);
            return 0;
        }
        if (app.get_subcommands().empty()) {
            std::cerr << app.help();
            return 1;
        }

        if (*cmd_clean) {
            auto reports = corpus::ingest_reports(clean_in);
            std::ofstream out(clean_out);
            if (!out) throw std::runtime_error("cannot write " + clean_out);
            for (const auto& r : reports) {
                out << corpus::clean_text(r.text) << '\n';
            }
            log_info("cleaned " + std::to_string(reports.size()) + " reports");
        } else if (*cmd_stats) {
            auto reports = corpus::ingest_reports(stats_in);
            int bucket = opt_bucket->count() ? stats_bucket : cfg.bucket_width;
            auto stats = corpus::corpus_stats(reports, bucket, stats_topk);
            std::vector<corpus::Sentence> sentences;
            for (const auto& r : reports) {
                auto s = corpus::segment_sentences(r);
                sentences.insert(sentences.end(), s.begin(), s.end());
            }
            json j = stats_json(stats);
            j["top_3grams"] = ngram_json(corpus::top_ngrams(sentences, 3, stats_ngram_top));
            j["top_4grams"] = ngram_json(corpus::top_ngrams(sentences, 4, stats_ngram_top));
            std::cout << j.dump(2) << '\n';
        } else if (*cmd_embed) {
            auto reports = corpus::ingest_reports(embed_in);
            std::vector<corpus::Sentence> sentences;
            for (const auto& r : reports) {
                auto s = corpus::segment_sentences(r);
                sentences.insert(sentences.end(), s.begin(), s.end());
            }
            embedding::EmbeddingConfig ec = cfg.embedding;
            ec.seed = cfg.seed;
            if (o_window->count()) ec.window = e_window;
            if (o_dim->count()) ec.dim = e_dim;
            if (o_neg->count()) ec.negatives = e_neg;
            if (o_batch->count()) ec.batch = e_batch;
            if (o_epochs->count()) ec.epochs = e_epochs;
            if (o_lr->count()) ec.learning_rate = e_lr;
            if (o_power->count()) ec.noise_power = e_power;
            int min_count = o_minc->count() ? e_minc : cfg.min_count;

            auto vocab = corpus::build_vocabulary(sentences, min_count);
            log_info("vocabulary " + std::to_string(vocab.size()) + " tokens, T=" +
                     std::to_string(vocab.total_tokens));
            auto [model, trace] = embedding::train_embeddings(sentences, vocab, ec);
            fs::create_directories(cfg.out_dir);
            embedding::save_embeddings(model, fs::path(cfg.out_dir) / "embeddings.txt");
            embedding::save_checkpoint(model, fs::path(cfg.out_dir) / "embedding.rmemb");
            embedding::write_loss_trace_csv(trace, fs::path(cfg.out_dir) / "loss_trace.csv");
            log_info("final epoch mean loss " +
                     std::to_string(trace.epoch_means.back()));
        } else if (*cmd_neighbors) {
            auto model = embedding::load_embeddings(nb_embeddings);
            auto neighbors = embedding::nearest_neighbors(model, nb_token, nb_top);
            auto arr = json::array();
            for (const auto& [token, sim] : neighbors) {
                arr.push_back({{"token", token}, {"similarity", sim}});
            }
            std::cout << arr.dump(2) << '\n';
        } else if (*cmd_train) {
            auto items = load_labeled_or_die(tr_labeled);
            auto model = embedding::load_embeddings(tr_embeddings);
            classifier::ClassifierConfig cc = cfg.classifier;
            cc.seed = cfg.seed;
            if (o_clr->count()) cc.learning_rate = c_lr;
            if (o_cepochs->count()) cc.epochs = c_epochs;
            if (o_cbatch->count()) cc.batch = c_batch;
            if (tr_fine_tune) cc.fine_tune = true;
            auto kind = classifier::arch_from_string(cfg.arch);

            auto [train, test] = classifier::split_train_test(items, 0.8, cfg.seed);
            auto trained = classifier::train_classifier(train, kind, cc, model);
            auto report = classifier::evaluate(trained, test);

            fs::create_directories(cfg.out_dir);
            classifier::save_classifier(trained,
                                        fs::path(cfg.out_dir) / "classifier.rmnet",
                                        tr_embeddings);
            std::ofstream ev(fs::path(cfg.out_dir) / "eval.json");
            ev << classifier::eval_report_json(report) << '\n';
            log_info("held-out accuracy " + std::to_string(report.accuracy));
            if (tr_cv) {
                auto cv = classifier::kfold_cv(items, 5, kind, cc, model);
                std::ofstream cvf(fs::path(cfg.out_dir) / "cv.json");
                cvf << classifier::eval_report_json(cv) << '\n';
                log_info("5-fold pooled accuracy " + std::to_string(cv.accuracy));
            }
        } else if (*cmd_eval) {
            auto trained = classifier::load_classifier(ev_checkpoint);
            auto items = load_labeled_or_die(ev_labeled);
            auto report = classifier::evaluate(trained, items);
            std::cout << classifier::eval_report_json(report) << '\n';
        } else if (*cmd_classify) {
            auto reports = corpus::ingest_reports(cl_reports);
            auto trained = classifier::load_classifier(cl_checkpoint);
            auto timelines = mining::classify_corpus(reports, trained, cl_npt_only);
            mining::save_timelines(timelines, cl_out);
            std::size_t entries = 0;
            for (const auto& t : timelines) entries += t.entries.size();
            log_info("labeled " + std::to_string(entries) + " sentences across " +
                     std::to_string(timelines.size()) + " wells");
        } else if (*cmd_query) {
            if (*q_summary) {
                auto reports = corpus::ingest_reports(qs_reports);
                auto summary = mining::field_summary(reports);
                json j;
                j["wells_total"] = summary.wells_total;
                j["wells_with_npt"] = summary.wells_with_npt;
                j["performance_estimate"] = summary.performance_estimate;
                j["npt_duration_per_well"] = summary.npt_duration_per_well;
                j["reports_per_well"] = summary.reports_per_well;
                std::cout << j.dump(2) << '\n';
            } else if (*q_rank) {
                auto timelines = mining::load_timelines(qr_timelines);
                auto ranked = mining::rank_problematic_wells(timelines, qr_top);
                auto arr = json::array();
                for (const auto& [well, events] : ranked) {
                    arr.push_back({{"well_id", well}, {"event_count", events}});
                }
                std::cout << arr.dump(2) << '\n';
            } else if (*q_op) {
                auto timelines = mining::load_timelines(qo_timelines);
                auto behavior = mining::operator_behavior(timelines, qo_well);
                json j = json::object();
                for (const auto& [op, p] : behavior) {
                    j[op] = {{"event", p[0]}, {"symptom", p[1]}, {"action", p[2]}};
                }
                std::cout << j.dump(2) << '\n';
            } else if (*q_seq) {
                auto timelines = mining::load_timelines(qq_timelines);
                mining::SequencePattern ante{classifier::label_from_string(qq_ante), {}};
                mining::SequencePattern cons{classifier::label_from_string(qq_cons), {}};
                if (!qq_ante_contains.empty()) ante.contains = qq_ante_contains;
                if (!qq_cons_contains.empty()) cons.contains = qq_cons_contains;
                auto matches = mining::find_sequences(timelines, ante, cons, qq_horizon);
                auto arr = json::array();
                for (const auto& m : matches) {
                    json j;
                    j["well_id"] = m.well_id;
                    j["antecedent"] = entry_to_json(m.well_id, m.antecedent);
                    j["consequent"] = entry_to_json(m.well_id, m.consequent);
                    if (m.following) {
                        j["following"] = entry_to_json(m.well_id, *m.following);
                    }
                    arr.push_back(std::move(j));
                }
                std::cout << arr.dump(2) << '\n';
            } else if (*q_reg) {
                auto reports = corpus::ingest_reports(qg_reports);
                auto summary = mining::field_summary(reports);
                std::vector<double> xs, ys;
                for (const auto& [well, count] : summary.reports_per_well) {
                    xs.push_back(double(count));
                    ys.push_back(double(summary.npt_duration_per_well.at(well)));
                }
                auto fit = mining::fit_regression(xs, ys);
                json j;
                j["slope"] = fit.slope;
                j["intercept"] = fit.intercept;
                j["r"] = fit.r;
                j["points"] = xs.size();
                std::cout << j.dump(2) << '\n';
            }
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
