#include "reportminer/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace reportminer::embedding {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// -log sigma(x) = softplus(-x), stable for large |x|
double neg_log_sigmoid(double x) {
    if (x >= 0.0) return std::log1p(std::exp(-x));
    return -x + std::log1p(std::exp(x));
}

void check_id(int id, int v, const char* what) {
    if (id < 0 || id >= v) {
        throw std::out_of_range(std::string(what) + " id out of range: " +
                                std::to_string(id));
    }
}

void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw std::runtime_error("truncated checkpoint");
    return v;
}

void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw std::runtime_error("truncated checkpoint");
    return v;
}

constexpr char kCheckpointMagic[6] = {'R', 'M', 'E', 'M', 'B', '1'};

}  // namespace

void EmbeddingConfig::validate() const {
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    if (dim < 1) throw std::invalid_argument("dim must be >= 1");
    if (negatives < 1) throw std::invalid_argument("negatives must be >= 1");
    if (batch < 1) throw std::invalid_argument("batch must be >= 1");
    if (!(learning_rate >= 0.0)) {
        throw std::invalid_argument("learning_rate must be >= 0");
    }
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (!(noise_power > 0.0)) {
        throw std::invalid_argument("noise_power must be > 0");
    }
}

EmbeddingModel init_model(const corpus::Vocabulary& vocab,
                          const EmbeddingConfig& config) {
    config.validate();
    if (vocab.size() == 0) throw std::invalid_argument("empty vocabulary");
    EmbeddingModel model;
    model.vocab = vocab;
    model.config = config;
    model.dim = config.dim;
    std::size_t n = std::size_t(vocab.size()) * config.dim;
    model.center.resize(n);
    model.outer.resize(n);
    Rng rng(derive_seed(config.seed, "embedding-init"));
    for (auto& x : model.center) x = rng.uniform(-1.0, 1.0);
    for (auto& x : model.outer) x = rng.uniform(-1.0, 1.0);
    return model;
}

std::vector<TrainingPair> generate_pairs(
    const std::vector<corpus::Sentence>& sentences,
    const corpus::Vocabulary& vocab, int window, Rng& rng) {
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    std::vector<TrainingPair> pairs;
    std::vector<int> ids;
    for (const auto& sentence : sentences) {
        ids.clear();
        for (const auto& token : sentence.tokens) {
            if (auto id = vocab.lookup(token)) ids.push_back(*id);
        }
        const int n = static_cast<int>(ids.size());
        for (int c = 0; c < n; ++c) {
            int lo = std::max(0, c - window);
            int hi = std::min(n - 1, c + window);
            int neighbors = hi - lo;  // window positions minus the center
            if (neighbors <= 0) continue;
            int pick = lo + static_cast<int>(rng.index(std::uint64_t(neighbors)));
            if (pick >= c) ++pick;  // skip the center itself
            pairs.push_back({ids[c], ids[pick]});
        }
    }
    return pairs;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double nce_loss(int center_id, int outer_id,
                const std::vector<int>& negative_ids,
                const EmbeddingModel& model) {
    check_id(center_id, model.vocab.size(), "center");
    check_id(outer_id, model.vocab.size(), "outer");
    auto vc = model.center_vec(center_id);
    double loss = neg_log_sigmoid(dot(model.outer_vec(outer_id), vc));
    for (int id : negative_ids) {
        check_id(id, model.vocab.size(), "negative");
        loss += neg_log_sigmoid(-dot(model.outer_vec(id), vc));
    }
    return loss;
}

NceGradients nce_gradients(int center_id, int outer_id,
                           const std::vector<int>& negative_ids,
                           const EmbeddingModel& model) {
    check_id(center_id, model.vocab.size(), "center");
    check_id(outer_id, model.vocab.size(), "outer");
    const int d = model.dim;
    auto vc = model.center_vec(center_id);
    auto uo = model.outer_vec(outer_id);

    NceGradients g;
    g.center.assign(std::size_t(d), 0.0);
    g.outer.assign(std::size_t(d), 0.0);
    g.negatives.reserve(negative_ids.size());

    // d(loss)/d(v_c) = (sigma(u_o.v_c) - 1) u_o + sum_i sigma(u_i.v_c) u_i
    double pos = sigmoid(dot(uo, vc)) - 1.0;
    for (int j = 0; j < d; ++j) {
        g.center[std::size_t(j)] = pos * uo[std::size_t(j)];
        g.outer[std::size_t(j)] = pos * vc[std::size_t(j)];
    }
    for (int id : negative_ids) {
        check_id(id, model.vocab.size(), "negative");
        auto ui = model.outer_vec(id);
        double neg = sigmoid(dot(ui, vc));
        std::vector<double> gi(std::size_t(d), 0.0);
        for (int j = 0; j < d; ++j) {
            g.center[std::size_t(j)] += neg * ui[std::size_t(j)];
            gi[std::size_t(j)] = neg * vc[std::size_t(j)];
        }
        g.negatives.push_back(std::move(gi));
    }
    return g;
}

std::vector<double> noise_distribution(const corpus::Vocabulary& vocab,
                                       double power) {
    std::vector<double> weights(vocab.counts.size());
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        weights[i] = std::pow(static_cast<double>(vocab.counts[i]), power);
        total += weights[i];
    }
    for (auto& w : weights) w /= total;
    return weights;
}

std::pair<EmbeddingModel, LossTrace> train_embeddings(
    const std::vector<corpus::Sentence>& sentences,
    const corpus::Vocabulary& vocab, const EmbeddingConfig& config) {
    config.validate();
    if (vocab.size() == 0) throw std::invalid_argument("empty vocabulary");

    EmbeddingModel model = init_model(vocab, config);
    AliasSampler noise(noise_distribution(vocab, config.noise_power));
    Rng neg_rng(derive_seed(config.seed, "embedding-negatives"));

    LossTrace trace;
    const int d = config.dim;
    const double lr = config.learning_rate;
    std::int64_t step = 0;
    double interval_sum = 0.0;
    int interval_count = 0;
    std::vector<int> negatives(std::size_t(config.negatives));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng pair_rng(derive_seed(config.seed, "embedding-pairs",
                                 std::uint64_t(epoch)));
        auto pairs = generate_pairs(sentences, vocab, config.window, pair_rng);
        if (epoch == 0) {
            trace.pairs_per_epoch = static_cast<std::int64_t>(pairs.size());
            if (pairs.empty()) {
                throw std::runtime_error(
                    "no training pairs (corpus empty after vocabulary filter)");
            }
        }
        double epoch_sum = 0.0;
        for (const auto& pair : pairs) {
            for (auto& id : negatives) {
                id = static_cast<int>(noise.sample(neg_rng));
            }
            auto vc = model.center_vec(pair.center);
            auto uo = model.outer_vec(pair.outer);

            // gradients are taken at the pre-update snapshot and applied
            // afterwards, so duplicate negative draws accumulate exactly
            double zo = dot(uo, vc);
            double loss = neg_log_sigmoid(zo);
            double pos = sigmoid(zo) - 1.0;

            thread_local std::vector<double> gcenter;
            thread_local std::vector<double> coeff;
            gcenter.assign(std::size_t(d), 0.0);
            coeff.assign(negatives.size(), 0.0);
            for (int j = 0; j < d; ++j) {
                gcenter[std::size_t(j)] = pos * uo[std::size_t(j)];
            }
            for (std::size_t i = 0; i < negatives.size(); ++i) {
                auto ui = model.outer_vec(negatives[i]);
                double zi = dot(ui, vc);
                loss += neg_log_sigmoid(-zi);
                coeff[i] = sigmoid(zi);
                for (int j = 0; j < d; ++j) {
                    gcenter[std::size_t(j)] += coeff[i] * ui[std::size_t(j)];
                }
            }
            for (int j = 0; j < d; ++j) {
                uo[std::size_t(j)] -= lr * pos * vc[std::size_t(j)];
            }
            for (std::size_t i = 0; i < negatives.size(); ++i) {
                auto ui = model.outer_vec(negatives[i]);
                for (int j = 0; j < d; ++j) {
                    ui[std::size_t(j)] -= lr * coeff[i] * vc[std::size_t(j)];
                }
            }
            for (int j = 0; j < d; ++j) {
                vc[std::size_t(j)] -= lr * gcenter[std::size_t(j)];
            }

            ++step;
            epoch_sum += loss;
            interval_sum += loss;
            if (++interval_count == config.batch) {
                trace.intervals.emplace_back(step, interval_sum / interval_count);
                interval_sum = 0.0;
                interval_count = 0;
            }
        }
        if (interval_count > 0) {
            trace.intervals.emplace_back(step, interval_sum / interval_count);
            interval_sum = 0.0;
            interval_count = 0;
        }
        trace.epoch_means.push_back(epoch_sum /
                                    static_cast<double>(pairs.size()));
    }
    return {std::move(model), std::move(trace)};
}

double cosine_similarity(std::span<const double> a,
                         std::span<const double> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("cosine_similarity: size mismatch");
    }
    double na = dot(a, a);
    double nb = dot(b, b);
    if (na == 0.0 || nb == 0.0) {
        throw std::invalid_argument("cosine_similarity: zero vector");
    }
    return dot(a, b) / std::sqrt(na * nb);
}

std::vector<std::pair<std::string, double>> nearest_neighbors(
    const EmbeddingModel& model, const std::string& token, int n) {
    auto id = model.vocab.lookup(token);
    if (!id) {
        throw std::invalid_argument("token not in vocabulary: " + token);
    }
    if (n <= 0) return {};
    auto query = model.center_vec(*id);
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(std::size_t(model.vocab.size()));
    for (int i = 0; i < model.vocab.size(); ++i) {
        if (i == *id) continue;
        auto candidate = model.center_vec(i);
        if (dot(candidate, candidate) == 0.0) continue;  // unrankable
        scored.emplace_back(model.vocab.token_of[std::size_t(i)],
                            cosine_similarity(query, candidate));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > std::size_t(n)) scored.resize(std::size_t(n));
    return scored;
}

void save_embeddings(const EmbeddingModel& model,
                     const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << model.vocab.size() << ' ' << model.dim << '\n';
    char buf[32];
    for (int i = 0; i < model.vocab.size(); ++i) {
        out << model.vocab.token_of[std::size_t(i)];
        auto v = model.center_vec(i);
        for (double x : v) {
            std::snprintf(buf, sizeof buf, "%.17g", x);
            out << ' ' << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("I/O error writing " + path.string());
}

EmbeddingModel load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string header;
    if (!std::getline(in, header)) {
        throw std::runtime_error(path.string() + ": missing header");
    }
    std::istringstream hs(header);
    std::int64_t v = 0;
    int d = 0;
    if (!(hs >> v >> d) || v < 1 || d < 1) {
        throw std::runtime_error(path.string() + ": malformed header '" +
                                 header + "'");
    }
    EmbeddingModel model;
    model.dim = d;
    model.config.dim = d;
    model.center.resize(std::size_t(v) * d);
    model.vocab.token_of.reserve(std::size_t(v));
    model.vocab.counts.assign(std::size_t(v), 0);

    std::string line;
    for (std::int64_t row = 0; row < v; ++row) {
        if (!std::getline(in, line)) {
            throw std::runtime_error(path.string() + ": expected " +
                                     std::to_string(v) + " rows, found " +
                                     std::to_string(row));
        }
        std::istringstream ls(line);
        std::string token;
        if (!(ls >> token)) {
            throw std::runtime_error(path.string() + ": empty row " +
                                     std::to_string(row + 2));
        }
        if (model.vocab.id_of.count(token)) {
            throw std::runtime_error(path.string() + ": duplicate token '" +
                                     token + "'");
        }
        model.vocab.id_of.emplace(token, static_cast<int>(row));
        model.vocab.token_of.push_back(token);
        for (int j = 0; j < d; ++j) {
            if (!(ls >> model.center[std::size_t(row) * d + j])) {
                throw std::runtime_error(path.string() + ": row for '" + token +
                                         "' has fewer than " +
                                         std::to_string(d) + " values");
            }
        }
        double extra;
        if (ls >> extra) {
            throw std::runtime_error(path.string() + ": row for '" + token +
                                     "' has more than " + std::to_string(d) +
                                     " values");
        }
    }
    return model;
}

void save_checkpoint(const EmbeddingModel& model,
                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    write_u64(out, std::uint64_t(model.vocab.size()));
    write_u64(out, std::uint64_t(model.dim));
    write_u64(out, std::uint64_t(model.config.window));
    write_u64(out, std::uint64_t(model.config.negatives));
    write_u64(out, std::uint64_t(model.config.batch));
    write_u64(out, std::uint64_t(model.config.epochs));
    write_u64(out, model.config.seed);
    write_f64(out, model.config.learning_rate);
    write_f64(out, model.config.noise_power);
    for (int i = 0; i < model.vocab.size(); ++i) {
        const auto& token = model.vocab.token_of[std::size_t(i)];
        write_u64(out, token.size());
        out.write(token.data(), std::streamsize(token.size()));
        write_u64(out, std::uint64_t(model.vocab.counts[std::size_t(i)]));
    }
    for (double x : model.center) write_f64(out, x);
    for (double x : model.outer) write_f64(out, x);
    if (!out) throw std::runtime_error("I/O error writing " + path.string());
}

EmbeddingModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[6];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
        throw std::runtime_error(path.string() + ": bad checkpoint magic");
    }
    EmbeddingModel model;
    auto v = static_cast<std::int64_t>(read_u64(in));
    model.dim = static_cast<int>(read_u64(in));
    model.config.dim = model.dim;
    model.config.window = static_cast<int>(read_u64(in));
    model.config.negatives = static_cast<int>(read_u64(in));
    model.config.batch = static_cast<int>(read_u64(in));
    model.config.epochs = static_cast<int>(read_u64(in));
    model.config.seed = read_u64(in);
    model.config.learning_rate = read_f64(in);
    model.config.noise_power = read_f64(in);
    if (v < 1 || model.dim < 1) {
        throw std::runtime_error(path.string() + ": corrupt dimensions");
    }
    for (std::int64_t i = 0; i < v; ++i) {
        auto len = read_u64(in);
        std::string token(len, '\0');
        in.read(token.data(), std::streamsize(len));
        if (!in) throw std::runtime_error("truncated checkpoint");
        auto count = static_cast<std::int64_t>(read_u64(in));
        if (model.vocab.id_of.count(token)) {
            throw std::runtime_error(path.string() + ": duplicate token '" +
                                     token + "'");
        }
        model.vocab.id_of.emplace(token, static_cast<int>(i));
        model.vocab.token_of.push_back(std::move(token));
        model.vocab.counts.push_back(count);
        model.vocab.total_tokens += count;
    }
    model.center.resize(std::size_t(v) * model.dim);
    model.outer.resize(std::size_t(v) * model.dim);
    for (auto& x : model.center) x = read_f64(in);
    for (auto& x : model.outer) x = read_f64(in);
    return model;
}

void write_loss_trace_csv(const LossTrace& trace,
                          const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "step,mean_loss\n";
    char buf[32];
    for (const auto& [step, loss] : trace.intervals) {
        std::snprintf(buf, sizeof buf, "%.17g", loss);
        out << step << ',' << buf << '\n';
    }
}

}  // namespace reportminer::embedding
