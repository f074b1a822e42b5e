#include "reportminer/classifier.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "reportminer/log.hpp"

namespace reportminer::classifier {

namespace {

constexpr char kNetMagic[6] = {'R', 'M', 'N', 'E', 'T', '1'};

constexpr int kAvgHidden = 20;
constexpr int kCnnFilters = 128;
constexpr int kCnnFilterLen = 3;
constexpr int kCnnPool = 2;
constexpr int kCnnHidden = 128;
constexpr int kLstmHidden = 100;
constexpr double kLstmDropout = 0.5;

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// token ids with OOV mapped to the pad row (the zero vector)
std::vector<int> to_ids(const std::vector<std::string>& tokens,
                        const corpus::Vocabulary& vocab, int pad_id) {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) {
        auto id = vocab.lookup(t);
        ids.push_back(id ? *id : pad_id);
    }
    return ids;
}

nn::Tensor ids_tensor(const std::vector<int>& ids) {
    std::vector<double> data(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) data[i] = ids[i];
    return nn::Tensor::vector(std::move(data));
}

// network input for one sentence: avg consumes the unpadded id sequence
// (mean over the actual tokens), cnn/lstm the padded one
nn::Tensor make_input(const TrainedClassifier& c,
                      const std::vector<std::string>& tokens) {
    if (c.arch == Arch::Avg) {
        return ids_tensor(to_ids(tokens, c.vocab, c.pad_id));
    }
    return ids_tensor(pad_sentence(tokens, c.pad_length, c.vocab, c.pad_id));
}

// stratified apportionment: per-class training counts by largest remainder,
// each class keeping at least one item on each side
std::vector<int> train_counts_per_class(const std::vector<int>& class_sizes,
                                        double fraction) {
    int total = std::accumulate(class_sizes.begin(), class_sizes.end(), 0);
    int want = static_cast<int>(std::lround(fraction * total));
    std::vector<int> counts(class_sizes.size());
    std::vector<std::pair<double, int>> remainders;
    int assigned = 0;
    for (std::size_t c = 0; c < class_sizes.size(); ++c) {
        double exact = fraction * class_sizes[c];
        counts[c] = static_cast<int>(exact);
        assigned += counts[c];
        remainders.emplace_back(exact - counts[c], static_cast<int>(c));
    }
    std::sort(remainders.begin(), remainders.end(), [](auto& a, auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t i = 0; assigned < want && i < remainders.size(); ++i) {
        int c = remainders[i].second;
        if (counts[c] < class_sizes[c]) {
            ++counts[c];
            ++assigned;
        }
    }
    for (std::size_t c = 0; c < counts.size(); ++c) {
        counts[c] = std::clamp(counts[c], 1, class_sizes[c] - 1);
    }
    return counts;
}

}  // namespace

Label label_from_string(const std::string& s) {
    if (s == "EVENT") return Label::Event;
    if (s == "SYMPTOM") return Label::Symptom;
    if (s == "ACTION") return Label::Action;
    throw std::invalid_argument("unknown label '" + s + "'");
}

std::string to_string(Label label) {
    switch (label) {
        case Label::Event: return "EVENT";
        case Label::Symptom: return "SYMPTOM";
        case Label::Action: return "ACTION";
    }
    return "EVENT";
}

Arch arch_from_string(const std::string& s) {
    if (s == "avg") return Arch::Avg;
    if (s == "cnn") return Arch::Cnn;
    if (s == "lstm") return Arch::Lstm;
    throw std::invalid_argument("unknown architecture '" + s +
                                "' (expected avg, cnn, or lstm)");
}

std::string to_string(Arch arch) {
    switch (arch) {
        case Arch::Avg: return "avg";
        case Arch::Cnn: return "cnn";
        case Arch::Lstm: return "lstm";
    }
    return "avg";
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t n = 0;
    for (const auto& row : counts) {
        for (auto v : row) n += v;
    }
    return n;
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t n = 0;
    for (int i = 0; i < kNumLabels; ++i) n += counts[std::size_t(i)][std::size_t(i)];
    return n;
}

std::int64_t ConfusionMatrix::row_sum(int gold) const {
    const auto& row = counts[std::size_t(gold)];
    return std::accumulate(row.begin(), row.end(), std::int64_t(0));
}

LabeledData load_labeled(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open labeled file: " + path.string());
    LabeledData data;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": expected label<TAB>sentence");
        }
        Label label;
        try {
            label = label_from_string(line.substr(0, tab));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(path.string() + ":" +
                                     std::to_string(lineno) + ": " + e.what());
        }
        // same denoising rules as the full corpus
        auto tokens = corpus::tokenize(corpus::clean_text(line.substr(tab + 1)));
        if (tokens.empty()) {
            ++data.skipped_empty;
            continue;
        }
        data.items.push_back({std::move(tokens), label});
    }
    if (data.skipped_empty > 0) {
        log_warn(std::to_string(data.skipped_empty) +
                 " labeled records empty after cleaning; skipped");
    }
    return data;
}

std::vector<int> pad_sentence(const std::vector<std::string>& tokens, int L,
                              const corpus::Vocabulary& vocab, int pad_id) {
    if (L < 1) throw std::invalid_argument("pad length must be >= 1");
    std::vector<int> ids = to_ids(tokens, vocab, pad_id);
    ids.resize(std::size_t(L), pad_id);  // truncates on the right when longer
    return ids;
}

std::vector<double> sentence_feature_avg(
    const std::vector<std::string>& tokens,
    const embedding::EmbeddingModel& model) {
    std::vector<double> mean(std::size_t(model.dim), 0.0);
    if (tokens.empty()) return mean;
    for (const auto& t : tokens) {
        if (auto id = model.vocab.lookup(t)) {
            auto v = model.center_vec(*id);
            for (int j = 0; j < model.dim; ++j) mean[std::size_t(j)] += v[std::size_t(j)];
        }
        // OOV tokens contribute the zero vector but still count
    }
    for (auto& x : mean) x /= double(tokens.size());
    return mean;
}

nn::Network build_architecture(Arch kind,
                               const embedding::EmbeddingModel& model, int L,
                               bool fine_tune, Rng& rng) {
    if (L < 1) throw std::invalid_argument("pad length must be >= 1");
    const int v = model.vocab.size();
    const int d = model.dim;
    // table rows 0..V-1 hold the pre-trained center vectors, row V is the
    // padding token (zero, frozen)
    nn::Tensor table({v + 1, d});
    std::memcpy(table.data.data(), model.center.data(),
                model.center.size() * sizeof(double));

    nn::Network net;
    net.add(nn::make_embedding_lookup(std::move(table), v, fine_tune));
    switch (kind) {
        case Arch::Avg:
            net.add(nn::make_mean_reduce(d));
            net.add(nn::make_dense(d, kAvgHidden, nn::Activation::Tanh, rng));
            net.add(nn::make_dense(kAvgHidden, kNumLabels,
                                   nn::Activation::Linear, rng));
            break;
        case Arch::Cnn: {
            net.add(nn::make_conv1d(d, kCnnFilters, kCnnFilterLen,
                                    nn::Activation::Relu, rng));
            net.add(nn::make_maxpool1d(kCnnPool));
            net.add(nn::make_conv1d(kCnnFilters, kCnnFilters, kCnnFilterLen,
                                    nn::Activation::Relu, rng));
            net.add(nn::make_maxpool1d(kCnnPool));
            int pooled = ceil_div(ceil_div(L, kCnnPool), kCnnPool);
            net.add(nn::make_dense(pooled * kCnnFilters, kCnnHidden,
                                   nn::Activation::Relu, rng));
            net.add(nn::make_dense(kCnnHidden, kNumLabels,
                                   nn::Activation::Linear, rng));
            break;
        }
        case Arch::Lstm:
            net.add(nn::make_lstm(d, kLstmHidden, rng));
            net.add(nn::make_dropout(kLstmDropout));
            net.add(nn::make_dense(kLstmHidden, kNumLabels,
                                   nn::Activation::Linear, rng));
            break;
    }
    return net;
}

std::pair<std::vector<LabeledSentence>, std::vector<LabeledSentence>>
split_train_test(const std::vector<LabeledSentence>& data, double fraction,
                 std::uint64_t seed) {
    if (data.empty()) throw std::invalid_argument("empty data set");
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw std::invalid_argument("fraction must be in (0, 1)");
    }
    std::array<std::vector<std::size_t>, kNumLabels> by_class;
    for (std::size_t i = 0; i < data.size(); ++i) {
        by_class[std::size_t(int(data[i].label))].push_back(i);
    }
    std::vector<int> sizes;
    for (const auto& c : by_class) {
        if (!c.empty() && c.size() < 2) {
            throw std::runtime_error("class with fewer than 2 members cannot be split");
        }
        if (!c.empty()) sizes.push_back(static_cast<int>(c.size()));
    }
    // shuffle within class, deal the first `count` into train
    Rng rng(derive_seed(seed, "split"));
    std::vector<LabeledSentence> train, test;
    std::size_t k = 0;
    std::vector<int> counts = train_counts_per_class(sizes, fraction);
    for (auto& members : by_class) {
        if (members.empty()) continue;
        rng.shuffle(members);
        int take = counts[k++];
        for (std::size_t i = 0; i < members.size(); ++i) {
            (int(i) < take ? train : test).push_back(data[members[i]]);
        }
    }
    return {std::move(train), std::move(test)};
}

TrainedClassifier train_classifier(const std::vector<LabeledSentence>& train,
                                   Arch kind, const ClassifierConfig& config,
                                   const embedding::EmbeddingModel& model) {
    if (train.empty()) throw std::invalid_argument("empty training set");
    if (config.epochs < 0 || config.batch < 1) {
        throw std::invalid_argument("invalid classifier config");
    }

    std::array<int, kNumLabels> class_counts{};
    std::size_t max_len = 1;
    for (const auto& item : train) {
        ++class_counts[std::size_t(int(item.label))];
        max_len = std::max(max_len, item.tokens.size());
    }
    for (int c = 0; c < kNumLabels; ++c) {
        if (class_counts[std::size_t(c)] == 0) {
            log_warn("training data has no " + to_string(Label(c)) +
                     " examples; proceeding");
        }
    }

    TrainedClassifier out;
    out.arch = kind;
    out.pad_length = static_cast<int>(max_len);
    out.pad_id = model.vocab.size();
    out.dim = model.dim;
    out.vocab = model.vocab;

    Rng init_rng(derive_seed(config.seed, "classifier-init"));
    out.net = build_architecture(kind, model, out.pad_length, config.fine_tune,
                                 init_rng);

    Rng shuffle_rng(derive_seed(config.seed, "classifier-shuffle"));
    Rng dropout_rng(derive_seed(config.seed, "dropout"));

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t idx : order) {
            const auto& item = train[idx];
            nn::Tensor input = make_input(out, item.tokens);
            epoch_loss += out.net.loss_and_backward(input, int(item.label),
                                                    true, &dropout_rng);
            out.net.sgd_step(config.learning_rate);
            out.net.zero_grads();
        }
        log_debug("epoch " + std::to_string(epoch + 1) + " mean loss " +
                  std::to_string(epoch_loss / double(train.size())));
    }
    return out;
}

std::pair<Label, std::vector<double>> predict(
    const TrainedClassifier& classifier,
    const std::vector<std::string>& tokens) {
    auto probs = classifier.net.predict_proba(make_input(classifier, tokens));
    int best = 0;
    for (int i = 1; i < kNumLabels; ++i) {
        if (probs[std::size_t(i)] > probs[std::size_t(best)]) best = i;
    }
    return {Label(best), std::move(probs)};
}

EvalReport evaluate(const TrainedClassifier& classifier,
                    const std::vector<LabeledSentence>& test) {
    if (test.empty()) throw std::invalid_argument("empty test set");
    EvalReport report;
    for (const auto& item : test) {
        auto [label, probs] = predict(classifier, item.tokens);
        report.confusion.counts[std::size_t(int(item.label))][std::size_t(int(label))] += 1;
    }
    report.accuracy = double(report.confusion.trace()) /
                      double(report.confusion.total());
    return report;
}

EvalReport kfold_cv(const std::vector<LabeledSentence>& data, int k, Arch kind,
                    const ClassifierConfig& config,
                    const embedding::EmbeddingModel& model) {
    if (k < 2) throw std::invalid_argument("k must be >= 2");
    std::array<std::vector<std::size_t>, kNumLabels> by_class;
    for (std::size_t i = 0; i < data.size(); ++i) {
        by_class[std::size_t(int(data[i].label))].push_back(i);
    }
    for (int c = 0; c < kNumLabels; ++c) {
        auto n = by_class[std::size_t(c)].size();
        if (n > 0 && n < std::size_t(k)) {
            throw std::runtime_error("class " + to_string(Label(c)) + " has " +
                                     std::to_string(n) + " members, fewer than k=" +
                                     std::to_string(k));
        }
    }
    // stratified deal: shuffle each class, then round-robin into folds
    Rng rng(derive_seed(config.seed, "folds"));
    std::vector<int> fold_of(data.size(), 0);
    for (auto& members : by_class) {
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i) {
            fold_of[members[i]] = static_cast<int>(i % std::size_t(k));
        }
    }

    EvalReport report;
    for (int fold = 0; fold < k; ++fold) {
        std::vector<LabeledSentence> train, test;
        for (std::size_t i = 0; i < data.size(); ++i) {
            (fold_of[i] == fold ? test : train).push_back(data[i]);
        }
        ClassifierConfig fold_config = config;
        fold_config.seed = derive_seed(config.seed, "fold", std::uint64_t(fold));
        auto classifier = train_classifier(train, kind, fold_config, model);
        auto fold_report = evaluate(classifier, test);
        report.fold_accuracies.push_back(fold_report.accuracy);
        for (int i = 0; i < kNumLabels; ++i) {
            for (int j = 0; j < kNumLabels; ++j) {
                report.confusion.counts[std::size_t(i)][std::size_t(j)] +=
                    fold_report.confusion.counts[std::size_t(i)][std::size_t(j)];
            }
        }
    }
    report.accuracy = double(report.confusion.trace()) /
                      double(report.confusion.total());
    return report;
}

void save_classifier(const TrainedClassifier& classifier,
                     const std::filesystem::path& path,
                     const std::string& embedding_ref) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(kNetMagic, sizeof kNetMagic);
    std::uint64_t arch = std::uint64_t(classifier.arch);
    out.write(reinterpret_cast<const char*>(&arch), sizeof arch);
    std::uint64_t pad_length = std::uint64_t(classifier.pad_length);
    out.write(reinterpret_cast<const char*>(&pad_length), sizeof pad_length);
    std::uint64_t ref_len = embedding_ref.size();
    out.write(reinterpret_cast<const char*>(&ref_len), sizeof ref_len);
    out.write(embedding_ref.data(), std::streamsize(ref_len));
    classifier.net.save(out);
    if (!out) throw std::runtime_error("I/O error writing " + path.string());
}

TrainedClassifier load_classifier(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[6];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kNetMagic, sizeof magic) != 0) {
        throw std::runtime_error(path.string() + ": bad classifier magic");
    }
    std::uint64_t arch = 0, pad_length = 0, ref_len = 0;
    in.read(reinterpret_cast<char*>(&arch), sizeof arch);
    in.read(reinterpret_cast<char*>(&pad_length), sizeof pad_length);
    in.read(reinterpret_cast<char*>(&ref_len), sizeof ref_len);
    if (!in) throw std::runtime_error(path.string() + ": truncated header");
    std::string ref(ref_len, '\0');
    in.read(ref.data(), std::streamsize(ref_len));
    if (!in) throw std::runtime_error(path.string() + ": truncated reference");

    TrainedClassifier out;
    out.arch = Arch(arch);
    out.pad_length = static_cast<int>(pad_length);
    out.net = nn::Network::load(in);

    // the referenced embedding file supplies the token -> id mapping;
    // resolve relative to the checkpoint's directory first
    std::filesystem::path ref_path(ref);
    if (ref_path.is_relative()) {
        auto sibling = path.parent_path() / ref_path;
        if (std::filesystem::exists(sibling)) ref_path = sibling;
    }
    auto model = embedding::load_embeddings(ref_path);
    out.vocab = std::move(model.vocab);
    out.dim = model.dim;
    out.pad_id = out.vocab.size();

    // the lookup table must cover vocab + pad
    auto layers = out.net.layers();
    if (layers.empty() ||
        layers.front()->spec().kind != nn::LayerKind::EmbeddingLookup ||
        layers.front()->spec().rows != out.vocab.size() + 1 ||
        layers.front()->spec().input_dim != out.dim) {
        throw std::runtime_error(path.string() +
                                 ": embedding reference does not match network");
    }
    return out;
}

std::string eval_report_json(const EvalReport& report) {
    nlohmann::json j;
    j["accuracy"] = report.accuracy;
    j["fold_accuracies"] = report.fold_accuracies;
    auto rows = nlohmann::json::array();
    for (int i = 0; i < kNumLabels; ++i) {
        auto row = nlohmann::json::array();
        for (int c = 0; c < kNumLabels; ++c) {
            row.push_back(report.confusion.counts[std::size_t(i)][std::size_t(c)]);
        }
        rows.push_back(row);
    }
    j["confusion"] = rows;
    return j.dump(2);
}

}  // namespace reportminer::classifier
