#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "reportminer/classifier.hpp"
#include "reportminer/synth.hpp"

#include "testutil.hpp"

using namespace reportminer;
using classifier::Arch;
using classifier::ClassifierConfig;
using classifier::Label;
using classifier::LabeledSentence;
using embedding::EmbeddingModel;

namespace {

// vocabulary + random embedding covering every token in the rows
EmbeddingModel model_over(const std::vector<synth::LabeledRow>& rows, int dim,
                          std::uint64_t seed) {
    std::vector<corpus::Sentence> sentences;
    for (const auto& row : rows) {
        corpus::Sentence s;
        s.tokens = corpus::tokenize(row.text);
        sentences.push_back(std::move(s));
    }
    auto vocab = corpus::build_vocabulary(sentences, 1);
    embedding::EmbeddingConfig cfg;
    cfg.dim = dim;
    cfg.negatives = 2;
    cfg.seed = seed;
    return embedding::init_model(vocab, cfg);
}

std::vector<LabeledSentence> to_labeled(const std::vector<synth::LabeledRow>& rows) {
    std::vector<LabeledSentence> out;
    for (const auto& row : rows) {
        out.push_back({corpus::tokenize(corpus::clean_text(row.text)), row.label});
    }
    return out;
}

double self_accuracy(const classifier::TrainedClassifier& c,
                     const std::vector<LabeledSentence>& data) {
    return classifier::evaluate(c, data).accuracy;
}

}  // namespace

TEST_CASE("label and arch parsing") {
    CHECK(classifier::label_from_string("EVENT") == Label::Event);
    CHECK(classifier::to_string(Label::Symptom) == "SYMPTOM");
    CHECK_THROWS_WITH_AS(classifier::label_from_string("FOO"),
                         doctest::Contains("FOO"), std::invalid_argument);
    CHECK(classifier::arch_from_string("cnn") == Arch::Cnn);
    CHECK_THROWS_AS(classifier::arch_from_string("mlp"), std::invalid_argument);
}

TEST_CASE("load_labeled") {
    SUBCASE("well-formed rows are cleaned and kept in order") {
        auto data = classifier::load_labeled(testutil::fixture("labeled_small.tsv"));
        REQUIRE(data.items.size() == 4);
        CHECK(data.items[0].label == Label::Action);
        CHECK(data.items[0].tokens == std::vector<std::string>{"circ", "bottoms", "up"});
        CHECK(data.items[1].label == Label::Event);
        CHECK(data.skipped_empty == 0);
    }
    SUBCASE("a bad label aborts before any training, naming the offender") {
        CHECK_THROWS_WITH_AS(
            classifier::load_labeled(testutil::fixture("labeled_badlabel.tsv")),
            doctest::Contains("FOO"), std::runtime_error);
    }
    SUBCASE("rows emptied by cleaning are skipped and counted") {
        auto data = classifier::load_labeled(testutil::fixture("labeled_skip_empty.tsv"));
        CHECK(data.items.size() == 2);
        CHECK(data.skipped_empty == 1);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(classifier::load_labeled("no/such.tsv"), std::runtime_error);
    }
}

TEST_CASE("pad_sentence") {
    corpus::Vocabulary vocab;
    for (std::string t : {"a", "b", "c"}) {
        vocab.id_of.emplace(t, vocab.size());
        vocab.token_of.push_back(t);
        vocab.counts.push_back(1);
        vocab.total_tokens += 1;
    }
    const int pad = 3;
    CHECK(classifier::pad_sentence({"a", "b"}, 4, vocab, pad) ==
          std::vector<int>{0, 1, pad, pad});
    CHECK(classifier::pad_sentence({"a", "b", "c"}, 2, vocab, pad) ==
          std::vector<int>{0, 1});
    CHECK(classifier::pad_sentence({}, 3, vocab, pad) ==
          std::vector<int>{pad, pad, pad});
    // OOV maps to the pad id
    CHECK(classifier::pad_sentence({"zzz"}, 2, vocab, pad) ==
          std::vector<int>{pad, pad});
}

TEST_CASE("sentence_feature_avg") {
    corpus::Vocabulary vocab;
    for (std::string t : {"x", "y"}) {
        vocab.id_of.emplace(t, vocab.size());
        vocab.token_of.push_back(t);
        vocab.counts.push_back(1);
        vocab.total_tokens += 1;
    }
    EmbeddingModel model;
    model.vocab = vocab;
    model.dim = 2;
    model.center = {1.0, 1.0, 3.0, 3.0};

    CHECK(classifier::sentence_feature_avg({"oov1", "oov2"}, model) ==
          std::vector<double>{0.0, 0.0});
    CHECK(classifier::sentence_feature_avg({"x"}, model) ==
          std::vector<double>{1.0, 1.0});
    CHECK(classifier::sentence_feature_avg({"x", "y"}, model) ==
          std::vector<double>{2.0, 2.0});
    CHECK(classifier::sentence_feature_avg({}, model) ==
          std::vector<double>{0.0, 0.0});
    // OOV dilutes the mean: (v_x + 0) / 2
    CHECK(classifier::sentence_feature_avg({"x", "oov"}, model) ==
          std::vector<double>{0.5, 0.5});
}

TEST_CASE("build_architecture shapes") {
    auto rows = synth::make_labeled(3, 40);
    auto model = model_over(rows, 300, 5);
    Rng rng(1);

    SUBCASE("avg: dense 20x300, softmax layer 3x20") {
        auto net = classifier::build_architecture(Arch::Avg, model, 8, false, rng);
        auto layers = net.layers();
        REQUIRE(layers.size() == 4);
        CHECK(layers[0]->spec().kind == nn::LayerKind::EmbeddingLookup);
        CHECK(layers[1]->spec().kind == nn::LayerKind::MeanReduce);
        auto* hidden = layers[2]->params()[0];
        CHECK(hidden->shape == std::vector<int>{20, 300});
        auto* out = layers[3]->params()[0];
        CHECK(out->shape == std::vector<int>{3, 20});
    }
    SUBCASE("lstm: 100 hidden units, softmax layer 3x100") {
        auto net = classifier::build_architecture(Arch::Lstm, model, 8, false, rng);
        auto layers = net.layers();
        REQUIRE(layers.size() == 4);
        auto* wx = layers[1]->params()[0];
        CHECK(wx->shape == std::vector<int>{400, 300});
        auto* wh = layers[1]->params()[1];
        CHECK(wh->shape == std::vector<int>{400, 100});
        CHECK(layers[2]->spec().kind == nn::LayerKind::Dropout);
        CHECK(layers[2]->spec().rate == 0.5);
        auto* out = layers[3]->params()[0];
        CHECK(out->shape == std::vector<int>{3, 100});
    }
    SUBCASE("cnn on L=12: pooled lengths 6 then 3") {
        auto net = classifier::build_architecture(Arch::Cnn, model, 12, false, rng);
        auto layers = net.layers();
        REQUIRE(layers.size() == 7);
        auto* conv1 = layers[1]->params()[0];
        CHECK(conv1->shape == std::vector<int>{128, 3, 300});
        auto* dense = layers[5]->params()[0];
        CHECK(dense->shape == std::vector<int>{128, 3 * 128});
        auto* out = layers[6]->params()[0];
        CHECK(out->shape == std::vector<int>{3, 128});
        // forward actually produces those intermediate lengths
        nn::Tensor ids({12});
        auto logits = net.forward(ids, false, nullptr);
        CHECK(logits.size() == 3);
    }
    SUBCASE("pad row of the lookup table is zero") {
        auto net = classifier::build_architecture(Arch::Avg, model, 8, true, rng);
        auto* table = net.layers()[0]->params().at(0);
        int v = model.vocab.size();
        for (int j = 0; j < 300; ++j) CHECK((*table)(v, j) == 0.0);
    }
}

TEST_CASE("split_train_test") {
    auto rows = synth::make_labeled(11, 10, 0.0, 0.0);  // 10 ACTION rows
    auto data = to_labeled(rows);

    SUBCASE("10 records split 8/2") {
        auto [train, test] = classifier::split_train_test(data, 0.8, 1);
        CHECK(train.size() == 8);
        CHECK(test.size() == 2);
    }
    SUBCASE("same seed gives the same split") {
        auto [a_train, a_test] = classifier::split_train_test(data, 0.8, 9);
        auto [b_train, b_test] = classifier::split_train_test(data, 0.8, 9);
        REQUIRE(a_train.size() == b_train.size());
        for (std::size_t i = 0; i < a_train.size(); ++i) {
            CHECK(a_train[i].tokens == b_train[i].tokens);
        }
    }
    SUBCASE("stratified proportions within one sentence") {
        auto mixed = to_labeled(synth::make_labeled(13, 200));
        auto [train, test] = classifier::split_train_test(mixed, 0.8, 3);
        CHECK(train.size() + test.size() == mixed.size());
        std::array<int, 3> total{}, in_train{};
        for (const auto& item : mixed) ++total[std::size_t(int(item.label))];
        for (const auto& item : train) ++in_train[std::size_t(int(item.label))];
        for (int c = 0; c < 3; ++c) {
            double expected = 0.8 * total[std::size_t(c)];
            CHECK(std::fabs(in_train[std::size_t(c)] - expected) <= 1.0);
        }
    }
    SUBCASE("class with one member cannot be split") {
        std::vector<LabeledSentence> tiny = {
            {{"circ"}, Label::Action}, {{"circ"}, Label::Action},
            {{"stuck"}, Label::Event}};
        CHECK_THROWS_AS(classifier::split_train_test(tiny, 0.8, 1),
                        std::runtime_error);
    }
}

TEST_CASE("train, predict, evaluate") {
    auto rows = synth::make_labeled(17, 200);
    auto data = to_labeled(rows);
    auto model = model_over(rows, 16, 23);

    ClassifierConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.epochs = 50;
    cfg.seed = 4;

    SUBCASE("separable data reaches 99% training accuracy with avg") {
        auto trained = classifier::train_classifier(data, Arch::Avg, cfg, model);
        CHECK(self_accuracy(trained, data) >= 0.99);
    }
    SUBCASE("lr = 0 leaves predictions at initialization") {
        ClassifierConfig frozen = cfg;
        frozen.learning_rate = 0.0;
        frozen.epochs = 3;
        auto trained = classifier::train_classifier(data, Arch::Avg, frozen, model);
        // rebuild the same initialization by replaying the init stream
        std::size_t max_len = 1;
        for (const auto& item : data) max_len = std::max(max_len, item.tokens.size());
        Rng init(derive_seed(frozen.seed, "classifier-init"));
        auto reference = classifier::build_architecture(
            Arch::Avg, model, int(max_len), false, init);
        for (const auto& item : data) {
            auto got = classifier::predict(trained, item.tokens).second;
            std::vector<int> ids;
            for (const auto& t : item.tokens) {
                auto id = model.vocab.lookup(t);
                ids.push_back(id ? *id : model.vocab.size());
            }
            std::vector<double> asdoubles(ids.begin(), ids.end());
            auto want = reference.predict_proba(nn::Tensor::vector(asdoubles));
            CHECK(got == want);
        }
    }
    SUBCASE("training twice with one seed is bit-identical") {
        ClassifierConfig quick = cfg;
        quick.epochs = 5;
        auto a = classifier::train_classifier(data, Arch::Avg, quick, model);
        auto b = classifier::train_classifier(data, Arch::Avg, quick, model);
        auto pa = a.net.all_params(), pb = b.net.all_params();
        REQUIRE(pa.size() == pb.size());
        for (std::size_t i = 0; i < pa.size(); ++i) {
            CHECK(pa[i]->data == pb[i]->data);
        }
    }
    SUBCASE("empty sentence predicts without crashing, probabilities sum to 1") {
        ClassifierConfig quick = cfg;
        quick.epochs = 2;
        auto trained = classifier::train_classifier(data, Arch::Lstm, quick, model);
        auto [label, probs] = classifier::predict(trained, {});
        double sum = probs[0] + probs[1] + probs[2];
        CHECK(std::fabs(sum - 1.0) <= 1e-9);
        auto [l2, p2] = classifier::predict(trained, {"totally", "oov", "tokens"});
        CHECK(std::fabs(p2[0] + p2[1] + p2[2] - 1.0) <= 1e-9);
    }
    SUBCASE("probability vectors sum to one across architectures") {
        ClassifierConfig quick = cfg;
        quick.epochs = 1;
        for (Arch arch : {Arch::Avg, Arch::Cnn, Arch::Lstm}) {
            auto trained = classifier::train_classifier(data, arch, quick, model);
            for (int i = 0; i < 10; ++i) {
                auto probs = classifier::predict(trained, data[std::size_t(i)].tokens).second;
                CHECK(std::fabs(probs[0] + probs[1] + probs[2] - 1.0) <= 1e-9);
            }
        }
    }
}

TEST_CASE("evaluate mechanics") {
    auto rigged = testutil::rigged_classifier();

    SUBCASE("known misclassification pattern") {
        std::vector<LabeledSentence> test = {
            {{"e"}, Label::Event},
            {{"s"}, Label::Symptom},
            {{"a"}, Label::Action},
            {{"a"}, Label::Action},
        };
        auto report = classifier::evaluate(rigged, test);
        CHECK(report.accuracy == doctest::Approx(0.75));
        CHECK(report.confusion.counts[1] ==
              std::array<std::int64_t, 3>{0, 0, 1});
        CHECK(report.confusion.counts[0][0] == 1);
        CHECK(report.confusion.counts[2][2] == 2);
        CHECK(report.confusion.total() == 4);
        // row sums equal gold counts
        CHECK(report.confusion.row_sum(0) == 1);
        CHECK(report.confusion.row_sum(1) == 1);
        CHECK(report.confusion.row_sum(2) == 2);
    }
    SUBCASE("all-correct gives the identity pattern") {
        std::vector<LabeledSentence> test = {
            {{"e"}, Label::Event}, {{"a"}, Label::Action}};
        auto report = classifier::evaluate(rigged, test);
        CHECK(report.accuracy == 1.0);
        CHECK(report.confusion.counts[0][0] == 1);
        CHECK(report.confusion.counts[2][2] == 1);
        CHECK(report.confusion.trace() == 2);
    }
}

TEST_CASE("kfold_cv") {
    auto rows = synth::make_labeled(29, 200);
    auto data = to_labeled(rows);
    auto model = model_over(rows, 64, 31);
    ClassifierConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.epochs = 30;
    cfg.seed = 77;

    SUBCASE("folds partition the data and accuracy is high on separable data") {
        auto report = classifier::kfold_cv(data, 5, Arch::Avg, cfg, model);
        REQUIRE(report.fold_accuracies.size() == 5);
        CHECK(report.confusion.total() == std::int64_t(data.size()));
        std::array<std::int64_t, 3> gold{};
        for (const auto& item : data) ++gold[std::size_t(int(item.label))];
        for (int c = 0; c < 3; ++c) {
            CHECK(report.confusion.row_sum(c) == gold[std::size_t(c)]);
        }
        CHECK(report.accuracy >= 0.95);
        // pooled accuracy and the fold mean agree up to ragged fold sizes
        double mean = 0.0;
        for (double a : report.fold_accuracies) mean += a;
        mean /= 5.0;
        CHECK(std::fabs(mean - report.accuracy) <= 0.02);
    }
    SUBCASE("same seed gives identical folds and reports") {
        ClassifierConfig quick = cfg;
        quick.epochs = 2;
        auto a = classifier::kfold_cv(data, 5, Arch::Avg, quick, model);
        auto b = classifier::kfold_cv(data, 5, Arch::Avg, quick, model);
        CHECK(a.fold_accuracies == b.fold_accuracies);
        CHECK(a.confusion.counts == b.confusion.counts);
    }
    SUBCASE("class smaller than k is rejected") {
        std::vector<LabeledSentence> tiny;
        for (int i = 0; i < 3; ++i) tiny.push_back({{"stuck"}, Label::Event});
        for (int i = 0; i < 10; ++i) tiny.push_back({{"circ"}, Label::Action});
        CHECK_THROWS_AS(classifier::kfold_cv(tiny, 5, Arch::Avg, cfg, model),
                        std::runtime_error);
    }
}

TEST_CASE("classifier checkpoint round-trip") {
    auto rows = synth::make_labeled(37, 120);
    auto data = to_labeled(rows);
    auto model = model_over(rows, 12, 41);
    ClassifierConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 10;

    auto dir = std::filesystem::temp_directory_path() / "rm_cls_ckpt";
    std::filesystem::create_directories(dir);
    embedding::save_embeddings(model, dir / "embeddings.txt");

    for (Arch arch : {Arch::Avg, Arch::Cnn, Arch::Lstm}) {
        CAPTURE(classifier::to_string(arch));
        auto trained = classifier::train_classifier(data, arch, cfg, model);
        auto path = dir / (classifier::to_string(arch) + ".rmnet");
        classifier::save_classifier(trained, path, "embeddings.txt");
        auto loaded = classifier::load_classifier(path);
        CHECK(loaded.arch == arch);
        CHECK(loaded.pad_length == trained.pad_length);
        CHECK(loaded.pad_id == trained.pad_id);
        for (const auto& item : data) {
            auto a = classifier::predict(trained, item.tokens);
            auto b = classifier::predict(loaded, item.tokens);
            CHECK(a.first == b.first);
            CHECK(a.second == b.second);
        }
    }

    SUBCASE("missing embedding reference fails the load") {
        auto trained = classifier::train_classifier(data, Arch::Avg, cfg, model);
        auto path = dir / "dangling.rmnet";
        classifier::save_classifier(trained, path, "nonexistent.txt");
        CHECK_THROWS_AS(classifier::load_classifier(path), std::runtime_error);
    }
}

TEST_CASE("eval report json") {
    classifier::EvalReport report;
    report.accuracy = 0.75;
    report.fold_accuracies = {0.7, 0.8};
    report.confusion.counts[0][0] = 3;
    auto text = classifier::eval_report_json(report);
    CHECK(text.find("\"accuracy\"") != std::string::npos);
    CHECK(text.find("0.75") != std::string::npos);
    CHECK(text.find("\"confusion\"") != std::string::npos);
}
