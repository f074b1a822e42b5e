#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "reportminer/corpus.hpp"
#include "reportminer/embedding.hpp"
#include "reportminer/neuralnet.hpp"

namespace reportminer::classifier {

enum class Label : int { Event = 0, Symptom = 1, Action = 2 };

inline constexpr int kNumLabels = 3;

Label label_from_string(const std::string& s);  // throws naming the offender
std::string to_string(Label label);

struct LabeledSentence {
    std::vector<std::string> tokens;  // cleaned, nonempty
    Label label = Label::Event;
};

struct LabeledData {
    std::vector<LabeledSentence> items;
    int skipped_empty = 0;  // records dropped because cleaning emptied them
};

enum class Arch { Avg, Cnn, Lstm };

Arch arch_from_string(const std::string& s);
std::string to_string(Arch arch);

struct ClassifierConfig {
    double learning_rate = 0.1;
    int epochs = 50;
    int batch = 32;  // loss-trace averaging granularity; updates are per example
    std::uint64_t seed = 0;
    bool fine_tune = false;  // embedding layer frozen by default

    bool operator==(const ClassifierConfig&) const = default;
};

struct TrainedClassifier {
    Arch arch = Arch::Avg;
    nn::Network net;
    int pad_length = 1;  // L, >= max training sentence length
    int pad_id = 0;      // synthetic token id, not a corpus token
    int dim = 0;
    // token -> id mapping carried over from the embedding vocabulary
    corpus::Vocabulary vocab;
};

struct ConfusionMatrix {
    // rows = gold, columns = predicted
    std::array<std::array<std::int64_t, kNumLabels>, kNumLabels> counts{};

    std::int64_t total() const;
    std::int64_t trace() const;
    std::int64_t row_sum(int gold) const;
};

struct EvalReport {
    double accuracy = 0.0;  // trace(confusion) / total
    std::vector<double> fold_accuracies;  // empty for single evaluations
    ConfusionMatrix confusion;
};

// TSV `label<TAB>sentence`; sentences cleaned with the same denoising rules
// as the corpus. Unknown labels abort before any training; records emptied
// by cleaning are skipped and counted.
LabeledData load_labeled(const std::filesystem::path& path);

// Right-pad with pad_id to length L, truncating longer sentences on the
// right. Out-of-vocabulary tokens map to pad_id (the zero vector).
std::vector<int> pad_sentence(const std::vector<std::string>& tokens, int L,
                              const corpus::Vocabulary& vocab, int pad_id);

// Mean of constituent center vectors; OOV tokens contribute zero vectors;
// empty sentence gives the zero vector.
std::vector<double> sentence_feature_avg(
    const std::vector<std::string>& tokens,
    const embedding::EmbeddingModel& model);

// avg:  embedding -> mean reduce -> dense(20, tanh) -> softmax layer
// cnn:  embedding -> [conv1d(128 filters, len 3, relu) -> maxpool(2)] x2
//       -> dense(128, relu) -> softmax layer
// lstm: embedding -> lstm(100) -> dropout(0.5) -> softmax layer
// The embedding layer is initialized from the pre-trained center vectors.
nn::Network build_architecture(Arch kind,
                               const embedding::EmbeddingModel& model, int L,
                               bool fine_tune, Rng& rng);

// Stratified by label; both sides nonempty per class. Throws if any class
// has fewer than 2 members.
std::pair<std::vector<LabeledSentence>, std::vector<LabeledSentence>>
split_train_test(const std::vector<LabeledSentence>& data, double fraction,
                 std::uint64_t seed);

TrainedClassifier train_classifier(const std::vector<LabeledSentence>& train,
                                   Arch kind, const ClassifierConfig& config,
                                   const embedding::EmbeddingModel& model);

// argmax label (lowest id on ties) plus the full probability vector
std::pair<Label, std::vector<double>> predict(
    const TrainedClassifier& classifier,
    const std::vector<std::string>& tokens);

EvalReport evaluate(const TrainedClassifier& classifier,
                    const std::vector<LabeledSentence>& test);

// Stratified k-fold cross-validation over the full data set. accuracy is
// the pooled trace/total; fold_accuracies holds the per-fold values.
EvalReport kfold_cv(const std::vector<LabeledSentence>& data, int k, Arch kind,
                    const ClassifierConfig& config,
                    const embedding::EmbeddingModel& model);

// RMNET1 container: architecture, pad length/id, the network tensors, and a
// reference to the embedding file that supplies the vocabulary on load.
void save_classifier(const TrainedClassifier& classifier,
                     const std::filesystem::path& path,
                     const std::string& embedding_ref);
TrainedClassifier load_classifier(const std::filesystem::path& path);

std::string eval_report_json(const EvalReport& report);

}  // namespace reportminer::classifier
