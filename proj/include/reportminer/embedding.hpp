#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "reportminer/corpus.hpp"
#include "reportminer/rng.hpp"

namespace reportminer::embedding {

struct EmbeddingConfig {
    int window = 3;             // m
    int dim = 300;              // d
    int negatives = 64;         // k
    int batch = 128;            // b, loss-trace averaging granularity
    double learning_rate = 1.0; // lr, constant (no decay)
    int epochs = 15;
    std::uint64_t seed = 0;
    // 1.0 = raw unigram noise distribution; 0.75 enables the smoothed
    // variant as a non-default option
    double noise_power = 1.0;

    void validate() const;

    bool operator==(const EmbeddingConfig&) const = default;
};

// Two parameter matrices per vocabulary word: center vectors (row i = v_i)
// and outer vectors (row i = u_i), both V x d row-major. Models loaded from
// the text vector format carry center vectors only (outer empty).
struct EmbeddingModel {
    corpus::Vocabulary vocab;
    EmbeddingConfig config;
    int dim = 0;
    std::vector<double> center;
    std::vector<double> outer;

    std::span<const double> center_vec(int id) const {
        return {center.data() + std::size_t(id) * dim, std::size_t(dim)};
    }
    std::span<double> center_vec(int id) {
        return {center.data() + std::size_t(id) * dim, std::size_t(dim)};
    }
    std::span<const double> outer_vec(int id) const {
        return {outer.data() + std::size_t(id) * dim, std::size_t(dim)};
    }
    std::span<double> outer_vec(int id) {
        return {outer.data() + std::size_t(id) * dim, std::size_t(dim)};
    }
};

struct LossTrace {
    // (pair step, mean loss over the preceding interval); steps strictly
    // increasing, one interval per `batch` pairs plus a ragged epoch tail
    std::vector<std::pair<std::int64_t, double>> intervals;
    std::vector<double> epoch_means;
    std::int64_t pairs_per_epoch = 0;
};

struct TrainingPair {
    int center = 0;
    int outer = 0;
};

// Entries uniform in [-1, 1], reproducible from config.seed.
EmbeddingModel init_model(const corpus::Vocabulary& vocab,
                          const EmbeddingConfig& config);

// One (center, outer) pair per in-vocabulary position: the outer word is
// sampled uniformly from the <= 2m in-vocabulary window neighbors within the
// same sentence. Positions with no eligible neighbor yield nothing. Window
// offsets are measured after out-of-vocabulary tokens are dropped.
std::vector<TrainingPair> generate_pairs(
    const std::vector<corpus::Sentence>& sentences,
    const corpus::Vocabulary& vocab, int window, Rng& rng);

// Numerically stable; exact identity sigmoid(x) + sigmoid(-x) = 1.
double sigmoid(double x);

// loss = -log sigma(u_o.v_c) - sum_i log sigma(-u_i.v_c), finite and >= 0.
double nce_loss(int center_id, int outer_id,
                const std::vector<int>& negative_ids,
                const EmbeddingModel& model);

struct NceGradients {
    std::vector<double> center;                 // d(loss)/d(v_c)
    std::vector<double> outer;                  // d(loss)/d(u_o)
    std::vector<std::vector<double>> negatives; // per draw; duplicate ids add
};

NceGradients nce_gradients(int center_id, int outer_id,
                           const std::vector<int>& negative_ids,
                           const EmbeddingModel& model);

// Noise distribution p_i proportional to count_i^power (power 1.0 = the raw
// unigram distribution).
std::vector<double> noise_distribution(const corpus::Vocabulary& vocab,
                                       double power);

// Pure SGD: gradients computed and applied per pair; negatives resampled per
// pair from the noise distribution; deterministic given config.seed.
std::pair<EmbeddingModel, LossTrace> train_embeddings(
    const std::vector<corpus::Sentence>& sentences,
    const corpus::Vocabulary& vocab, const EmbeddingConfig& config);

// Throws on zero vectors.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Ranked by similarity desc, ties token asc; query excluded; center vectors.
std::vector<std::pair<std::string, double>> nearest_neighbors(
    const EmbeddingModel& model, const std::string& token, int n);

// Text vector format: line 1 "V d", then V lines of token + d reals with 17
// significant digits. Round-trips vectors bit-exactly.
void save_embeddings(const EmbeddingModel& model,
                     const std::filesystem::path& path);
EmbeddingModel load_embeddings(const std::filesystem::path& path);

// Binary checkpoint (magic RMEMB1) holding both matrices, the vocabulary
// with counts, and the config.
void save_checkpoint(const EmbeddingModel& model,
                     const std::filesystem::path& path);
EmbeddingModel load_checkpoint(const std::filesystem::path& path);

void write_loss_trace_csv(const LossTrace& trace,
                          const std::filesystem::path& path);

}  // namespace reportminer::embedding
