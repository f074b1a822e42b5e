#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "reportminer/rng.hpp"

namespace reportminer::nn {

// Row-major dense tensor of doubles, rank 1 or 2 in practice.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s);

    static Tensor vector(std::vector<double> values);

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[std::size_t(i)]; }

    double& operator()(int i) { return data[std::size_t(i)]; }
    double operator()(int i) const { return data[std::size_t(i)]; }
    double& operator()(int i, int j) {
        return data[std::size_t(i) * shape[1] + j];
    }
    double operator()(int i, int j) const {
        return data[std::size_t(i) * shape[1] + j];
    }

    void fill(double v);
};

enum class Activation { Linear, Tanh, Relu };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

// ---- stateless kernels (the op surface; layers call into these) ----

// activation(W x + b); W is out x in
std::vector<double> dense_forward(std::span<const double> x, const Tensor& W,
                                  std::span<const double> bias,
                                  Activation act);

// Stable exp-normalize; positive entries summing to 1; shift-invariant
// bitwise after max subtraction.
std::vector<double> softmax(std::span<const double> z);

// -log pred[gold], with pred clamped at 1e-12.
double cross_entropy(std::span<const double> pred, int gold);

// Same-length 1d convolution with zero padding; x is L x C, filters is
// F x len x C, output L x F.
Tensor conv1d_forward(const Tensor& x, const Tensor& filters,
                      std::span<const double> bias, Activation act);

// Non-overlapping windows of `pool`, ragged final window; x is L x F,
// output ceil(L/pool) x F.
Tensor maxpool1d(const Tensor& x, int pool);

struct LstmParams {
    // gate rows stacked [input, forget, cell, output], each H rows
    Tensor Wx;  // 4H x D
    Tensor Wh;  // 4H x H
    Tensor b;   // 4H
    int hidden = 0;
    int input = 0;
};

struct LstmStep {
    std::vector<double> h, c;
    // cached gate values for backprop
    std::vector<double> i, f, g, o, tanh_c;
};

LstmStep lstm_step(std::span<const double> x_t, std::span<const double> h_prev,
                   std::span<const double> c_prev, const LstmParams& params);

enum class DropoutMode { Train, Eval };

// Inverted dropout: train mode zeroes entries with probability `rate` and
// scales survivors by 1/(1-rate); eval mode is the identity.
std::vector<double> dropout(std::span<const double> x, double rate,
                            DropoutMode mode, Rng* rng);

// p <- p - lr * g, elementwise.
void sgd_update(Tensor& params, const Tensor& grads, double lr);

// ---- layer graph ----

enum class LayerKind {
    EmbeddingLookup,
    MeanReduce,
    Dense,
    Conv1d,
    MaxPool1d,
    Lstm,
    Dropout,
};

struct LayerSpec {
    LayerKind kind = LayerKind::Dense;
    int units = 0;       // dense outputs / lstm hidden size
    int input_dim = 0;   // dense flattened input / conv channels / lstm input
    int filters = 0;
    int filter_len = 3;
    int pool = 2;
    double rate = 0.0;
    Activation act = Activation::Linear;
    int rows = 0;        // embedding table rows (vocab + pad)
    bool trainable = true;
};

class Layer {
  public:
    virtual ~Layer() = default;
    // forward caches whatever backward needs; backward must follow a forward
    // on the same input
    virtual Tensor forward(const Tensor& x, bool training, Rng* rng) = 0;
    virtual Tensor backward(const Tensor& dy) = 0;
    // cache-free eval-mode pass; safe to call concurrently on a shared layer
    virtual Tensor infer(const Tensor& x) const = 0;
    virtual std::vector<Tensor*> params() { return {}; }
    virtual std::vector<Tensor*> grads() { return {}; }
    virtual LayerSpec spec() const = 0;
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec);

// Sequential network with a softmax + cross-entropy head. Forward/backward
// on distinct networks are independent; a single instance must not be
// mutated while another call reads it.
class Network {
  public:
    void add(std::unique_ptr<Layer> layer);

    Tensor forward(const Tensor& input, bool training, Rng* rng = nullptr);

    // softmax over the final logits; cache-free, usable concurrently on a
    // shared trained network
    std::vector<double> predict_proba(const Tensor& input) const;

    // forward + cross-entropy + full backprop; accumulates parameter
    // gradients and returns the loss
    double loss_and_backward(const Tensor& input, int gold, bool training,
                             Rng* rng = nullptr);

    void zero_grads();
    void sgd_step(double lr);

    std::vector<Layer*> layers() const;
    std::vector<Tensor*> all_params() const;
    std::vector<Tensor*> all_grads() const;

    void save(std::ostream& out) const;
    static Network load(std::istream& in);

  private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

// Embedding-table layer; ids arrive as a rank-1 tensor of integral doubles.
// Row `pad_row` stays zero and never receives gradient, even when the table
// is trainable.
std::unique_ptr<Layer> make_embedding_lookup(Tensor table, int pad_row,
                                             bool trainable);
std::unique_ptr<Layer> make_mean_reduce(int width);
std::unique_ptr<Layer> make_dense(int in, int out, Activation act, Rng& rng,
                                  double init_range = 0.08);
std::unique_ptr<Layer> make_conv1d(int channels, int filters, int filter_len,
                                   Activation act, Rng& rng,
                                   double init_range = 0.08);
std::unique_ptr<Layer> make_maxpool1d(int pool);
std::unique_ptr<Layer> make_lstm(int input, int hidden, Rng& rng);
std::unique_ptr<Layer> make_dropout(double rate);

}  // namespace reportminer::nn
