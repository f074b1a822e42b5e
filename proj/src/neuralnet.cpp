#include "reportminer/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

namespace reportminer::nn {

namespace {

void check(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

double activate(Activation act, double z) {
    switch (act) {
        case Activation::Linear: return z;
        case Activation::Tanh: return std::tanh(z);
        case Activation::Relu: return z > 0.0 ? z : 0.0;
    }
    return z;
}

// derivative expressed through preactivation z and output y
double activate_grad(Activation act, double z, double y) {
    switch (act) {
        case Activation::Linear: return 1.0;
        case Activation::Tanh: return 1.0 - y * y;
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw std::runtime_error("truncated network container");
    return v;
}

void write_tensor(std::ostream& out, const Tensor& t) {
    write_u64(out, t.shape.size());
    for (int s : t.shape) write_u64(out, std::uint64_t(s));
    out.write(reinterpret_cast<const char*>(t.data.data()),
              std::streamsize(t.data.size() * sizeof(double)));
}

Tensor read_tensor(std::istream& in) {
    auto rank = read_u64(in);
    std::vector<int> shape(rank);
    for (auto& s : shape) s = static_cast<int>(read_u64(in));
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data.data()),
            std::streamsize(t.data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated network container");
    return t;
}

}  // namespace

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
    std::int64_t n = 1;
    for (int e : shape) {
        check(e >= 0, "negative tensor extent");
        n *= e;
    }
    data.assign(std::size_t(n), 0.0);
}

Tensor Tensor::vector(std::vector<double> values) {
    Tensor t;
    t.shape = {static_cast<int>(values.size())};
    t.data = std::move(values);
    return t;
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

Activation activation_from_string(const std::string& s) {
    if (s == "linear") return Activation::Linear;
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::Relu;
    throw std::invalid_argument("unknown activation: " + s);
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Linear: return "linear";
        case Activation::Tanh: return "tanh";
        case Activation::Relu: return "relu";
    }
    return "linear";
}

std::vector<double> dense_forward(std::span<const double> x, const Tensor& W,
                                  std::span<const double> bias,
                                  Activation act) {
    check(W.rank() == 2, "dense: weight must be a matrix");
    const int out = W.dim(0), in = W.dim(1);
    check(int(x.size()) == in, "dense: input size mismatch");
    check(int(bias.size()) == out, "dense: bias size mismatch");
    std::vector<double> y(std::size_t(out), 0.0);
    for (int i = 0; i < out; ++i) {
        double z = bias[std::size_t(i)];
        const double* row = W.data.data() + std::size_t(i) * in;
        for (int j = 0; j < in; ++j) z += row[j] * x[std::size_t(j)];
        y[std::size_t(i)] = activate(act, z);
    }
    return y;
}

std::vector<double> softmax(std::span<const double> z) {
    check(!z.empty(), "softmax: empty input");
    double m = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - m);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

double cross_entropy(std::span<const double> pred, int gold) {
    if (gold < 0 || std::size_t(gold) >= pred.size()) {
        throw std::out_of_range("cross_entropy: gold index out of range");
    }
    return -std::log(std::max(pred[std::size_t(gold)], 1e-12));
}

Tensor conv1d_forward(const Tensor& x, const Tensor& filters,
                      std::span<const double> bias, Activation act) {
    check(x.rank() == 2, "conv1d: input must be L x C");
    check(filters.rank() == 3, "conv1d: filters must be F x len x C");
    const int L = x.dim(0), C = x.dim(1);
    const int F = filters.dim(0), len = filters.dim(1);
    check(filters.dim(2) == C, "conv1d: channel mismatch");
    check(int(bias.size()) == F, "conv1d: bias size mismatch");
    const int off = (len - 1) / 2;
    Tensor y({L, F});
    for (int t = 0; t < L; ++t) {
        for (int f = 0; f < F; ++f) {
            double z = bias[std::size_t(f)];
            for (int tap = 0; tap < len; ++tap) {
                int u = t + tap - off;
                if (u < 0 || u >= L) continue;  // zero padding
                for (int c = 0; c < C; ++c) {
                    z += x(u, c) * filters.data[(std::size_t(f) * len + tap) * C + c];
                }
            }
            y(t, f) = activate(act, z);
        }
    }
    return y;
}

Tensor maxpool1d(const Tensor& x, int pool) {
    check(x.rank() == 2, "maxpool1d: input must be L x F");
    check(pool >= 1, "maxpool1d: pool must be >= 1");
    const int L = x.dim(0), F = x.dim(1);
    check(L >= 1, "maxpool1d: empty input");
    const int n = (L + pool - 1) / pool;
    Tensor y({n, F});
    for (int w = 0; w < n; ++w) {
        int lo = w * pool;
        int hi = std::min(L, lo + pool);
        for (int f = 0; f < F; ++f) {
            double best = x(lo, f);
            for (int t = lo + 1; t < hi; ++t) best = std::max(best, x(t, f));
            y(w, f) = best;
        }
    }
    return y;
}

LstmStep lstm_step(std::span<const double> x_t, std::span<const double> h_prev,
                   std::span<const double> c_prev, const LstmParams& params) {
    const int H = params.hidden, D = params.input;
    check(int(x_t.size()) == D, "lstm_step: input size mismatch");
    check(int(h_prev.size()) == H, "lstm_step: h size mismatch");
    check(int(c_prev.size()) == H, "lstm_step: c size mismatch");
    check(params.Wx.rank() == 2 && params.Wx.dim(0) == 4 * H &&
              params.Wx.dim(1) == D,
          "lstm_step: Wx shape mismatch");
    check(params.Wh.rank() == 2 && params.Wh.dim(0) == 4 * H &&
              params.Wh.dim(1) == H,
          "lstm_step: Wh shape mismatch");
    check(params.b.rank() == 1 && params.b.dim(0) == 4 * H,
          "lstm_step: bias shape mismatch");

    std::vector<double> z(std::size_t(4) * H);
    for (int r = 0; r < 4 * H; ++r) {
        double s = params.b(r);
        const double* wx = params.Wx.data.data() + std::size_t(r) * D;
        for (int j = 0; j < D; ++j) s += wx[j] * x_t[std::size_t(j)];
        const double* wh = params.Wh.data.data() + std::size_t(r) * H;
        for (int j = 0; j < H; ++j) s += wh[j] * h_prev[std::size_t(j)];
        z[std::size_t(r)] = s;
    }

    auto sig = [](double v) {
        return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                        : std::exp(v) / (1.0 + std::exp(v));
    };

    LstmStep step;
    step.i.resize(std::size_t(H));
    step.f.resize(std::size_t(H));
    step.g.resize(std::size_t(H));
    step.o.resize(std::size_t(H));
    step.c.resize(std::size_t(H));
    step.h.resize(std::size_t(H));
    step.tanh_c.resize(std::size_t(H));
    for (int j = 0; j < H; ++j) {
        step.i[std::size_t(j)] = sig(z[std::size_t(j)]);
        step.f[std::size_t(j)] = sig(z[std::size_t(H + j)]);
        step.g[std::size_t(j)] = std::tanh(z[std::size_t(2 * H + j)]);
        step.o[std::size_t(j)] = sig(z[std::size_t(3 * H + j)]);
        step.c[std::size_t(j)] = step.f[std::size_t(j)] * c_prev[std::size_t(j)] +
                                 step.i[std::size_t(j)] * step.g[std::size_t(j)];
        step.tanh_c[std::size_t(j)] = std::tanh(step.c[std::size_t(j)]);
        step.h[std::size_t(j)] = step.o[std::size_t(j)] * step.tanh_c[std::size_t(j)];
    }
    return step;
}

std::vector<double> dropout(std::span<const double> x, double rate,
                            DropoutMode mode, Rng* rng) {
    check(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0, 1)");
    std::vector<double> y(x.begin(), x.end());
    if (mode == DropoutMode::Eval || rate == 0.0) return y;
    check(rng != nullptr, "dropout: train mode needs an rng");
    const double scale = 1.0 / (1.0 - rate);
    for (auto& v : y) {
        v = rng->uniform() < rate ? 0.0 : v * scale;
    }
    return y;
}

void sgd_update(Tensor& params, const Tensor& grads, double lr) {
    check(params.shape == grads.shape, "sgd_update: shape mismatch");
    for (std::size_t i = 0; i < params.data.size(); ++i) {
        params.data[i] -= lr * grads.data[i];
    }
}

// ---- layers ----

namespace {

class DenseLayer final : public Layer {
  public:
    DenseLayer(int in, int out, Activation act)
        : W_({out, in}), b_({out}), gW_({out, in}), gb_({out}), in_(in),
          out_(out), act_(act) {}

    Tensor forward(const Tensor& x, bool, Rng*) override {
        check(x.size() == in_, "dense: input size mismatch");
        in_shape_ = x.shape;
        x_ = x.data;
        z_.resize(std::size_t(out_));
        Tensor y({out_});
        for (int i = 0; i < out_; ++i) {
            double z = b_(i);
            const double* row = W_.data.data() + std::size_t(i) * in_;
            for (int j = 0; j < in_; ++j) z += row[j] * x_[std::size_t(j)];
            z_[std::size_t(i)] = z;
            y(i) = activate(act_, z);
        }
        y_ = y.data;
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        check(dy.size() == out_, "dense: grad size mismatch");
        Tensor dx(in_shape_);
        for (int i = 0; i < out_; ++i) {
            double dz = dy(i) * activate_grad(act_, z_[std::size_t(i)],
                                              y_[std::size_t(i)]);
            gb_(i) += dz;
            double* grow = gW_.data.data() + std::size_t(i) * in_;
            const double* wrow = W_.data.data() + std::size_t(i) * in_;
            for (int j = 0; j < in_; ++j) {
                grow[j] += dz * x_[std::size_t(j)];
                dx.data[std::size_t(j)] += dz * wrow[j];
            }
        }
        return dx;
    }

    Tensor infer(const Tensor& x) const override {
        check(x.size() == in_, "dense: input size mismatch");
        return Tensor::vector(dense_forward(
            std::span<const double>(x.data), W_, std::span<const double>(b_.data),
            act_));
    }

    std::vector<Tensor*> params() override { return {&W_, &b_}; }
    std::vector<Tensor*> grads() override { return {&gW_, &gb_}; }

    LayerSpec spec() const override {
        LayerSpec s;
        s.kind = LayerKind::Dense;
        s.units = out_;
        s.input_dim = in_;
        s.act = act_;
        return s;
    }

    Tensor W_, b_, gW_, gb_;

  private:
    int in_, out_;
    Activation act_;
    std::vector<int> in_shape_;
    std::vector<double> x_, z_, y_;
};

class Conv1dLayer final : public Layer {
  public:
    Conv1dLayer(int channels, int filters, int len, Activation act)
        : W_({filters, len, channels}), b_({filters}),
          gW_({filters, len, channels}), gb_({filters}), C_(channels),
          F_(filters), len_(len), act_(act) {}

    Tensor forward(const Tensor& x, bool, Rng*) override {
        check(x.rank() == 2 && x.dim(1) == C_, "conv1d: input shape mismatch");
        x_ = x;
        const int L = x.dim(0);
        const int off = (len_ - 1) / 2;
        z_ = Tensor({L, F_});
        Tensor y({L, F_});
        for (int t = 0; t < L; ++t) {
            for (int f = 0; f < F_; ++f) {
                double z = b_(f);
                for (int tap = 0; tap < len_; ++tap) {
                    int u = t + tap - off;
                    if (u < 0 || u >= L) continue;
                    const double* w =
                        W_.data.data() + (std::size_t(f) * len_ + tap) * C_;
                    for (int c = 0; c < C_; ++c) z += x(u, c) * w[c];
                }
                z_(t, f) = z;
                y(t, f) = activate(act_, z);
            }
        }
        y_ = y;
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        const int L = x_.dim(0);
        check(dy.rank() == 2 && dy.dim(0) == L && dy.dim(1) == F_,
              "conv1d: grad shape mismatch");
        const int off = (len_ - 1) / 2;
        Tensor dx({L, C_});
        for (int t = 0; t < L; ++t) {
            for (int f = 0; f < F_; ++f) {
                double dz = dy(t, f) * activate_grad(act_, z_(t, f), y_(t, f));
                if (dz == 0.0) continue;
                gb_(f) += dz;
                for (int tap = 0; tap < len_; ++tap) {
                    int u = t + tap - off;
                    if (u < 0 || u >= L) continue;
                    double* gw =
                        gW_.data.data() + (std::size_t(f) * len_ + tap) * C_;
                    const double* w =
                        W_.data.data() + (std::size_t(f) * len_ + tap) * C_;
                    for (int c = 0; c < C_; ++c) {
                        gw[c] += dz * x_(u, c);
                        dx(u, c) += dz * w[c];
                    }
                }
            }
        }
        return dx;
    }

    Tensor infer(const Tensor& x) const override {
        return conv1d_forward(x, W_, std::span<const double>(b_.data), act_);
    }

    std::vector<Tensor*> params() override { return {&W_, &b_}; }
    std::vector<Tensor*> grads() override { return {&gW_, &gb_}; }

    LayerSpec spec() const override {
        LayerSpec s;
        s.kind = LayerKind::Conv1d;
        s.filters = F_;
        s.filter_len = len_;
        s.input_dim = C_;
        s.act = act_;
        return s;
    }

    Tensor W_, b_, gW_, gb_;

  private:
    int C_, F_, len_;
    Activation act_;
    Tensor x_, z_, y_;
};

class MaxPool1dLayer final : public Layer {
  public:
    explicit MaxPool1dLayer(int pool) : pool_(pool) {}

    Tensor forward(const Tensor& x, bool, Rng*) override {
        check(x.rank() == 2, "maxpool1d: input must be L x F");
        L_ = x.dim(0);
        F_ = x.dim(1);
        const int n = (L_ + pool_ - 1) / pool_;
        Tensor y({n, F_});
        argmax_.assign(std::size_t(n) * F_, 0);
        for (int w = 0; w < n; ++w) {
            int lo = w * pool_;
            int hi = std::min(L_, lo + pool_);
            for (int f = 0; f < F_; ++f) {
                int best_t = lo;
                double best = x(lo, f);
                for (int t = lo + 1; t < hi; ++t) {
                    // ties keep the first maximal index
                    if (x(t, f) > best) {
                        best = x(t, f);
                        best_t = t;
                    }
                }
                y(w, f) = best;
                argmax_[std::size_t(w) * F_ + f] = best_t;
            }
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        const int n = (L_ + pool_ - 1) / pool_;
        check(dy.rank() == 2 && dy.dim(0) == n && dy.dim(1) == F_,
              "maxpool1d: grad shape mismatch");
        Tensor dx({L_, F_});
        for (int w = 0; w < n; ++w) {
            for (int f = 0; f < F_; ++f) {
                dx(argmax_[std::size_t(w) * F_ + f], f) += dy(w, f);
            }
        }
        return dx;
    }

    Tensor infer(const Tensor& x) const override { return maxpool1d(x, pool_); }

    LayerSpec spec() const override {
        LayerSpec s;
        s.kind = LayerKind::MaxPool1d;
        s.pool = pool_;
        return s;
    }

  private:
    int pool_;
    int L_ = 0, F_ = 0;
    std::vector<int> argmax_;
};

class LstmLayer final : public Layer {
  public:
    LstmLayer(int input, int hidden) : D_(input), H_(hidden) {
        params_.Wx = Tensor({4 * hidden, input});
        params_.Wh = Tensor({4 * hidden, hidden});
        params_.b = Tensor({4 * hidden});
        params_.hidden = hidden;
        params_.input = input;
        gWx_ = Tensor({4 * hidden, input});
        gWh_ = Tensor({4 * hidden, hidden});
        gb_ = Tensor({4 * hidden});
    }

    Tensor forward(const Tensor& x, bool, Rng*) override {
        check(x.rank() == 2 && x.dim(1) == D_, "lstm: input shape mismatch");
        check(x.dim(0) >= 1, "lstm: empty sequence");
        x_ = x;
        const int L = x.dim(0);
        steps_.clear();
        steps_.reserve(std::size_t(L));
        std::vector<double> h(std::size_t(H_), 0.0), c(std::size_t(H_), 0.0);
        for (int t = 0; t < L; ++t) {
            std::span<const double> xt{x.data.data() + std::size_t(t) * D_,
                                       std::size_t(D_)};
            auto step = lstm_step(xt, h, c, params_);
            h = step.h;
            c = step.c;
            steps_.push_back(std::move(step));
        }
        return Tensor::vector(h);
    }

    Tensor backward(const Tensor& dy) override {
        check(dy.size() == H_, "lstm: grad size mismatch");
        const int L = x_.dim(0);
        Tensor dx({L, D_});
        std::vector<double> dh(dy.data);
        std::vector<double> dc(std::size_t(H_), 0.0);
        std::vector<double> dz(std::size_t(4) * H_);
        for (int t = L - 1; t >= 0; --t) {
            const auto& s = steps_[std::size_t(t)];
            const double* c_prev =
                t > 0 ? steps_[std::size_t(t - 1)].c.data() : nullptr;
            const double* h_prev =
                t > 0 ? steps_[std::size_t(t - 1)].h.data() : nullptr;
            for (int j = 0; j < H_; ++j) {
                double tc = s.tanh_c[std::size_t(j)];
                double dcj = dc[std::size_t(j)] +
                             dh[std::size_t(j)] * s.o[std::size_t(j)] * (1.0 - tc * tc);
                double cp = c_prev ? c_prev[j] : 0.0;
                double di = dcj * s.g[std::size_t(j)];
                double df = dcj * cp;
                double dg = dcj * s.i[std::size_t(j)];
                double do_ = dh[std::size_t(j)] * tc;
                dz[std::size_t(j)] =
                    di * s.i[std::size_t(j)] * (1.0 - s.i[std::size_t(j)]);
                dz[std::size_t(H_ + j)] =
                    df * s.f[std::size_t(j)] * (1.0 - s.f[std::size_t(j)]);
                dz[std::size_t(2 * H_ + j)] =
                    dg * (1.0 - s.g[std::size_t(j)] * s.g[std::size_t(j)]);
                dz[std::size_t(3 * H_ + j)] =
                    do_ * s.o[std::size_t(j)] * (1.0 - s.o[std::size_t(j)]);
                dc[std::size_t(j)] = dcj * s.f[std::size_t(j)];
            }
            const double* xt = x_.data.data() + std::size_t(t) * D_;
            std::fill(dh.begin(), dh.end(), 0.0);
            for (int r = 0; r < 4 * H_; ++r) {
                double dzr = dz[std::size_t(r)];
                if (dzr == 0.0) continue;
                gb_(r) += dzr;
                double* gwx = gWx_.data.data() + std::size_t(r) * D_;
                const double* wx = params_.Wx.data.data() + std::size_t(r) * D_;
                for (int j = 0; j < D_; ++j) {
                    gwx[j] += dzr * xt[j];
                    dx.data[std::size_t(t) * D_ + j] += dzr * wx[j];
                }
                double* gwh = gWh_.data.data() + std::size_t(r) * H_;
                const double* wh = params_.Wh.data.data() + std::size_t(r) * H_;
                for (int j = 0; j < H_; ++j) {
                    if (h_prev) gwh[j] += dzr * h_prev[j];
                    dh[std::size_t(j)] += dzr * wh[j];
                }
            }
        }
        return dx;
    }

    Tensor infer(const Tensor& x) const override {
        check(x.rank() == 2 && x.dim(1) == D_, "lstm: input shape mismatch");
        check(x.dim(0) >= 1, "lstm: empty sequence");
        std::vector<double> h(std::size_t(H_), 0.0), c(std::size_t(H_), 0.0);
        for (int t = 0; t < x.dim(0); ++t) {
            std::span<const double> xt{x.data.data() + std::size_t(t) * D_,
                                       std::size_t(D_)};
            auto step = lstm_step(xt, h, c, params_);
            h = std::move(step.h);
            c = std::move(step.c);
        }
        return Tensor::vector(std::move(h));
    }

    std::vector<Tensor*> params() override {
        return {&params_.Wx, &params_.Wh, &params_.b};
    }
    std::vector<Tensor*> grads() override { return {&gWx_, &gWh_, &gb_}; }

    LayerSpec spec() const override {
        LayerSpec s;
        s.kind = LayerKind::Lstm;
        s.units = H_;
        s.input_dim = D_;
        return s;
    }

    LstmParams params_;

  private:
    int D_, H_;
    Tensor gWx_, gWh_, gb_;
    Tensor x_;
    std::vector<LstmStep> steps_;
};

class DropoutLayer final : public Layer {
  public:
    explicit DropoutLayer(double rate) : rate_(rate) {
        check(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0, 1)");
    }

    Tensor forward(const Tensor& x, bool training, Rng* rng) override {
        mask_.assign(x.data.size(), 1.0);
        Tensor y = x;
        if (training && rate_ > 0.0) {
            check(rng != nullptr, "dropout: train mode needs an rng");
            const double scale = 1.0 / (1.0 - rate_);
            for (std::size_t i = 0; i < y.data.size(); ++i) {
                mask_[i] = rng->uniform() < rate_ ? 0.0 : scale;
                y.data[i] *= mask_[i];
            }
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        check(dy.data.size() == mask_.size(), "dropout: grad size mismatch");
        Tensor dx = dy;
        for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= mask_[i];
        return dx;
    }

    Tensor infer(const Tensor& x) const override { return x; }

    LayerSpec spec() const override {
        LayerSpec s;
        s.kind = LayerKind::Dropout;
        s.rate = rate_;
        return s;
    }

  private:
    double rate_;
    std::vector<double> mask_;
};

class EmbeddingLookupLayer final : public Layer {
  public:
    EmbeddingLookupLayer(Tensor table, int pad_row, bool trainable)
        : table_(std::move(table)), pad_row_(pad_row), trainable_(trainable) {
        check(table_.rank() == 2, "embedding: table must be rows x dim");
        check(pad_row >= 0 && pad_row < table_.dim(0),
              "embedding: pad row out of range");
        if (trainable_) gtable_ = Tensor(table_.shape);
    }

    Tensor forward(const Tensor& x, bool, Rng*) override {
        check(x.rank() == 1, "embedding: ids must be rank-1");
        const int L = x.dim(0);
        const int d = table_.dim(1);
        ids_.resize(std::size_t(L));
        Tensor y({L, d});
        for (int t = 0; t < L; ++t) {
            int id = static_cast<int>(x(t));
            check(id >= 0 && id < table_.dim(0), "embedding: id out of range");
            ids_[std::size_t(t)] = id;
            std::memcpy(y.data.data() + std::size_t(t) * d,
                        table_.data.data() + std::size_t(id) * d,
                        std::size_t(d) * sizeof(double));
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        const int d = table_.dim(1);
        check(dy.rank() == 2 && dy.dim(0) == int(ids_.size()) && dy.dim(1) == d,
              "embedding: grad shape mismatch");
        if (trainable_) {
            for (std::size_t t = 0; t < ids_.size(); ++t) {
                int id = ids_[t];
                if (id == pad_row_) continue;  // pad row never learns
                double* g = gtable_.data.data() + std::size_t(id) * d;
                const double* dyt = dy.data.data() + t * d;
                for (int j = 0; j < d; ++j) g[j] += dyt[j];
            }
        }
        return Tensor{};  // ids carry no gradient
    }

    Tensor infer(const Tensor& x) const override {
        check(x.rank() == 1, "embedding: ids must be rank-1");
        const int L = x.dim(0);
        const int d = table_.dim(1);
        Tensor y({L, d});
        for (int t = 0; t < L; ++t) {
            int id = static_cast<int>(x(t));
            check(id >= 0 && id < table_.dim(0), "embedding: id out of range");
            std::memcpy(y.data.data() + std::size_t(t) * d,
                        table_.data.data() + std::size_t(id) * d,
                        std::size_t(d) * sizeof(double));
        }
        return y;
    }

    std::vector<Tensor*> params() override {
        if (trainable_) return {&table_};
        return {};
    }
    std::vector<Tensor*> grads() override {
        if (trainable_) return {&gtable_};
        return {};
    }

    LayerSpec spec() const override {
        LayerSpec s;
        s.kind = LayerKind::EmbeddingLookup;
        s.rows = table_.dim(0);
        s.input_dim = table_.dim(1);
        s.units = pad_row_;
        s.trainable = trainable_;
        return s;
    }

    Tensor table_;

  private:
    int pad_row_;
    bool trainable_;
    Tensor gtable_;
    std::vector<int> ids_;
};

class MeanReduceLayer final : public Layer {
  public:
    explicit MeanReduceLayer(int width) : width_(width) {}

    Tensor forward(const Tensor& x, bool, Rng*) override {
        check(x.rank() == 2 && x.dim(1) == width_,
              "mean_reduce: input shape mismatch");
        L_ = x.dim(0);
        Tensor y({width_});
        if (L_ == 0) return y;  // empty sentence reduces to the zero vector
        for (int t = 0; t < L_; ++t) {
            for (int j = 0; j < width_; ++j) y(j) += x(t, j);
        }
        for (int j = 0; j < width_; ++j) y(j) /= L_;
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        check(dy.size() == width_, "mean_reduce: grad size mismatch");
        Tensor dx({L_, width_});
        if (L_ == 0) return dx;
        for (int t = 0; t < L_; ++t) {
            for (int j = 0; j < width_; ++j) dx(t, j) = dy(j) / L_;
        }
        return dx;
    }

    Tensor infer(const Tensor& x) const override {
        check(x.rank() == 2 && x.dim(1) == width_,
              "mean_reduce: input shape mismatch");
        Tensor y({width_});
        const int L = x.dim(0);
        if (L == 0) return y;
        for (int t = 0; t < L; ++t) {
            for (int j = 0; j < width_; ++j) y(j) += x(t, j);
        }
        for (int j = 0; j < width_; ++j) y(j) /= L;
        return y;
    }

    LayerSpec spec() const override {
        LayerSpec s;
        s.kind = LayerKind::MeanReduce;
        s.input_dim = width_;
        return s;
    }

  private:
    int width_;
    int L_ = 0;
};

void init_uniform(Tensor& t, Rng& rng, double range) {
    for (auto& v : t.data) v = rng.uniform(-range, range);
}

}  // namespace

std::unique_ptr<Layer> make_layer(const LayerSpec& spec) {
    switch (spec.kind) {
        case LayerKind::EmbeddingLookup: {
            Tensor table({spec.rows, spec.input_dim});
            return std::make_unique<EmbeddingLookupLayer>(
                std::move(table), spec.units, spec.trainable);
        }
        case LayerKind::MeanReduce:
            return std::make_unique<MeanReduceLayer>(spec.input_dim);
        case LayerKind::Dense:
            return std::make_unique<DenseLayer>(spec.input_dim, spec.units,
                                                spec.act);
        case LayerKind::Conv1d:
            return std::make_unique<Conv1dLayer>(spec.input_dim, spec.filters,
                                                 spec.filter_len, spec.act);
        case LayerKind::MaxPool1d:
            return std::make_unique<MaxPool1dLayer>(spec.pool);
        case LayerKind::Lstm:
            return std::make_unique<LstmLayer>(spec.input_dim, spec.units);
        case LayerKind::Dropout:
            return std::make_unique<DropoutLayer>(spec.rate);
    }
    throw std::invalid_argument("unknown layer kind");
}

std::unique_ptr<Layer> make_embedding_lookup(Tensor table, int pad_row,
                                             bool trainable) {
    return std::make_unique<EmbeddingLookupLayer>(std::move(table), pad_row,
                                                  trainable);
}

std::unique_ptr<Layer> make_mean_reduce(int width) {
    return std::make_unique<MeanReduceLayer>(width);
}

std::unique_ptr<Layer> make_dense(int in, int out, Activation act, Rng& rng,
                                  double init_range) {
    auto layer = std::make_unique<DenseLayer>(in, out, act);
    init_uniform(layer->W_, rng, init_range);
    return layer;
}

std::unique_ptr<Layer> make_conv1d(int channels, int filters, int filter_len,
                                   Activation act, Rng& rng,
                                   double init_range) {
    auto layer = std::make_unique<Conv1dLayer>(channels, filters, filter_len, act);
    init_uniform(layer->W_, rng, init_range);
    return layer;
}

std::unique_ptr<Layer> make_maxpool1d(int pool) {
    return std::make_unique<MaxPool1dLayer>(pool);
}

std::unique_ptr<Layer> make_lstm(int input, int hidden, Rng& rng) {
    auto layer = std::make_unique<LstmLayer>(input, hidden);
    init_uniform(layer->params_.Wx, rng, 0.08);
    init_uniform(layer->params_.Wh, rng, 0.08);
    // forget-gate bias starts at 1 so early training does not erase state
    for (int j = 0; j < hidden; ++j) layer->params_.b(hidden + j) = 1.0;
    return layer;
}

std::unique_ptr<Layer> make_dropout(double rate) {
    return std::make_unique<DropoutLayer>(rate);
}

// ---- network ----

void Network::add(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
}

Tensor Network::forward(const Tensor& input, bool training, Rng* rng) {
    check(!layers_.empty(), "network: no layers");
    Tensor x = input;
    for (auto& layer : layers_) {
        x = layer->forward(x, training, rng);
    }
    return x;
}

std::vector<double> Network::predict_proba(const Tensor& input) const {
    check(!layers_.empty(), "network: no layers");
    Tensor x = input;
    for (const auto& layer : layers_) x = layer->infer(x);
    return softmax(std::span<const double>(x.data));
}

double Network::loss_and_backward(const Tensor& input, int gold, bool training,
                                  Rng* rng) {
    Tensor logits = forward(input, training, rng);
    auto p = softmax(std::span<const double>(logits.data));
    double loss = cross_entropy(p, gold);
    Tensor grad = Tensor::vector(std::move(p));
    grad.data[std::size_t(gold)] -= 1.0;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        grad = (*it)->backward(grad);
        // only an id-input layer may cut the chain, and only at the front
        if (grad.shape.empty() && std::next(it) != layers_.rend()) {
            throw std::logic_error("gradient chain broken mid-network");
        }
    }
    return loss;
}

void Network::zero_grads() {
    for (auto& layer : layers_) {
        for (Tensor* g : layer->grads()) g->fill(0.0);
    }
}

void Network::sgd_step(double lr) {
    for (auto& layer : layers_) {
        auto params = layer->params();
        auto grads = layer->grads();
        for (std::size_t i = 0; i < params.size(); ++i) {
            sgd_update(*params[i], *grads[i], lr);
        }
    }
}

std::vector<Layer*> Network::layers() const {
    std::vector<Layer*> out;
    out.reserve(layers_.size());
    for (const auto& l : layers_) out.push_back(l.get());
    return out;
}

std::vector<Tensor*> Network::all_params() const {
    std::vector<Tensor*> out;
    for (const auto& l : layers_) {
        for (Tensor* p : l->params()) out.push_back(p);
    }
    return out;
}

std::vector<Tensor*> Network::all_grads() const {
    std::vector<Tensor*> out;
    for (const auto& l : layers_) {
        for (Tensor* g : l->grads()) out.push_back(g);
    }
    return out;
}

void Network::save(std::ostream& out) const {
    write_u64(out, layers_.size());
    for (const auto& layer : layers_) {
        LayerSpec s = layer->spec();
        write_u64(out, std::uint64_t(s.kind));
        write_u64(out, std::uint64_t(s.units));
        write_u64(out, std::uint64_t(s.input_dim));
        write_u64(out, std::uint64_t(s.filters));
        write_u64(out, std::uint64_t(s.filter_len));
        write_u64(out, std::uint64_t(s.pool));
        write_u64(out, std::uint64_t(s.rate * 1e9));
        write_u64(out, std::uint64_t(s.act));
        write_u64(out, std::uint64_t(s.rows));
        write_u64(out, std::uint64_t(s.trainable ? 1 : 0));
        auto params = layer->params();
        // frozen embedding tables still need their weights persisted
        if (s.kind == LayerKind::EmbeddingLookup && params.empty()) {
            params = {&static_cast<EmbeddingLookupLayer&>(*layer).table_};
        }
        write_u64(out, params.size());
        for (const Tensor* p : params) write_tensor(out, *p);
    }
}

Network Network::load(std::istream& in) {
    Network net;
    auto count = read_u64(in);
    for (std::uint64_t i = 0; i < count; ++i) {
        LayerSpec s;
        s.kind = static_cast<LayerKind>(read_u64(in));
        s.units = static_cast<int>(read_u64(in));
        s.input_dim = static_cast<int>(read_u64(in));
        s.filters = static_cast<int>(read_u64(in));
        s.filter_len = static_cast<int>(read_u64(in));
        s.pool = static_cast<int>(read_u64(in));
        s.rate = double(read_u64(in)) / 1e9;
        s.act = static_cast<Activation>(read_u64(in));
        s.rows = static_cast<int>(read_u64(in));
        s.trainable = read_u64(in) != 0;
        auto layer = make_layer(s);
        auto nparams = read_u64(in);
        std::vector<Tensor*> params = layer->params();
        if (s.kind == LayerKind::EmbeddingLookup && params.empty()) {
            params = {&static_cast<EmbeddingLookupLayer&>(*layer).table_};
        }
        if (nparams != params.size()) {
            throw std::runtime_error("network container: parameter count mismatch");
        }
        for (Tensor* p : params) {
            Tensor t = read_tensor(in);
            if (t.shape != p->shape) {
                throw std::runtime_error("network container: tensor shape mismatch");
            }
            *p = std::move(t);
        }
        net.add(std::move(layer));
    }
    return net;
}

}  // namespace reportminer::nn
