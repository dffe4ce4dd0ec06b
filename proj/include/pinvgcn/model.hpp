#pragma once

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "pinvgcn/errors.hpp"
#include "pinvgcn/filters.hpp"
#include "pinvgcn/random.hpp"
#include "pinvgcn/types.hpp"

namespace pinvgcn {

/// Two-layer network parameters: one weight matrix per filter part and
/// layer, plus one bias vector per layer.
struct ModelParams {
    std::array<Mat, 3> W1; // d x h each
    std::array<Mat, 3> W2; // h x m each
    Vec b1;                // h
    Vec b2;                // m

    Index in_dim() const { return W1[0].rows(); }
    Index hidden_dim() const { return W1[0].cols(); }
    Index out_dim() const { return W2[0].cols(); }
};

struct TrainConfig {
    Index hidden = 32;
    Real learning_rate = 0.01;
    int epochs = 500;
    Real dropout = 0.5;
    Real weight_decay = 0.0005; // weight matrices only
    Real adam_beta1 = 0.9;
    Real adam_beta2 = 0.999;
    Real adam_eps = 1e-8;
    std::uint64_t seed = 0;
    /// Ties W^(l,3) := W^(l,2), emulating the filter without a separate
    /// high-pass basis function (gamma = beta).
    bool tie_high_pass = false;
};

/// Training indices plus ground-truth labels for every node.
struct Split {
    std::vector<Index> train_idx;
    std::vector<int> labels; // size n
    int classes = 0;
};

/// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases.
/// Matrices are drawn in a fixed order (layer 1 parts 1..3, then layer 2),
/// entries column-major.
inline ModelParams init_params(Index d, Index h, Index m, Rng& rng) {
    require(d >= 1 && h >= 1 && m >= 1, "init_params: dimensions must be positive");
    ModelParams p;
    auto glorot = [&](Index rows, Index cols) {
        const Real bound = std::sqrt(6.0 / static_cast<Real>(rows + cols));
        Mat W(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) W(i, j) = rng.uniform(-bound, bound);
        return W;
    };
    for (auto& W : p.W1) W = glorot(d, h);
    for (auto& W : p.W2) W = glorot(h, m);
    p.b1 = Vec::Zero(h);
    p.b2 = Vec::Zero(m);
    return p;
}

inline ModelParams init_params(Index d, Index h, Index m, std::uint64_t seed) {
    Rng rng(seed);
    return init_params(d, h, m, rng);
}

/// First-layer products K^(k) X0, computed once per training run.
struct FirstLayerCache {
    std::array<Mat, 3> P; // n x d each

    FirstLayerCache() = default;
    FirstLayerCache(const FilterBank& bank, ConstMatRef X0) {
        for (int k = 0; k < 3; ++k) P[k] = bank.conv_apply(k + 1, X0);
    }
};

/// Inverted-dropout mask: 0 with probability p, else 1/(1-p). Entries are
/// drawn column-major from the run RNG.
inline Mat dropout_mask(Index rows, Index cols, Real p, Rng& rng) {
    require(p >= 0.0 && p < 1.0, "dropout: rate must lie in [0, 1)");
    Mat M(rows, cols);
    const Real keep_scale = 1.0 / (1.0 - p);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) M(i, j) = rng.uniform() < p ? 0.0 : keep_scale;
    return M;
}

/// Intermediate activations retained for the backward pass.
struct ForwardTrace {
    Mat Z1;  // pre-activation, layer 1
    Mat X1d; // post-ReLU, post-dropout
    Mat Z2;  // logits
};

namespace detail {

inline void check_forward_shapes(const FilterBank& bank, ConstMatRef X0,
                                 const ModelParams& p) {
    require_dims(X0.rows() == bank.size(), "forward: X0 row count mismatch");
    require_dims(X0.cols() == p.in_dim(), "forward: X0 column count mismatch");
    for (int k = 0; k < 3; ++k) {
        require_dims(p.W1[k].rows() == p.in_dim() && p.W1[k].cols() == p.hidden_dim(),
                     "forward: W1 shape mismatch");
        require_dims(p.W2[k].rows() == p.hidden_dim() && p.W2[k].cols() == p.out_dim(),
                     "forward: W2 shape mismatch");
    }
    require_dims(p.b1.size() == p.hidden_dim() && p.b2.size() == p.out_dim(),
                 "forward: bias shape mismatch");
}

} // namespace detail

/// Forward pass. The first layer uses the cached products, the second the
/// factored feature map; biases are added row-wise. `mask` must be either
/// empty (evaluation) or an n x h inverted-dropout mask (training).
inline ForwardTrace forward(const FilterBank& bank, const FirstLayerCache& cache,
                            const ModelParams& p, const Mat& mask = Mat()) {
    ForwardTrace t;
    t.Z1.noalias() = cache.P[0] * p.W1[0];
    t.Z1.noalias() += cache.P[1] * p.W1[1];
    t.Z1.noalias() += cache.P[2] * p.W1[2];
    t.Z1.rowwise() += p.b1.transpose();

    t.X1d = t.Z1.cwiseMax(0.0);
    if (mask.size() > 0) {
        require_dims(mask.rows() == t.X1d.rows() && mask.cols() == t.X1d.cols(),
                     "forward: dropout mask shape mismatch");
        t.X1d = t.X1d.cwiseProduct(mask);
    }

    t.Z2 = bank.feature_map(t.X1d, p.W2[0], p.W2[1], p.W2[2]);
    t.Z2.rowwise() += p.b2.transpose();
    return t;
}

/// Evaluation-mode logits straight from features.
inline Mat forward_eval(const FilterBank& bank, ConstMatRef X0, const ModelParams& p) {
    detail::check_forward_shapes(bank, X0, p);
    FirstLayerCache cache(bank, X0);
    return forward(bank, cache, p).Z2;
}

/// Average cross entropy of the softmax probabilities over the training
/// rows, stabilized by row-max subtraction.
inline Real loss(ConstMatRef logits, const Split& split) {
    require(!split.train_idx.empty(), "loss: empty training set");
    Real total = 0;
    for (Index i : split.train_idx) {
        const auto row = logits.row(i);
        const Real mx = row.maxCoeff();
        const Real lse = std::log((row.array() - mx).exp().sum());
        total += lse - (row(split.labels[static_cast<std::size_t>(i)]) - mx);
    }
    return total / static_cast<Real>(split.train_idx.size());
}

struct Gradients {
    std::array<Mat, 3> W1;
    std::array<Mat, 3> W2;
    Vec b1;
    Vec b2;
};

/// Reverse-mode gradients of loss(forward(...)). Exploits the symmetry of
/// the convolutional matrices: dW^(2,k) = X1d^T (K^(k) dZ2).
inline Gradients backward(const FilterBank& bank, const FirstLayerCache& cache,
                          const ModelParams& p, const Split& split,
                          const ForwardTrace& t, const Mat& mask = Mat()) {
    const Index n = bank.size();
    const Index m = p.out_dim();
    const Real inv_train = 1.0 / static_cast<Real>(split.train_idx.size());

    Mat G2 = Mat::Zero(n, m);
    for (Index i : split.train_idx) {
        const auto row = t.Z2.row(i);
        const Real mx = row.maxCoeff();
        Eigen::RowVectorXd sm = (row.array() - mx).exp();
        sm /= sm.sum();
        G2.row(i) = sm * inv_train;
        G2(i, split.labels[static_cast<std::size_t>(i)]) -= inv_train;
    }

    Gradients g;
    g.b2 = G2.colwise().sum();
    Mat dX1d = Mat::Zero(n, p.hidden_dim());
    for (int k = 0; k < 3; ++k) {
        Mat C = bank.conv_apply(k + 1, G2); // n x m
        g.W2[static_cast<std::size_t>(k)].noalias() = t.X1d.transpose() * C;
        dX1d.noalias() += C * p.W2[static_cast<std::size_t>(k)].transpose();
    }

    if (mask.size() > 0) dX1d = dX1d.cwiseProduct(mask);
    Mat dZ1 = dX1d.cwiseProduct((t.Z1.array() > 0.0).cast<Real>().matrix());

    g.b1 = dZ1.colwise().sum();
    for (int k = 0; k < 3; ++k)
        g.W1[static_cast<std::size_t>(k)].noalias() = cache.P[static_cast<std::size_t>(k)].transpose() * dZ1;
    return g;
}

struct AdamState {
    std::array<Mat, 3> mW1, vW1, mW2, vW2;
    Vec mb1, vb1, mb2, vb2;

    static AdamState zeros_like(const ModelParams& p) {
        AdamState s;
        for (int k = 0; k < 3; ++k) {
            s.mW1[k] = Mat::Zero(p.W1[k].rows(), p.W1[k].cols());
            s.vW1[k] = s.mW1[k];
            s.mW2[k] = Mat::Zero(p.W2[k].rows(), p.W2[k].cols());
            s.vW2[k] = s.mW2[k];
        }
        s.mb1 = Vec::Zero(p.b1.size());
        s.vb1 = s.mb1;
        s.mb2 = Vec::Zero(p.b2.size());
        s.vb2 = s.mb2;
        return s;
    }
};

namespace detail {

template <class Tensor>
void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v,
                 const TrainConfig& cfg, int t) {
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
    const Real c1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const Real c2 = 1.0 - std::pow(cfg.adam_beta2, t);
    param.array() -=
        cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.adam_eps);
}

} // namespace detail

/// One Adam step with bias correction, epoch index t starting at 1. Weight
/// decay enters as a coupled L2 term g + wd * W on the weight matrices;
/// biases decay-free.
inline void adam_step(ModelParams& p, const Gradients& g, AdamState& s,
                      const TrainConfig& cfg, int t) {
    require(t >= 1, "adam_step: epoch index starts at 1");
    for (int k = 0; k < 3; ++k) {
        Mat g1 = g.W1[k] + cfg.weight_decay * p.W1[k];
        Mat g2 = g.W2[k] + cfg.weight_decay * p.W2[k];
        detail::adam_update(p.W1[k], g1, s.mW1[k], s.vW1[k], cfg, t);
        detail::adam_update(p.W2[k], g2, s.mW2[k], s.vW2[k], cfg, t);
    }
    detail::adam_update(p.b1, g.b1, s.mb1, s.vb1, cfg, t);
    detail::adam_update(p.b2, g.b2, s.mb2, s.vb2, cfg, t);
}

struct TrainResult {
    ModelParams params;
    std::vector<Real> loss_history;
};

/// Full-batch training against a prebuilt first-layer cache (shared across
/// runs): per epoch draws a fresh dropout mask, then forward / backward /
/// adam_step. Deterministic for a fixed seed; the run RNG is consumed by
/// init_params first, then by one mask per epoch.
inline TrainResult train(const FilterBank& bank, const FirstLayerCache& cache, Index in_dim,
                         const Split& split, const TrainConfig& cfg, Rng& rng) {
    require(!split.train_idx.empty(), "train: empty training set");
    require(split.classes >= 2, "train: need at least two classes");
    require(cfg.epochs >= 1, "train: need at least one epoch");
    require_dims(cache.P[0].rows() == bank.size() && cache.P[0].cols() == in_dim,
                 "train: first-layer cache shape mismatch");

    TrainResult out;
    out.params = init_params(in_dim, cfg.hidden, split.classes, rng);
    if (cfg.tie_high_pass) { // parts 2 and 3 share one parameter throughout
        out.params.W1[2] = out.params.W1[1];
        out.params.W2[2] = out.params.W2[1];
    }

    AdamState state = AdamState::zeros_like(out.params);
    out.loss_history.reserve(static_cast<std::size_t>(cfg.epochs));

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Mat mask;
        if (cfg.dropout > 0)
            mask = dropout_mask(bank.size(), cfg.hidden, cfg.dropout, rng);
        ForwardTrace t = forward(bank, cache, out.params, mask);
        const Real l = loss(t.Z2, split);
        if (!std::isfinite(l))
            throw NonFiniteLossError("train: non-finite loss at epoch " +
                                         std::to_string(epoch),
                                     epoch);
        out.loss_history.push_back(l);

        Gradients g = backward(bank, cache, out.params, split, t, mask);
        if (cfg.tie_high_pass) {
            // gamma == beta: both parts share one parameter and its gradient
            g.W1[1] += g.W1[2];
            g.W2[1] += g.W2[2];
        }
        adam_step(out.params, g, state, cfg, epoch);
        if (cfg.tie_high_pass) {
            out.params.W1[2] = out.params.W1[1];
            out.params.W2[2] = out.params.W2[1];
        }
    }
    return out;
}

inline TrainResult train(const FilterBank& bank, ConstMatRef X0, const Split& split,
                         const TrainConfig& cfg, Rng& rng) {
    FirstLayerCache cache(bank, X0);
    return train(bank, cache, X0.cols(), split, cfg, rng);
}

inline TrainResult train(const FilterBank& bank, ConstMatRef X0, const Split& split,
                         const TrainConfig& cfg) {
    Rng rng(cfg.seed);
    return train(bank, X0, split, cfg, rng);
}

/// Accuracy over the nodes outside the training set; argmax ties break
/// toward the lowest class index.
inline Real evaluate(const FilterBank& bank, const FirstLayerCache& cache,
                     const ModelParams& p, const Split& split) {
    const Mat logits = [&] {
        ForwardTrace t = forward(bank, cache, p);
        return std::move(t.Z2);
    }();
    std::vector<char> in_train(static_cast<std::size_t>(bank.size()), 0);
    for (Index i : split.train_idx) in_train[static_cast<std::size_t>(i)] = 1;

    Index correct = 0, total = 0;
    for (Index i = 0; i < bank.size(); ++i) {
        if (in_train[static_cast<std::size_t>(i)]) continue;
        Index best = 0;
        for (Index c = 1; c < logits.cols(); ++c)
            if (logits(i, c) > logits(i, best)) best = c;
        correct += (static_cast<int>(best) == split.labels[static_cast<std::size_t>(i)]);
        ++total;
    }
    require(total > 0, "evaluate: no evaluation nodes left");
    return static_cast<Real>(correct) / static_cast<Real>(total);
}

inline Real evaluate(const FilterBank& bank, ConstMatRef X0, const ModelParams& p,
                     const Split& split) {
    detail::check_forward_shapes(bank, X0, p);
    FirstLayerCache cache(bank, X0);
    return evaluate(bank, cache, p, split);
}

/// mu_k = (mean|W^(1,k)| + mean|W^(2,k)|) / 2, the average absolute weight
/// of each filter part across both layers.
inline std::array<Real, 3> weight_magnitude_analysis(const ModelParams& p) {
    std::array<Real, 3> mu{};
    for (int k = 0; k < 3; ++k)
        mu[static_cast<std::size_t>(k)] =
            0.5 * (p.W1[k].cwiseAbs().mean() + p.W2[k].cwiseAbs().mean());
    return mu;
}

// ---------------------------------------------------------------------------
// checkpoint container (binary, bit-exact round trip)
// ---------------------------------------------------------------------------

namespace detail {

constexpr char kCheckpointMagic[8] = {'P', 'G', 'C', 'N', 'C', 'K', 'P', '1'};

inline void write_mat(std::ostream& out, const Mat& M) {
    const std::int64_t r = M.rows(), c = M.cols();
    write_raw(out, &r, 1);
    write_raw(out, &c, 1);
    write_raw(out, M.data(), static_cast<std::size_t>(M.size()));
}

inline Mat read_mat(std::istream& in) {
    std::int64_t r = 0, c = 0;
    read_raw(in, &r, 1);
    read_raw(in, &c, 1);
    require(r >= 0 && c >= 0, "checkpoint: negative shape");
    Mat M(static_cast<Index>(r), static_cast<Index>(c));
    read_raw(in, M.data(), static_cast<std::size_t>(M.size()));
    return M;
}

} // namespace detail

inline void save_checkpoint(std::ostream& out, const ModelParams& p) {
    detail::write_raw(out, detail::kCheckpointMagic, 8);
    for (const auto& W : p.W1) detail::write_mat(out, W);
    for (const auto& W : p.W2) detail::write_mat(out, W);
    detail::write_mat(out, p.b1);
    detail::write_mat(out, p.b2);
}

inline void save_checkpoint(const std::string& path, const ModelParams& p) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot open checkpoint for writing: " + path);
    save_checkpoint(out, p);
}

inline ModelParams load_checkpoint(std::istream& in) {
    char magic[8];
    detail::read_raw(in, magic, 8);
    require(std::memcmp(magic, detail::kCheckpointMagic, 8) == 0, "not a checkpoint file");
    ModelParams p;
    for (auto& W : p.W1) W = detail::read_mat(in);
    for (auto& W : p.W2) W = detail::read_mat(in);
    p.b1 = detail::read_mat(in);
    p.b2 = detail::read_mat(in);
    return p;
}

inline ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open checkpoint: " + path);
    return load_checkpoint(in);
}

} // namespace pinvgcn
