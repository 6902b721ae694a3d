#pragma once

// Small tanh MLPs with exact Jacobians and reverse-mode parameter gradients.
//
// Hidden layers apply tanh, the output layer is affine. All batched routines
// take points as matrix columns.

#include <chartwise/error.hpp>
#include <chartwise/random.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace chartwise {

struct Mlp {
    std::vector<int> layer_dims;
    std::vector<Eigen::MatrixXd> weights; // weights[l] is layer_dims[l+1] x layer_dims[l]
    std::vector<Eigen::VectorXd> biases;

    int n_layers() const { return static_cast<int>(weights.size()); }
    int input_dim() const { return layer_dims.front(); }
    int output_dim() const { return layer_dims.back(); }

    Eigen::Index n_parameters() const {
        Eigen::Index n = 0;
        for (int l = 0; l < n_layers(); ++l) n += weights[l].size() + biases[l].size();
        return n;
    }

    void validate() const {
        detail::require(layer_dims.size() >= 2, ErrorKind::parameter, "mlp needs at least two layer widths");
        detail::require(weights.size() + 1 == layer_dims.size() && biases.size() == weights.size(),
                        ErrorKind::parameter, "mlp parameter count does not match layer_dims");
        for (int l = 0; l < n_layers(); ++l) {
            detail::require(weights[l].rows() == layer_dims[l + 1] && weights[l].cols() == layer_dims[l] &&
                                biases[l].size() == layer_dims[l + 1],
                            ErrorKind::dimension, "mlp layer " + std::to_string(l) + " has the wrong shape");
        }
    }
};

/// Same layout as Mlp parameters; used for gradients and optimizer moments.
struct MlpGradient {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    static MlpGradient zeros_like(const Mlp& mlp) {
        MlpGradient g;
        for (int l = 0; l < mlp.n_layers(); ++l) {
            g.weights.push_back(Eigen::MatrixXd::Zero(mlp.weights[l].rows(), mlp.weights[l].cols()));
            g.biases.push_back(Eigen::VectorXd::Zero(mlp.biases[l].size()));
        }
        return g;
    }

    MlpGradient& operator+=(const MlpGradient& other) {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            weights[l] += other.weights[l];
            biases[l] += other.biases[l];
        }
        return *this;
    }

    MlpGradient& operator*=(double s) {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            weights[l] *= s;
            biases[l] *= s;
        }
        return *this;
    }

    double max_abs() const {
        double m = 0.0;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            if (weights[l].size() > 0) m = std::max(m, weights[l].cwiseAbs().maxCoeff());
            if (biases[l].size() > 0) m = std::max(m, biases[l].cwiseAbs().maxCoeff());
        }
        return m;
    }
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
/// Weights are drawn layer by layer in row-major order.
inline Mlp init_mlp(const std::vector<int>& layer_dims, Rng& rng) {
    detail::require(layer_dims.size() >= 2, ErrorKind::parameter, "mlp needs at least two layer widths");
    for (int w : layer_dims) detail::require(w >= 1, ErrorKind::parameter, "mlp layer width must be positive");
    Mlp mlp;
    mlp.layer_dims = layer_dims;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const int fan_in = layer_dims[l];
        const int fan_out = layer_dims[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-limit, limit);
        mlp.weights.push_back(std::move(w));
        mlp.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return mlp;
}

inline Mlp init_mlp(const std::vector<int>& layer_dims, std::uint64_t seed) {
    Rng rng(seed);
    return init_mlp(layer_dims, rng);
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

/// Layer outputs of a batched forward pass: h[0] is the input, h[L] the
/// network output, h[l] for 0 < l < L the tanh activations.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> h;

    const Eigen::MatrixXd& output() const { return h.back(); }
};

inline ForwardCache forward_batch(const Mlp& mlp, const Eigen::MatrixXd& inputs) {
    detail::require(inputs.rows() == mlp.input_dim(), ErrorKind::dimension,
                    "mlp input has " + std::to_string(inputs.rows()) + " rows, expected " +
                        std::to_string(mlp.input_dim()));
    ForwardCache cache;
    cache.h.reserve(static_cast<std::size_t>(mlp.n_layers() + 1));
    cache.h.push_back(inputs);
    for (int l = 0; l < mlp.n_layers(); ++l) {
        Eigen::MatrixXd a = mlp.weights[l] * cache.h.back();
        a.colwise() += mlp.biases[l];
        if (l + 1 < mlp.n_layers()) a = a.array().tanh().matrix();
        cache.h.push_back(std::move(a));
    }
    return cache;
}

inline Eigen::VectorXd forward(const Mlp& mlp, const Eigen::VectorXd& x) {
    detail::require(x.size() == mlp.input_dim(), ErrorKind::dimension, "mlp input dimension mismatch");
    Eigen::VectorXd h = x;
    for (int l = 0; l < mlp.n_layers(); ++l) {
        Eigen::VectorXd a = mlp.weights[l] * h + mlp.biases[l];
        h = (l + 1 < mlp.n_layers()) ? Eigen::VectorXd(a.array().tanh()) : a;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Jacobians
// ---------------------------------------------------------------------------

/// J = W_L diag(tanh'(a_{L-1})) W_{L-1} ... diag(tanh'(a_1)) W_1, built by
/// an explicit product chain from the input side.
inline Eigen::MatrixXd jacobian(const Mlp& mlp, const Eigen::VectorXd& x) {
    detail::require(x.size() == mlp.input_dim(), ErrorKind::dimension, "mlp input dimension mismatch");
    Eigen::VectorXd h = x;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(mlp.input_dim(), mlp.input_dim());
    for (int l = 0; l < mlp.n_layers(); ++l) {
        jac = mlp.weights[l] * jac;
        if (l + 1 < mlp.n_layers()) {
            const Eigen::ArrayXd t = (mlp.weights[l] * h + mlp.biases[l]).array().tanh();
            jac = (1.0 - t.square()).matrix().asDiagonal() * jac;
            h = t.matrix();
        }
    }
    return jac;
}

// ---------------------------------------------------------------------------
// Reverse mode
// ---------------------------------------------------------------------------

/**
 * Accumulates into `grad` the parameter gradient of
 * sum_b <upstream_b, f(x_b)> and returns the input adjoint
 * (input_dim x batch), i.e. column b is J(x_b)^T upstream_b.
 */
inline Eigen::MatrixXd backward_batch(const Mlp& mlp, const ForwardCache& cache, const Eigen::MatrixXd& upstream,
                                      MlpGradient& grad) {
    detail::require(upstream.rows() == mlp.output_dim() && upstream.cols() == cache.h.front().cols(),
                    ErrorKind::dimension, "upstream shape does not match the forward batch");
    Eigen::MatrixXd delta = upstream;
    for (int l = mlp.n_layers() - 1; l >= 0; --l) {
        if (l + 1 < mlp.n_layers()) {
            delta.array() *= 1.0 - cache.h[static_cast<std::size_t>(l + 1)].array().square();
        }
        grad.weights[static_cast<std::size_t>(l)].noalias() += delta * cache.h[static_cast<std::size_t>(l)].transpose();
        grad.biases[static_cast<std::size_t>(l)] += delta.rowwise().sum();
        delta = mlp.weights[static_cast<std::size_t>(l)].transpose() * delta;
    }
    return delta;
}

/// Parameter gradient of <upstream, forward(mlp, x)>.
inline MlpGradient grad(const Mlp& mlp, const Eigen::VectorXd& x, const Eigen::VectorXd& upstream) {
    detail::require(x.size() == mlp.input_dim(), ErrorKind::dimension, "mlp input dimension mismatch");
    detail::require(upstream.size() == mlp.output_dim(), ErrorKind::dimension, "upstream dimension mismatch");
    MlpGradient g = MlpGradient::zeros_like(mlp);
    backward_batch(mlp, forward_batch(mlp, x), upstream, g);
    return g;
}

/// Per-column Jacobians of a forward batch, one reverse sweep per output.
inline std::vector<Eigen::MatrixXd> jacobians_batch(const Mlp& mlp, const ForwardCache& cache) {
    const Eigen::Index batch = cache.h.front().cols();
    std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(batch),
                                     Eigen::MatrixXd(mlp.output_dim(), mlp.input_dim()));
    MlpGradient scratch = MlpGradient::zeros_like(mlp);
    for (int r = 0; r < mlp.output_dim(); ++r) {
        Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(mlp.output_dim(), batch);
        upstream.row(r).setOnes();
        const Eigen::MatrixXd rows = backward_batch(mlp, cache, upstream, scratch);
        for (Eigen::Index b = 0; b < batch; ++b) out[static_cast<std::size_t>(b)].row(r) = rows.col(b).transpose();
    }
    return out;
}

/**
 * Accumulates into `grad` the parameter gradient of
 *     sum_b  u_b^T J(x_b) v_b
 * where J is the input Jacobian, u_b = left.col(b), v_b = right.col(b).
 *
 * J(x) v is carried forward as a tangent alongside the activations, then
 * both the value and tangent paths are swept in reverse. With
 * s = 1 - tanh(a)^2 and t = s * (W t_prev), the tanh layer contributes
 * d s / d a = -2 tanh(a) s to the activation adjoint.
 */
inline void jacobian_bilinear_grad(const Mlp& mlp, const ForwardCache& cache, const Eigen::MatrixXd& right,
                                   const Eigen::MatrixXd& left, MlpGradient& grad) {
    const int L = mlp.n_layers();
    detail::require(right.rows() == mlp.input_dim() && left.rows() == mlp.output_dim() &&
                        right.cols() == cache.h.front().cols() && left.cols() == right.cols(),
                    ErrorKind::dimension, "bilinear direction shapes do not match the forward batch");
    // Tangent forward: pre-activation tangents ta[l] and tangents t[l].
    std::vector<Eigen::MatrixXd> ta(static_cast<std::size_t>(L));
    std::vector<Eigen::MatrixXd> t(static_cast<std::size_t>(L + 1));
    t[0] = right;
    for (int l = 0; l < L; ++l) {
        const auto ul = static_cast<std::size_t>(l);
        ta[ul] = mlp.weights[ul] * t[ul];
        if (l + 1 < L) {
            t[ul + 1] = ((1.0 - cache.h[ul + 1].array().square()) * ta[ul].array()).matrix();
        } else {
            t[ul + 1] = ta[ul];
        }
    }
    // Reverse over (value, tangent).
    Eigen::MatrixXd h_adj = Eigen::MatrixXd::Zero(mlp.output_dim(), right.cols());
    Eigen::MatrixXd t_adj = left;
    for (int l = L - 1; l >= 0; --l) {
        const auto ul = static_cast<std::size_t>(l);
        Eigen::MatrixXd a_adj;
        Eigen::MatrixXd ta_adj;
        if (l + 1 < L) {
            const auto& h = cache.h[ul + 1].array();
            const Eigen::ArrayXXd s = 1.0 - h.square();
            ta_adj = (s * t_adj.array()).matrix();
            const Eigen::ArrayXXd s_adj = t_adj.array() * ta[ul].array();
            a_adj = (s * h_adj.array() - 2.0 * h * s * s_adj).matrix();
        } else {
            a_adj = h_adj;
            ta_adj = t_adj;
        }
        grad.weights[ul].noalias() += a_adj * cache.h[ul].transpose();
        grad.weights[ul].noalias() += ta_adj * t[ul].transpose();
        grad.biases[ul] += a_adj.rowwise().sum();
        h_adj = mlp.weights[ul].transpose() * a_adj;
        t_adj = mlp.weights[ul].transpose() * ta_adj;
    }
}

// ---------------------------------------------------------------------------
// Chart autoencoder
// ---------------------------------------------------------------------------

/// Encoder N -> hidden... -> d and decoder d -> reversed hidden... -> N.
struct ChartAutoencoder {
    Mlp encoder;
    Mlp decoder;
    int chart_index = 0;

    int latent_dim() const { return encoder.output_dim(); }
    int ambient_dim() const { return encoder.input_dim(); }

    Eigen::VectorXd encode(const Eigen::VectorXd& x) const { return forward(encoder, x); }
    Eigen::VectorXd decode(const Eigen::VectorXd& z) const { return forward(decoder, z); }
    Eigen::VectorXd reconstruct(const Eigen::VectorXd& x) const { return decode(encode(x)); }

    void validate() const {
        encoder.validate();
        decoder.validate();
        detail::require(encoder.output_dim() == decoder.input_dim() && decoder.output_dim() == encoder.input_dim(),
                        ErrorKind::dimension, "encoder and decoder shapes do not compose");
    }
};

inline ChartAutoencoder make_chart_autoencoder(int ambient_dim, int latent_dim, const std::vector<int>& hidden,
                                               Rng& rng, int chart_index = 0) {
    std::vector<int> enc{ambient_dim};
    enc.insert(enc.end(), hidden.begin(), hidden.end());
    enc.push_back(latent_dim);
    std::vector<int> dec{latent_dim};
    dec.insert(dec.end(), hidden.rbegin(), hidden.rend());
    dec.push_back(ambient_dim);
    ChartAutoencoder chart;
    chart.encoder = init_mlp(enc, rng);
    chart.decoder = init_mlp(dec, rng);
    chart.chart_index = chart_index;
    return chart;
}

/// A single affine layer x -> W x + b wrapped as an Mlp.
inline Mlp linear_mlp(const Eigen::MatrixXd& w, const Eigen::VectorXd& b) {
    Mlp mlp;
    mlp.layer_dims = {static_cast<int>(w.cols()), static_cast<int>(w.rows())};
    mlp.weights = {w};
    mlp.biases = {b};
    return mlp;
}

inline Mlp linear_mlp(const Eigen::MatrixXd& w) { return linear_mlp(w, Eigen::VectorXd::Zero(w.rows())); }

} // namespace chartwise
