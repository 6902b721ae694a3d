#pragma once

// Chart losses, Adam, and the per-chart training loop with retries.

#include <chartwise/bundle.hpp>
#include <chartwise/cover.hpp>
#include <chartwise/error.hpp>
#include <chartwise/geometry.hpp>
#include <chartwise/linalg.hpp>
#include <chartwise/net.hpp>
#include <chartwise/random.hpp>

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace chartwise {

struct TrainConfig {
    double lr = 1e-3;
    int epochs = 2000;
    int batch_size = 64;
    double lambda_jac = 0.0;
    double eps_sv = 0.1;
    double eps_thresh = 0.15;
    int max_retries = 3;
    int retry_extra_epochs = 2000;
    std::uint64_t seed = 42;
    std::vector<int> hidden{32, 16};
    int latent_dim = 2;
    int jobs = 1; // charts trained concurrently
    // Fold the chart's mean and spread into the first encoder layer and the
    // last decoder layer before training.
    bool standardize_init = true;

    void validate() const {
        detail::require(lr > 0.0, ErrorKind::parameter, "learning rate must be positive");
        // epochs == 0 is accepted and means "return the initialization".
        detail::require(epochs >= 0, ErrorKind::parameter, "epochs must be non-negative");
        detail::require(batch_size >= 1, ErrorKind::parameter, "batch size must be at least 1");
        detail::require(lambda_jac >= 0.0, ErrorKind::parameter, "lambda_jac must be non-negative");
        detail::require(eps_sv > 0.0, ErrorKind::parameter, "eps_sv must be positive");
        detail::require(max_retries >= 0 && retry_extra_epochs >= 0, ErrorKind::parameter, "bad retry settings");
        detail::require(latent_dim >= 1, ErrorKind::parameter, "latent dimension must be positive");
    }
};

struct ChartGradient {
    MlpGradient encoder;
    MlpGradient decoder;

    static ChartGradient zeros_like(const ChartAutoencoder& chart) {
        return {MlpGradient::zeros_like(chart.encoder), MlpGradient::zeros_like(chart.decoder)};
    }

    ChartGradient& operator+=(const ChartGradient& o) {
        encoder += o.encoder;
        decoder += o.decoder;
        return *this;
    }

    ChartGradient& operator*=(double s) {
        encoder *= s;
        decoder *= s;
        return *this;
    }
};

struct LossAndGrad {
    double value = 0.0;
    ChartGradient grad;
};

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// mean_b ||x_b - D(E(x_b))||^2 over the batch columns.
inline LossAndGrad recon_loss(const ChartAutoencoder& chart, const Eigen::MatrixXd& batch) {
    detail::require(batch.cols() > 0, ErrorKind::empty_input, "reconstruction loss on an empty batch");
    const double scale = 1.0 / static_cast<double>(batch.cols());
    const ForwardCache enc = forward_batch(chart.encoder, batch);
    const ForwardCache dec = forward_batch(chart.decoder, enc.output());
    const Eigen::MatrixXd diff = dec.output() - batch;
    LossAndGrad out{diff.squaredNorm() * scale, ChartGradient::zeros_like(chart)};
    const Eigen::MatrixXd latent_adj = backward_batch(chart.decoder, dec, (2.0 * scale) * diff, out.grad.decoder);
    backward_batch(chart.encoder, enc, latent_adj, out.grad.encoder);
    return out;
}

/**
 * mean_b max(0, eps_sv - sigma_min(J_E(x_b))).
 *
 * Where the hinge is active the gradient of sigma_min is u^T (dJ) v for the
 * smallest singular pair (u, v) of the d x N encoder Jacobian. `point_ids`,
 * when given, maps batch columns to cloud indices for error messages.
 */
inline LossAndGrad jac_reg_loss(const ChartAutoencoder& chart, const Eigen::MatrixXd& batch, double eps_sv,
                                const std::vector<Index>* point_ids = nullptr) {
    detail::require(eps_sv > 0.0, ErrorKind::parameter, "eps_sv must be positive");
    detail::require(batch.cols() > 0, ErrorKind::empty_input, "jacobian loss on an empty batch");
    const Eigen::Index n = batch.cols();
    const double scale = 1.0 / static_cast<double>(n);
    const ForwardCache enc = forward_batch(chart.encoder, batch);
    const auto jacs = jacobians_batch(chart.encoder, enc);
    Eigen::MatrixXd left = Eigen::MatrixXd::Zero(chart.latent_dim(), n);
    Eigen::MatrixXd right = Eigen::MatrixXd::Zero(chart.ambient_dim(), n);
    LossAndGrad out{0.0, ChartGradient::zeros_like(chart)};
    bool active = false;
    for (Eigen::Index b = 0; b < n; ++b) {
        const auto& jac = jacs[static_cast<std::size_t>(b)];
        if (!jac.allFinite()) {
            const Index id = point_ids ? (*point_ids)[static_cast<std::size_t>(b)] : b;
            throw Error(ErrorKind::numerical, "encoder Jacobian is not finite at point " + std::to_string(id));
        }
        const SingularTriple st = smallest_singular(jac);
        if (!std::isfinite(st.sigma)) {
            const Index id = point_ids ? (*point_ids)[static_cast<std::size_t>(b)] : b;
            throw Error(ErrorKind::numerical, "SVD failed at point " + std::to_string(id));
        }
        if (st.sigma < eps_sv) {
            out.value += eps_sv - st.sigma;
            left.col(b) = -scale * st.left;
            right.col(b) = st.right;
            active = true;
        }
    }
    out.value *= scale;
    if (active) jacobian_bilinear_grad(chart.encoder, enc, right, left, out.grad.encoder);
    return out;
}

/// recon + lambda_jac * jac_reg; the Jacobian term is skipped when lambda_jac = 0.
inline LossAndGrad total_loss(const ChartAutoencoder& chart, const Eigen::MatrixXd& batch, const TrainConfig& cfg,
                              const std::vector<Index>* point_ids = nullptr) {
    LossAndGrad out = recon_loss(chart, batch);
    if (cfg.lambda_jac > 0.0) {
        LossAndGrad jac = jac_reg_loss(chart, batch, cfg.eps_sv, point_ids);
        jac.grad *= cfg.lambda_jac;
        out.value += cfg.lambda_jac * jac.value;
        out.grad += jac.grad;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;
};

namespace detail {

inline void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                        std::span<double> v, std::int64_t step, double lr, const AdamHyper& h) {
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        m[k] = h.beta1 * m[k] + (1.0 - h.beta1) * grads[k];
        v[k] = h.beta2 * v[k] + (1.0 - h.beta2) * grads[k] * grads[k];
        params[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + h.eps);
    }
}

} // namespace detail

/// One bias-corrected Adam step over a flat parameter vector.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
                      const AdamHyper& h = {}) {
    detail::require(params.size() == grads.size(), ErrorKind::dimension, "adam: parameter/gradient size mismatch");
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    ++state.step;
    detail::adam_update(params, grads, state.m, state.v, state.step, lr, h);
}

/// Adam over every weight and bias block of a chart autoencoder.
inline void adam_step(ChartAutoencoder& chart, const ChartGradient& g, AdamState& state, double lr,
                      const AdamHyper& h = {}) {
    const auto total = static_cast<std::size_t>(chart.encoder.n_parameters() + chart.decoder.n_parameters());
    if (state.m.size() != total) {
        state.m.assign(total, 0.0);
        state.v.assign(total, 0.0);
    }
    ++state.step;
    std::size_t offset = 0;
    auto apply = [&](double* p, const double* gr, Eigen::Index n) {
        const auto len = static_cast<std::size_t>(n);
        detail::adam_update({p, len}, {gr, len}, {state.m.data() + offset, len}, {state.v.data() + offset, len},
                            state.step, lr, h);
        offset += len;
    };
    using Block = std::pair<Mlp*, const MlpGradient*>;
    for (const auto& [net, net_grad] : {Block{&chart.encoder, &g.encoder}, Block{&chart.decoder, &g.decoder}}) {
        Mlp& mlp = *net;
        const MlpGradient& mg = *net_grad;
        for (int l = 0; l < mlp.n_layers(); ++l) {
            apply(mlp.weights[l].data(), mg.weights[l].data(), mlp.weights[l].size());
            apply(mlp.biases[l].data(), mg.biases[l].data(), mlp.biases[l].size());
        }
    }
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainingLog {
    std::vector<std::vector<double>> loss_curves; // [chart][epoch]
    std::vector<double> chart_sup;
    std::vector<double> chart_mean;
    std::vector<std::string> retry_actions;
    int retry_count = 0;
    bool converged = false;

    double max_sup() const {
        double m = 0.0;
        for (double s : chart_sup) m = std::max(m, s);
        return m;
    }
};

/// Per-chart optimizer state that survives between training rounds.
struct ChartTrainer {
    ChartAutoencoder chart;
    AdamState adam;
    Rng rng{0};
    std::vector<double> curve;
};

/// Runs `epochs` epochs of minibatch Adam on the points `indices`. Each
/// epoch reshuffles with the trainer's stream; the last partial batch is kept.
inline void train_chart(ChartTrainer& t, const PointCloud& cloud, const std::vector<Index>& indices,
                        const TrainConfig& cfg, int epochs) {
    std::vector<Index> order = indices;
    std::vector<Index> batch_ids;
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (int e = 0; e < epochs; ++e) {
        t.rng.shuffle(order);
        double weighted = 0.0;
        for (std::size_t start = 0; start < order.size(); start += bs) {
            const std::size_t stop = std::min(order.size(), start + bs);
            batch_ids.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(stop));
            const Eigen::MatrixXd batch = cloud.gather(batch_ids);
            const LossAndGrad lg = total_loss(t.chart, batch, cfg, &batch_ids);
            if (!std::isfinite(lg.value)) {
                throw Error(ErrorKind::divergence, "chart " + std::to_string(t.chart.chart_index) +
                                                       " loss is not finite at epoch " +
                                                       std::to_string(t.curve.size()));
            }
            weighted += lg.value * static_cast<double>(stop - start);
            adam_step(t.chart, lg.grad, t.adam, cfg.lr);
        }
        t.curve.push_back(weighted / static_cast<double>(order.size()));
    }
}

/**
 * Rewrites a freshly initialized chart so it acts on standardized data:
 * E(x) = E0((x - mu) / s) and D(z) = mu + s * D0(z), with mu the mean of
 * `points` and s its per-coordinate RMS spread. Only the first encoder
 * layer and the last decoder layer change.
 */
inline void standardize_chart(ChartAutoencoder& chart, const Eigen::MatrixXd& points) {
    if (points.cols() == 0) return;
    const Eigen::VectorXd mu = points.rowwise().mean();
    const double spread =
        std::sqrt((points.colwise() - mu).squaredNorm() / static_cast<double>(points.size()));
    const double s = spread > 0.0 && std::isfinite(spread) ? spread : 1.0;
    auto& w0 = chart.encoder.weights.front();
    w0 /= s;
    chart.encoder.biases.front() -= w0 * mu;
    chart.decoder.weights.back() *= s;
    chart.decoder.biases.back() = s * chart.decoder.biases.back() + mu;
}

namespace detail {

/// Calls fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first
/// exception after all workers finish.
template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
    if (jobs <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min(jobs, n); ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline double chart_sup_error(const ChartAutoencoder& chart, const PointCloud& cloud, const std::vector<Index>& idx) {
    const Eigen::MatrixXd x = cloud.gather(idx);
    const Eigen::MatrixXd r = forward_batch(chart.decoder, forward_batch(chart.encoder, x).output()).output();
    return (r - x).colwise().norm().maxCoeff();
}

inline ChartTrainer fresh_trainer(const TrainConfig& cfg, const PointCloud& cloud, const std::vector<Index>& idx,
                                  int chart_index, std::uint64_t stream) {
    const Rng base = Rng(cfg.seed).split(stream);
    Rng init = base.split(0);
    ChartTrainer t;
    t.chart = make_chart_autoencoder(static_cast<int>(cloud.ambient_dim()), cfg.latent_dim, cfg.hidden, init,
                                     chart_index);
    if (cfg.standardize_init) standardize_chart(t.chart, cloud.gather(idx));
    t.rng = base.split(1);
    return t;
}

} // namespace detail

/**
 * Trains one autoencoder per chart on that chart's points only, minimizing
 * recon + lambda_jac * jac_reg (there is no cocycle term).
 *
 * After the first round, every chart whose sup reconstruction error on its
 * full point set exceeds eps_thresh is retried: the first retry extends
 * training by retry_extra_epochs, later retries restart the chart from a
 * fresh seed. Charts train independently, each on its own RNG stream split
 * from cfg.seed, so results do not depend on cfg.jobs.
 */
inline std::pair<AtlasModel, TrainingLog> train_atlas(const PointCloud& cloud, const Cover& cover,
                                                      const TrainConfig& cfg) {
    cfg.validate();
    cover.validate();
    detail::require(cover.n_points == cloud.size(), ErrorKind::cover, "cover was built for a different cloud");
    const int n = cover.n_charts();
    std::vector<ChartTrainer> trainers(static_cast<std::size_t>(n));
    detail::parallel_for(n, cfg.jobs, [&](int c) {
        auto& t = trainers[static_cast<std::size_t>(c)];
        t = detail::fresh_trainer(cfg, cloud, cover.charts[static_cast<std::size_t>(c)], c,
                                  static_cast<std::uint64_t>(c));
        train_chart(t, cloud, cover.charts[static_cast<std::size_t>(c)], cfg, cfg.epochs);
    });

    TrainingLog log;
    log.chart_sup.assign(static_cast<std::size_t>(n), 0.0);
    auto measure = [&] {
        for (int c = 0; c < n; ++c) {
            log.chart_sup[static_cast<std::size_t>(c)] = detail::chart_sup_error(
                trainers[static_cast<std::size_t>(c)].chart, cloud, cover.charts[static_cast<std::size_t>(c)]);
        }
    };
    measure();

    // With no training budget there is nothing to retry.
    for (int attempt = 1; cfg.epochs > 0 && attempt <= cfg.max_retries && log.max_sup() > cfg.eps_thresh; ++attempt) {
        std::vector<int> failing;
        for (int c = 0; c < n; ++c)
            if (log.chart_sup[static_cast<std::size_t>(c)] > cfg.eps_thresh) failing.push_back(c);
        for (int c : failing) {
            log.retry_actions.push_back((attempt == 1 ? "extend chart " : "restart chart ") + std::to_string(c) +
                                        " (attempt " + std::to_string(attempt) + ")");
        }
        detail::parallel_for(static_cast<int>(failing.size()), cfg.jobs, [&](int f) {
            const int c = failing[static_cast<std::size_t>(f)];
            auto& t = trainers[static_cast<std::size_t>(c)];
            const auto& idx = cover.charts[static_cast<std::size_t>(c)];
            if (attempt == 1) {
                train_chart(t, cloud, idx, cfg, cfg.retry_extra_epochs);
            } else {
                auto curve = std::move(t.curve);
                t = detail::fresh_trainer(cfg, cloud, idx, c,
                                          static_cast<std::uint64_t>(c) + 1000ULL * static_cast<std::uint64_t>(attempt));
                t.curve = std::move(curve);
                train_chart(t, cloud, idx, cfg, cfg.epochs);
            }
        });
        log.retry_count = attempt;
        measure();
    }

    AtlasModel atlas;
    atlas.cover = cover;
    atlas.latent_dim = cfg.latent_dim;
    for (auto& t : trainers) {
        log.loss_curves.push_back(std::move(t.curve));
        atlas.charts.push_back(std::move(t.chart));
    }
    const auto recon = reconstruction_error(atlas, cloud);
    log.chart_sup = recon.chart_sup;
    log.chart_mean = recon.chart_mean;
    log.converged = log.max_sup() <= cfg.eps_thresh;
    return {std::move(atlas), std::move(log)};
}

} // namespace chartwise
