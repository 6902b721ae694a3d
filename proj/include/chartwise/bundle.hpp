#pragma once

// Transition maps of an autoencoder atlas, their linearizations g_ji, and
// the diagnostics used to judge whether a trained atlas can be trusted.

#include <chartwise/cover.hpp>
#include <chartwise/error.hpp>
#include <chartwise/geometry.hpp>
#include <chartwise/linalg.hpp>
#include <chartwise/net.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace chartwise {

/// One autoencoder per chart of `cover`, all with latent dimension d.
struct AtlasModel {
    std::vector<ChartAutoencoder> charts;
    Cover cover;
    int latent_dim = 2;

    int n_charts() const { return static_cast<int>(charts.size()); }
    const ChartAutoencoder& chart(int i) const { return charts.at(static_cast<std::size_t>(i)); }

    void validate() const {
        detail::require(charts.size() == cover.charts.size(), ErrorKind::parameter,
                        "atlas needs one autoencoder per cover chart");
        for (const auto& c : charts) {
            c.validate();
            detail::require(c.latent_dim() == latent_dim, ErrorKind::dimension, "charts disagree on latent dimension");
        }
    }
};

/// T_ji(z) = E_j(D_i(z)).
inline Eigen::VectorXd transition_map(const AtlasModel& atlas, int i, int j, const Eigen::VectorXd& z) {
    return atlas.chart(j).encode(atlas.chart(i).decode(z));
}

/// d(T_ji) at the latent code z = J_{E_j}(D_i(z)) J_{D_i}(z).
inline Eigen::MatrixXd transition_jacobian_latent(const AtlasModel& atlas, int i, int j, const Eigen::VectorXd& z) {
    const auto& from = atlas.chart(i);
    const Eigen::VectorXd y = from.decode(z);
    return jacobian(atlas.chart(j).encoder, y) * jacobian(from.decoder, z);
}

/// g_ji(x): the transition Jacobian at z = E_i(x).
inline Eigen::MatrixXd transition_jacobian(const AtlasModel& atlas, int i, int j, const Eigen::VectorXd& x) {
    return transition_jacobian_latent(atlas, i, j, atlas.chart(i).encode(x));
}

struct TransitionSample {
    Index point_index = 0;
    std::pair<int, int> pair;
    int component_id = 0;
    Eigen::MatrixXd g;
    double det = 0.0;
    int sign = 0; // 0 flags an exactly singular g
};

/// g_ji at every point of every component, with (i, j) = component.pair, i.e.
/// the transition from the lower-indexed chart to the higher one.
inline std::vector<TransitionSample> transition_samples(const AtlasModel& atlas, const PointCloud& cloud,
                                                        const std::vector<OverlapComponent>& components) {
    std::vector<TransitionSample> out;
    for (const auto& comp : components) {
        const auto [i, j] = comp.pair;
        for (Index p : comp.point_indices) {
            TransitionSample s;
            s.point_index = p;
            s.pair = comp.pair;
            s.component_id = comp.component_id;
            s.g = transition_jacobian(atlas, i, j, cloud.point(p));
            s.det = s.g.determinant();
            s.sign = sign_of(s.det);
            out.push_back(std::move(s));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct ReconstructionError {
    double sup = 0.0;  // max over charts of the per-chart sup
    double mean = 0.0; // mean over charts of the per-chart mean
    std::vector<double> chart_sup;
    std::vector<double> chart_mean;
};

/// ||D_i(E_i(x)) - x|| over each chart's own points.
inline ReconstructionError reconstruction_error(const AtlasModel& atlas, const PointCloud& cloud) {
    ReconstructionError r;
    for (int c = 0; c < atlas.n_charts(); ++c) {
        const auto& idx = atlas.cover.charts[static_cast<std::size_t>(c)];
        const Eigen::MatrixXd x = cloud.gather(idx);
        const auto& ae = atlas.chart(c);
        const Eigen::MatrixXd recon = forward_batch(ae.decoder, forward_batch(ae.encoder, x).output()).output();
        const Eigen::VectorXd err = (recon - x).colwise().norm().transpose();
        r.chart_sup.push_back(err.size() ? err.maxCoeff() : 0.0);
        r.chart_mean.push_back(err.size() ? err.mean() : 0.0);
    }
    if (!r.chart_sup.empty()) {
        r.sup = *std::max_element(r.chart_sup.begin(), r.chart_sup.end());
        double total = 0.0;
        for (double m : r.chart_mean) total += m;
        r.mean = total / static_cast<double>(r.chart_mean.size());
    }
    return r;
}

struct LatentDifferentialError {
    std::vector<double> per_chart;
    double max = 0.0;
};

/// eta_lat,i = sup_x || J_{E_i}(D_i(z)) J_{D_i}(z) - I_d ||_op at z = E_i(x).
inline LatentDifferentialError differential_error_latent(const AtlasModel& atlas, const PointCloud& cloud) {
    LatentDifferentialError out;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(atlas.latent_dim, atlas.latent_dim);
    for (int c = 0; c < atlas.n_charts(); ++c) {
        double worst = 0.0;
        for (Index p : atlas.cover.charts[static_cast<std::size_t>(c)]) {
            const Eigen::VectorXd z = atlas.chart(c).encode(cloud.point(p));
            worst = std::max(worst, operator_norm(transition_jacobian_latent(atlas, c, c, z) - eye));
        }
        out.per_chart.push_back(worst);
        out.max = std::max(out.max, worst);
    }
    return out;
}

/// delta = min |det g| over the samples.
inline double nondegeneracy_gap(const std::vector<TransitionSample>& samples) {
    detail::require(!samples.empty(), ErrorKind::empty_input, "non-degeneracy gap of an empty sample set");
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) gap = std::min(gap, std::abs(s.det));
    return gap;
}

/// || T_ki(E_i x) - T_kj(T_ji(E_i x)) || for the chart path i -> j -> k.
inline double cocycle_defect(const AtlasModel& atlas, int i, int j, int k, const Eigen::VectorXd& x) {
    const Eigen::VectorXd z = atlas.chart(i).encode(x);
    return (transition_map(atlas, i, k, z) - transition_map(atlas, j, k, transition_map(atlas, i, j, z))).norm();
}

/// The same defect written through the middle chart only:
/// || E_k(y) - E_k(D_j(E_j(y))) || with y = D_i(E_i(x)).
inline double cocycle_defect_middle_chart(const AtlasModel& atlas, int i, int j, int k, const Eigen::VectorXd& x) {
    const Eigen::VectorXd y = atlas.chart(i).reconstruct(x);
    const auto& ek = atlas.chart(k);
    return (ek.encode(y) - ek.encode(atlas.chart(j).reconstruct(y))).norm();
}

struct TripleCocycleError {
    std::array<int, 3> triple{};
    double mean = 0.0;
    double max = 0.0;
    Index n_points = 0;
};

struct CocycleErrorStats {
    double mean = 0.0; // over all triple-overlap points
    double max = 0.0;
    std::vector<TripleCocycleError> per_triple;
};

/// Defect along i -> j -> k for each triple (i < j < k) at each of its points.
inline CocycleErrorStats cocycle_error(const AtlasModel& atlas, const PointCloud& cloud,
                                       const std::vector<TripleOverlap>& triples) {
    CocycleErrorStats out;
    double total = 0.0;
    Index count = 0;
    for (const auto& t : triples) {
        TripleCocycleError e;
        e.triple = t.triple;
        double sum = 0.0;
        for (Index p : t.point_indices) {
            const double d = cocycle_defect(atlas, t.triple[0], t.triple[1], t.triple[2], cloud.point(p));
            sum += d;
            e.max = std::max(e.max, d);
        }
        e.n_points = static_cast<Index>(t.point_indices.size());
        e.mean = e.n_points ? sum / static_cast<double>(e.n_points) : 0.0;
        total += sum;
        count += e.n_points;
        out.max = std::max(out.max, e.max);
        out.per_triple.push_back(e);
    }
    out.mean = count ? total / static_cast<double>(count) : 0.0;
    return out;
}

/// min over charts and chart points of sigma_min(J_{E_i}(x)).
inline double encoder_min_singular(const AtlasModel& atlas, const PointCloud& cloud) {
    double out = std::numeric_limits<double>::infinity();
    for (int c = 0; c < atlas.n_charts(); ++c) {
        for (Index p : atlas.cover.charts[static_cast<std::size_t>(c)]) {
            out = std::min(out, smallest_singular_value(jacobian(atlas.chart(c).encoder, cloud.point(p))));
        }
    }
    return out;
}

struct DiagnosticsReport {
    double eps_sup = 0.0;
    double eps_mean = 0.0;
    std::vector<double> chart_eps_sup;
    std::vector<double> chart_eps_mean;
    std::vector<double> eta_lat;
    double eta_lat_max = 0.0;
    double delta = 0.0;
    double cocycle_error_mean = 0.0;
    double cocycle_error_max = 0.0;
    double sigma_min_E = 0.0;
};

inline DiagnosticsReport diagnose(const AtlasModel& atlas, const PointCloud& cloud,
                                  const std::vector<TransitionSample>& samples,
                                  const std::vector<TripleOverlap>& triples) {
    DiagnosticsReport d;
    const auto recon = reconstruction_error(atlas, cloud);
    d.eps_sup = recon.sup;
    d.eps_mean = recon.mean;
    d.chart_eps_sup = recon.chart_sup;
    d.chart_eps_mean = recon.chart_mean;
    const auto eta = differential_error_latent(atlas, cloud);
    d.eta_lat = eta.per_chart;
    d.eta_lat_max = eta.max;
    d.delta = samples.empty() ? 0.0 : nondegeneracy_gap(samples);
    const auto cocycle = cocycle_error(atlas, cloud, triples);
    d.cocycle_error_mean = cocycle.mean;
    d.cocycle_error_max = cocycle.max;
    d.sigma_min_E = encoder_min_singular(atlas, cloud);
    return d;
}

} // namespace chartwise
