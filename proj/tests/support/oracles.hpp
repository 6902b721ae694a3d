#pragma once

// Independent reference implementations used only by the tests. Nothing
// here calls into the library code it is checking.

#include <chartwise/net.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <queue>
#include <tuple>
#include <vector>

namespace oracle {

/// Forward pass with explicit loops, no Eigen products.
inline std::vector<double> naive_forward(const chartwise::Mlp& mlp, const std::vector<double>& x) {
    std::vector<double> h = x;
    const int L = mlp.n_layers();
    for (int l = 0; l < L; ++l) {
        const auto& w = mlp.weights[static_cast<std::size_t>(l)];
        const auto& b = mlp.biases[static_cast<std::size_t>(l)];
        std::vector<double> next(static_cast<std::size_t>(w.rows()));
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            double acc = b(r);
            for (Eigen::Index c = 0; c < w.cols(); ++c) acc += w(r, c) * h[static_cast<std::size_t>(c)];
            next[static_cast<std::size_t>(r)] = l + 1 < L ? std::tanh(acc) : acc;
        }
        h = std::move(next);
    }
    return h;
}

struct SignedEdge {
    int a;
    int b;
    int sign;
};

/// Exhaustive search over all 2^n vertex signings.
inline bool brute_coboundary(int n, const std::vector<SignedEdge>& edges) {
    for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
        bool ok = true;
        for (const auto& e : edges) {
            const int sa = ((mask >> e.a) & 1U) ? -1 : 1;
            const int sb = ((mask >> e.b) & 1U) ? -1 : 1;
            if (sa * sb != e.sign) {
                ok = false;
                break;
            }
        }
        if (ok) return true;
    }
    return false;
}

/// Central-difference gradient of a scalar function of a flat vector.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double keep = x[k];
        x[k] = keep + h;
        const double fp = f(x);
        x[k] = keep - h;
        const double fm = f(x);
        x[k] = keep;
        g[k] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// Flattens an Mlp's parameters (weights row-major, then biases, per layer).
inline std::vector<double> flatten(const chartwise::Mlp& mlp) {
    std::vector<double> out;
    for (int l = 0; l < mlp.n_layers(); ++l) {
        const auto& w = mlp.weights[static_cast<std::size_t>(l)];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) out.push_back(w(r, c));
        const auto& b = mlp.biases[static_cast<std::size_t>(l)];
        for (Eigen::Index r = 0; r < b.size(); ++r) out.push_back(b(r));
    }
    return out;
}

inline chartwise::Mlp unflatten(chartwise::Mlp mlp, const std::vector<double>& flat) {
    std::size_t k = 0;
    for (int l = 0; l < mlp.n_layers(); ++l) {
        auto& w = mlp.weights[static_cast<std::size_t>(l)];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[k++];
        auto& b = mlp.biases[static_cast<std::size_t>(l)];
        for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = flat[k++];
    }
    return mlp;
}

/// Smallest singular value of a 2 x n matrix from the eigenvalues of J J^T.
inline double sigma_min_2xn(const Eigen::MatrixXd& j) {
    const double a = j.row(0).squaredNorm();
    const double d = j.row(1).squaredNorm();
    const double b = j.row(0).dot(j.row(1));
    const double mean = 0.5 * (a + d);
    const double disc = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    return std::sqrt(std::max(0.0, mean - disc));
}

/// Connected components of the graph joining points closer than `radius`
/// (breadth-first search over all pairs). Returns a label per column.
inline std::vector<int> radius_components(const Eigen::MatrixXd& pts, double radius) {
    const auto n = pts.cols();
    std::vector<int> label(static_cast<std::size_t>(n), -1);
    int next = 0;
    for (Eigen::Index s = 0; s < n; ++s) {
        if (label[static_cast<std::size_t>(s)] >= 0) continue;
        std::queue<Eigen::Index> q;
        q.push(s);
        label[static_cast<std::size_t>(s)] = next;
        while (!q.empty()) {
            const auto v = q.front();
            q.pop();
            for (Eigen::Index w = 0; w < n; ++w) {
                if (label[static_cast<std::size_t>(w)] < 0 && (pts.col(v) - pts.col(w)).norm() <= radius) {
                    label[static_cast<std::size_t>(w)] = next;
                    q.push(w);
                }
            }
        }
        ++next;
    }
    return label;
}

/// Random invertible d x d matrix with singular values in [lo, hi].
template <typename Rng>
Eigen::MatrixXd random_matrix_with_singular_values(Rng& rng, int d, double lo, double hi, Eigen::VectorXd* sv = nullptr) {
    auto orth = [&] {
        Eigen::MatrixXd g(d, d);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) g(r, c) = rng.normal();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        return Eigen::MatrixXd(qr.householderQ());
    };
    Eigen::VectorXd s(d);
    for (int k = 0; k < d; ++k) s(k) = rng.uniform(lo, hi);
    if (sv) *sv = s;
    return orth() * s.asDiagonal() * orth();
}

} // namespace oracle
