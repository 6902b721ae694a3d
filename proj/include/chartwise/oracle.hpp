#pragma once

// Brute-force cross-checks that ship with the library: exhaustive
// coboundary search and finite-difference derivative checks.

#include <chartwise/cohomology.hpp>
#include <chartwise/net.hpp>
#include <chartwise/random.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace chartwise {

/// Tries all 2^n chart-sign assignments with nu_0 = +1 per nerve component
/// folded in by symmetry; returns whether any satisfies every edge.
inline bool brute_force_coboundary(const SignCocycle& cocycle) {
    const int n = cocycle.n_charts;
    detail::require(n >= 0 && n <= 24, ErrorKind::parameter, "brute-force search limited to 24 charts");
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        bool ok = true;
        for (const auto& e : cocycle.edges) {
            const int nu_i = (mask >> e.pair.first) & 1U ? -1 : 1;
            const int nu_j = (mask >> e.pair.second) & 1U ? -1 : 1;
            if (nu_i * nu_j != e.sign) {
                ok = false;
                break;
            }
        }
        if (ok) return true;
    }
    return false;
}

/// Random signed multigraph on 1..max_nodes charts with 0..max_edges edges;
/// parallel edges between the same pair get distinct component ids.
inline SignCocycle random_signed_multigraph(Rng& rng, int max_nodes, int max_edges) {
    SignCocycle c;
    c.n_charts = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_nodes)));
    if (c.n_charts < 2) return c;
    const auto n_edges = static_cast<int>(rng.index(static_cast<std::size_t>(max_edges) + 1));
    for (int e = 0; e < n_edges; ++e) {
        int i = static_cast<int>(rng.index(static_cast<std::size_t>(c.n_charts)));
        int j = static_cast<int>(rng.index(static_cast<std::size_t>(c.n_charts - 1)));
        if (j >= i) ++j;
        if (i > j) std::swap(i, j);
        CocycleEdge edge;
        edge.pair = {i, j};
        edge.component_id = static_cast<int>(std::count_if(
            c.edges.begin(), c.edges.end(), [&](const CocycleEdge& o) { return o.pair == edge.pair; }));
        edge.sign = rng.uniform() < 0.5 ? -1 : 1;
        edge.n_points = 1;
        c.edges.push_back(edge);
    }
    return c;
}

/// Central differences of f at x with step h, one column per input coordinate.
template <typename F>
Eigen::MatrixXd finite_difference_jacobian(F&& f, const Eigen::VectorXd& x, double h = 1e-5) {
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd jac(f0.size(), x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        Eigen::VectorXd xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        jac.col(k) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return jac;
}

/// max |a - b| / max(|b|, floor), elementwise.
inline double max_relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double floor = 1e-6) {
    double worst = 0.0;
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c)
            worst = std::max(worst, std::abs(a(r, c) - b(r, c)) / std::max(std::abs(b(r, c)), floor));
    return worst;
}

struct SelfTestResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

inline SelfTestResult coboundary_self_test(int cases, std::uint64_t seed) {
    Rng rng(seed);
    int mismatches = 0;
    int witness_errors = 0;
    for (int t = 0; t < cases; ++t) {
        const SignCocycle c = random_signed_multigraph(rng, 8, 16);
        const CoboundaryResult r = coboundary_test(c);
        if (r.is_coboundary != brute_force_coboundary(c)) ++mismatches;
        if (r.witness) {
            int product = 1;
            for (auto e : r.witness->edges) product *= c.edges[e].sign;
            if (product != -1) ++witness_errors;
        }
    }
    return {"coboundary vs exhaustive search", mismatches == 0 && witness_errors == 0,
            std::to_string(cases) + " graphs, " + std::to_string(mismatches) + " mismatches, " +
                std::to_string(witness_errors) + " bad witnesses"};
}

inline SelfTestResult jacobian_self_test(int cases, std::uint64_t seed, double tolerance = 1e-4) {
    Rng rng(seed);
    double worst = 0.0;
    for (int t = 0; t < cases; ++t) {
        const Mlp mlp = init_mlp({3, 32, 16, 2}, rng);
        Eigen::VectorXd x(3);
        for (int k = 0; k < 3; ++k) x(k) = rng.uniform(-1.0, 1.0);
        const Eigen::MatrixXd fd =
            finite_difference_jacobian([&](const Eigen::VectorXd& v) { return forward(mlp, v); }, x, 1e-5);
        worst = std::max(worst, max_relative_error(jacobian(mlp, x), fd));
    }
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3g", worst);
    return {"analytic vs finite-difference Jacobian", worst < tolerance,
            std::to_string(cases) + " nets, max relative error " + buf};
}

} // namespace chartwise
