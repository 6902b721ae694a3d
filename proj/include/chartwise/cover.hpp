#pragma once

// Chart covers, overlap decomposition and nerve bookkeeping.

#include <chartwise/error.hpp>
#include <chartwise/geometry.hpp>
#include <chartwise/random.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <utility>
#include <vector>

namespace chartwise {

enum class CoverMethod { tetrahedral, slab, landmark, custom };

inline std::string to_string(CoverMethod m) {
    switch (m) {
    case CoverMethod::tetrahedral: return "tetrahedral";
    case CoverMethod::slab: return "slab";
    case CoverMethod::landmark: return "landmark";
    case CoverMethod::custom: return "custom";
    }
    return "custom";
}

/// Chart domains as sorted index sets into a PointCloud.
struct Cover {
    std::vector<std::vector<Index>> charts;
    std::vector<Index> landmarks;
    CoverMethod method = CoverMethod::custom;
    Index n_points = 0;
    /// Points outside every percentile ball that were handed to their
    /// geodesically nearest landmark (landmark covers only).
    Index n_reassigned = 0;

    int n_charts() const { return static_cast<int>(charts.size()); }

    void validate() const {
        detail::require(!charts.empty(), ErrorKind::cover, "cover has no charts");
        std::vector<char> seen(static_cast<std::size_t>(n_points), 0);
        for (std::size_t c = 0; c < charts.size(); ++c) {
            detail::require(!charts[c].empty(), ErrorKind::cover, "chart " + std::to_string(c) + " is empty");
            for (Index i : charts[c]) {
                detail::require(i >= 0 && i < n_points, ErrorKind::cover, "chart index out of range");
                seen[static_cast<std::size_t>(i)] = 1;
            }
        }
        const auto covered = std::count(seen.begin(), seen.end(), 1);
        detail::require(covered == n_points, ErrorKind::cover,
                        std::to_string(n_points - covered) + " points are not covered by any chart");
    }
};

struct OverlapComponent {
    std::pair<int, int> pair;
    int component_id = 0;
    std::vector<Index> point_indices;
};

struct TripleOverlap {
    std::array<int, 3> triple{};
    std::vector<Index> point_indices;
};

struct OverlapDecomposition {
    std::vector<OverlapComponent> components;
    /// Points of nonempty intersections that DBSCAN labelled noise.
    Index n_noise = 0;
    std::vector<std::string> warnings;
};

struct NerveStats {
    int n_charts = 0;
    int n_pairwise = 0;
    int n_triple = 0;
    bool single_chart = false;

    bool operator==(const NerveStats&) const = default;
};

inline std::vector<Index> intersect_sorted(const std::vector<Index>& a, const std::vector<Index>& b) {
    std::vector<Index> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

namespace detail {

inline Cover finish_cover(std::vector<std::vector<Index>> charts, CoverMethod method, Index n_points) {
    Cover cover;
    cover.charts = std::move(charts);
    cover.method = method;
    cover.n_points = n_points;
    cover.validate();
    return cover;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Analytic covers
// ---------------------------------------------------------------------------

inline std::array<Eigen::Vector3d, 4> tetrahedron_vertices() {
    const double s = 1.0 / std::sqrt(3.0);
    return {Eigen::Vector3d(s, s, s), Eigen::Vector3d(s, -s, -s), Eigen::Vector3d(-s, s, -s),
            Eigen::Vector3d(-s, -s, s)};
}

/// Four enlarged hemispheres {x : <x, v_i> > -eps} around the vertices of a
/// regular tetrahedron. Nerve is the boundary of a 3-simplex.
inline Cover tetrahedral_cover(const PointCloud& cloud, double eps) {
    detail::require(cloud.ambient_dim() == 3, ErrorKind::dimension, "tetrahedral cover needs points in R^3");
    detail::require(eps > 0.0 && eps < 1.0, ErrorKind::parameter, "tetrahedral margin must lie in (0, 1)");
    const auto verts = tetrahedron_vertices();
    std::vector<std::vector<Index>> charts(4);
    for (Index i = 0; i < cloud.size(); ++i) {
        for (std::size_t c = 0; c < 4; ++c) {
            if (cloud.point(i).dot(verts[c]) > -eps) charts[c].push_back(i);
        }
    }
    return detail::finish_cover(std::move(charts), CoverMethod::tetrahedral, cloud.size());
}

/// Two charts {x[axis] > lo} and {x[axis] < hi}.
inline Cover slab_cover(const PointCloud& cloud, Index axis, double lo, double hi) {
    detail::require(lo < hi, ErrorKind::parameter, "slab cover needs lo < hi");
    detail::require(axis >= 0 && axis < cloud.ambient_dim(), ErrorKind::dimension, "slab axis out of range");
    std::vector<std::vector<Index>> charts(2);
    for (Index i = 0; i < cloud.size(); ++i) {
        const double t = cloud.points(axis, i);
        if (t > lo) charts[0].push_back(i);
        if (t < hi) charts[1].push_back(i);
    }
    return detail::finish_cover(std::move(charts), CoverMethod::slab, cloud.size());
}

// ---------------------------------------------------------------------------
// kNN graph, geodesics, farthest-point landmarks
// ---------------------------------------------------------------------------

/// Symmetric kNN graph: an edge joins i and j when either is among the
/// other's k nearest neighbours. Weights are Euclidean distances.
struct KnnGraph {
    std::vector<std::vector<std::pair<Index, double>>> adjacency;

    Index size() const { return static_cast<Index>(adjacency.size()); }
};

inline KnnGraph knn_graph(const PointCloud& cloud, int k) {
    const Index n = cloud.size();
    detail::require(k >= 1 && k < n, ErrorKind::parameter, "knn graph needs 1 <= k < n");
    const Eigen::VectorXd sq = cloud.points.colwise().squaredNorm().transpose();
    std::vector<std::vector<std::pair<Index, double>>> nearest(static_cast<std::size_t>(n));
    std::vector<Index> order(static_cast<std::size_t>(n));
    Eigen::VectorXd d2(n);
    for (Index i = 0; i < n; ++i) {
        d2.noalias() = cloud.points.transpose() * cloud.point(i);
        d2 = (sq.array() + sq(i) - 2.0 * d2.array()).max(0.0).matrix();
        std::iota(order.begin(), order.end(), Index{0});
        auto by_distance = [&](Index a, Index b) { return d2(a) < d2(b) || (d2(a) == d2(b) && a < b); };
        // k + 1 to leave room for i itself.
        std::partial_sort(order.begin(), order.begin() + k + 1, order.end(), by_distance);
        auto& row = nearest[static_cast<std::size_t>(i)];
        for (Index r = 0; r <= k && static_cast<int>(row.size()) < k; ++r) {
            const Index j = order[static_cast<std::size_t>(r)];
            if (j != i) row.emplace_back(j, (cloud.point(i) - cloud.point(j)).norm());
        }
    }
    KnnGraph graph;
    graph.adjacency.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        for (const auto& [j, w] : nearest[static_cast<std::size_t>(i)]) {
            graph.adjacency[static_cast<std::size_t>(i)].emplace_back(j, w);
            graph.adjacency[static_cast<std::size_t>(j)].emplace_back(i, w);
        }
    }
    for (auto& row : graph.adjacency) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end(),
                              [](const auto& a, const auto& b) { return a.first == b.first; }),
                  row.end());
    }
    return graph;
}

inline int count_components(const KnnGraph& graph) {
    std::vector<char> seen(static_cast<std::size_t>(graph.size()), 0);
    int components = 0;
    std::vector<Index> stack;
    for (Index s = 0; s < graph.size(); ++s) {
        if (seen[static_cast<std::size_t>(s)]) continue;
        ++components;
        seen[static_cast<std::size_t>(s)] = 1;
        stack.push_back(s);
        while (!stack.empty()) {
            const Index v = stack.back();
            stack.pop_back();
            for (const auto& [w, _] : graph.adjacency[static_cast<std::size_t>(v)]) {
                if (!seen[static_cast<std::size_t>(w)]) {
                    seen[static_cast<std::size_t>(w)] = 1;
                    stack.push_back(w);
                }
            }
        }
    }
    return components;
}

/// Exact single-source shortest paths (Dijkstra, binary heap).
inline std::vector<double> geodesic_distances(const KnnGraph& graph, Index source) {
    std::vector<double> dist(static_cast<std::size_t>(graph.size()), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, Index>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[static_cast<std::size_t>(source)] = 0.0;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
        const auto [d, v] = heap.top();
        heap.pop();
        if (d > dist[static_cast<std::size_t>(v)]) continue;
        for (const auto& [w, len] : graph.adjacency[static_cast<std::size_t>(v)]) {
            const double nd = d + len;
            if (nd < dist[static_cast<std::size_t>(w)]) {
                dist[static_cast<std::size_t>(w)] = nd;
                heap.emplace(nd, w);
            }
        }
    }
    return dist;
}

struct LandmarkSelection {
    std::vector<Index> landmarks;
    /// distances[l][x]: geodesic distance from landmark l to point x.
    std::vector<std::vector<double>> distances;
};

/// Greedy farthest-point sampling from `first`. Each new landmark maximizes
/// the minimum geodesic distance to those already chosen; ties go to the
/// lowest point index.
inline LandmarkSelection farthest_point_landmarks(const KnnGraph& graph, int count, Index first) {
    detail::require(count >= 1, ErrorKind::parameter, "need at least one landmark");
    detail::require(count <= graph.size(), ErrorKind::parameter, "more landmarks than points");
    LandmarkSelection sel;
    std::vector<double> min_dist(static_cast<std::size_t>(graph.size()), std::numeric_limits<double>::infinity());
    Index next = first;
    for (int l = 0; l < count; ++l) {
        sel.landmarks.push_back(next);
        sel.distances.push_back(geodesic_distances(graph, next));
        const auto& row = sel.distances.back();
        for (std::size_t x = 0; x < row.size(); ++x) min_dist[x] = std::min(min_dist[x], row[x]);
        next = static_cast<Index>(std::max_element(min_dist.begin(), min_dist.end()) - min_dist.begin());
    }
    return sel;
}

/// Linear-interpolation quantile (numpy's default) of `values`, q in [0, 1].
inline double quantile(std::vector<double> values, double q) {
    detail::require(!values.empty(), ErrorKind::empty_input, "quantile of empty set");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct LandmarkCoverParams {
    int n_charts = 8;
    int k = 100;
    double percentile = 0.20;
    std::uint64_t seed = 42;
};

/**
 * Geodesic balls around farthest-point landmarks.
 *
 * Chart i holds the points whose kNN-graph geodesic distance to landmark i
 * is at most the `percentile` quantile of the full landmark-by-point
 * distance matrix. The first landmark is a seeded uniform draw. A point
 * inside no ball joins the chart of its nearest landmark, which keeps the
 * cover property; the count is kept in Cover::n_reassigned.
 */
inline Cover landmark_cover(const PointCloud& cloud, const LandmarkCoverParams& params) {
    detail::require(params.n_charts >= 1, ErrorKind::parameter, "landmark cover needs at least one chart");
    detail::require(params.percentile > 0.0 && params.percentile <= 1.0, ErrorKind::parameter,
                    "percentile must lie in (0, 1]");
    const KnnGraph graph = knn_graph(cloud, params.k);
    const int components = count_components(graph);
    detail::require(components == 1, ErrorKind::connectivity,
                    "kNN graph is disconnected (" + std::to_string(components) + " components)");

    Rng rng(params.seed);
    const Index first = static_cast<Index>(rng.index(static_cast<std::size_t>(cloud.size())));
    LandmarkSelection sel = farthest_point_landmarks(graph, params.n_charts, first);

    std::vector<double> all;
    all.reserve(static_cast<std::size_t>(params.n_charts) * static_cast<std::size_t>(cloud.size()));
    for (const auto& row : sel.distances) all.insert(all.end(), row.begin(), row.end());
    const double threshold = quantile(std::move(all), params.percentile);

    std::vector<std::vector<Index>> charts(static_cast<std::size_t>(params.n_charts));
    Index reassigned = 0;
    for (Index x = 0; x < cloud.size(); ++x) {
        bool covered = false;
        std::size_t nearest = 0;
        for (std::size_t l = 0; l < sel.distances.size(); ++l) {
            const double d = sel.distances[l][static_cast<std::size_t>(x)];
            if (d <= threshold) {
                charts[l].push_back(x);
                covered = true;
            }
            if (d < sel.distances[nearest][static_cast<std::size_t>(x)]) nearest = l;
        }
        if (!covered) {
            charts[nearest].push_back(x);
            ++reassigned;
        }
    }
    for (auto& chart : charts) std::sort(chart.begin(), chart.end());

    Cover cover = detail::finish_cover(std::move(charts), CoverMethod::landmark, cloud.size());
    cover.landmarks = std::move(sel.landmarks);
    cover.n_reassigned = reassigned;
    return cover;
}

// ---------------------------------------------------------------------------
// Overlaps
// ---------------------------------------------------------------------------

struct PairOverlap {
    std::pair<int, int> pair;
    std::vector<Index> point_indices;
};

/// Nonempty intersections U_i n U_j, i < j, in lexicographic order.
inline std::vector<PairOverlap> pairwise_overlaps(const Cover& cover) {
    std::vector<PairOverlap> out;
    for (int i = 0; i < cover.n_charts(); ++i) {
        for (int j = i + 1; j < cover.n_charts(); ++j) {
            auto common = intersect_sorted(cover.charts[static_cast<std::size_t>(i)], cover.charts[static_cast<std::size_t>(j)]);
            if (!common.empty()) out.push_back({{i, j}, std::move(common)});
        }
    }
    return out;
}

/// Nonempty intersections U_i n U_j n U_k, i < j < k.
inline std::vector<TripleOverlap> triple_overlaps(const Cover& cover) {
    std::vector<TripleOverlap> out;
    const int n = cover.n_charts();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const auto ij = intersect_sorted(cover.charts[static_cast<std::size_t>(i)], cover.charts[static_cast<std::size_t>(j)]);
            if (ij.empty()) continue;
            for (int k = j + 1; k < n; ++k) {
                auto ijk = intersect_sorted(ij, cover.charts[static_cast<std::size_t>(k)]);
                if (!ijk.empty()) out.push_back({{i, j, k}, std::move(ijk)});
            }
        }
    }
    return out;
}

inline NerveStats nerve_stats(const Cover& cover) {
    NerveStats s;
    s.n_charts = cover.n_charts();
    s.n_pairwise = static_cast<int>(pairwise_overlaps(cover).size());
    s.n_triple = static_cast<int>(triple_overlaps(cover).size());
    s.single_chart = s.n_charts == 1;
    return s;
}

/**
 * DBSCAN over the columns of `points`. A point is core when at least
 * `min_pts` points (itself included) lie within `eps`. Border points join
 * the cluster of their nearest core neighbour, so the partition does not
 * depend on scan order. Returns -1 for noise, otherwise 0-based cluster
 * labels numbered by first appearance.
 */
inline std::vector<int> dbscan(const Eigen::MatrixXd& points, double eps, int min_pts) {
    detail::require(eps > 0.0, ErrorKind::parameter, "dbscan radius must be positive");
    const Index m = points.cols();
    const double eps2 = eps * eps;
    std::vector<std::vector<Index>> neighbours(static_cast<std::size_t>(m));
    for (Index a = 0; a < m; ++a) {
        for (Index b = 0; b < m; ++b) {
            if ((points.col(a) - points.col(b)).squaredNorm() <= eps2) neighbours[static_cast<std::size_t>(a)].push_back(b);
        }
    }
    std::vector<char> core(static_cast<std::size_t>(m), 0);
    for (Index a = 0; a < m; ++a) core[static_cast<std::size_t>(a)] = static_cast<int>(neighbours[static_cast<std::size_t>(a)].size()) >= min_pts;

    std::vector<int> label(static_cast<std::size_t>(m), -1);
    int next_label = 0;
    std::vector<Index> stack;
    for (Index s = 0; s < m; ++s) {
        if (!core[static_cast<std::size_t>(s)] || label[static_cast<std::size_t>(s)] >= 0) continue;
        label[static_cast<std::size_t>(s)] = next_label;
        stack.push_back(s);
        while (!stack.empty()) {
            const Index v = stack.back();
            stack.pop_back();
            for (Index w : neighbours[static_cast<std::size_t>(v)]) {
                if (core[static_cast<std::size_t>(w)] && label[static_cast<std::size_t>(w)] < 0) {
                    label[static_cast<std::size_t>(w)] = next_label;
                    stack.push_back(w);
                }
            }
        }
        ++next_label;
    }
    for (Index a = 0; a < m; ++a) {
        if (core[static_cast<std::size_t>(a)]) continue;
        double best = std::numeric_limits<double>::infinity();
        for (Index w : neighbours[static_cast<std::size_t>(a)]) {
            if (!core[static_cast<std::size_t>(w)]) continue;
            const double d = (points.col(a) - points.col(w)).squaredNorm();
            if (d < best) {
                best = d;
                label[static_cast<std::size_t>(a)] = label[static_cast<std::size_t>(w)];
            }
        }
    }
    return label;
}

/**
 * Split every nonempty pairwise intersection into DBSCAN clusters in
 * ambient coordinates. Clusters smaller than `min_size` are dropped with
 * the noise; component ids per pair follow the smallest member index.
 */
inline OverlapDecomposition decompose_overlaps(const PointCloud& cloud, const Cover& cover, double eps_cluster,
                                               int min_size) {
    detail::require(eps_cluster > 0.0, ErrorKind::parameter, "eps_cluster must be positive");
    detail::require(min_size >= 1, ErrorKind::parameter, "min_size must be at least 1");
    OverlapDecomposition out;
    for (auto& overlap : pairwise_overlaps(cover)) {
        const auto labels = dbscan(cloud.gather(overlap.point_indices), eps_cluster, min_size);
        const int n_labels = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
        std::vector<std::vector<Index>> clusters(static_cast<std::size_t>(std::max(n_labels, 0)));
        for (std::size_t a = 0; a < labels.size(); ++a) {
            if (labels[a] >= 0) clusters[static_cast<std::size_t>(labels[a])].push_back(overlap.point_indices[a]);
        }
        std::erase_if(clusters, [&](const auto& c) { return static_cast<int>(c.size()) < min_size; });
        std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
        Index kept = 0;
        int id = 0;
        for (auto& members : clusters) {
            kept += static_cast<Index>(members.size());
            out.components.push_back({overlap.pair, id++, std::move(members)});
        }
        out.n_noise += static_cast<Index>(overlap.point_indices.size()) - kept;
        if (clusters.empty()) {
            out.warnings.push_back("overlap (" + std::to_string(overlap.pair.first) + "," +
                                   std::to_string(overlap.pair.second) + ") with " +
                                   std::to_string(overlap.point_indices.size()) + " points is entirely noise");
        }
    }
    return out;
}

} // namespace chartwise
