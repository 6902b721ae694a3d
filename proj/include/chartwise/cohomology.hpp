#pragma once

// Z/2 sign cocycle over overlap components and the coboundary test that
// decides orientability.

#include <chartwise/bundle.hpp>
#include <chartwise/cover.hpp>
#include <chartwise/error.hpp>

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace chartwise {

/// One element of the refined cover: a connected component of U_i n U_j.
struct CocycleEdge {
    std::pair<int, int> pair;
    int component_id = 0;
    int sign = 1;
    double agreement = 1.0; // fraction of samples with the majority sign
    Index n_points = 0;
    bool degenerate = false;
};

struct SignCocycle {
    std::vector<CocycleEdge> edges;
    int n_charts = 0;

    std::vector<std::size_t> degenerate_edges() const {
        std::vector<std::size_t> out;
        for (std::size_t e = 0; e < edges.size(); ++e)
            if (edges[e].degenerate) out.push_back(e);
        return out;
    }
};

/**
 * Majority sign of det g_ji per overlap component. A component whose
 * majority holds on fewer than `consistency` of its samples is flagged
 * degenerate. Samples with det exactly 0 count against the majority.
 */
inline SignCocycle compute_sign_cocycle(const std::vector<TransitionSample>& samples, int n_charts,
                                        double consistency = 0.95) {
    struct Tally {
        Index pos = 0, neg = 0, total = 0;
    };
    std::map<std::tuple<int, int, int>, Tally> tallies;
    for (const auto& s : samples) {
        auto& t = tallies[{s.pair.first, s.pair.second, s.component_id}];
        ++t.total;
        if (s.sign > 0) ++t.pos;
        if (s.sign < 0) ++t.neg;
    }
    SignCocycle out;
    out.n_charts = n_charts;
    for (const auto& [key, t] : tallies) {
        const auto [i, j, id] = key;
        if (t.pos + t.neg == 0) {
            throw Error(ErrorKind::degenerate, "overlap (" + std::to_string(i) + "," + std::to_string(j) +
                                                   ") component " + std::to_string(id) + " has no usable samples");
        }
        CocycleEdge e;
        e.pair = {i, j};
        e.component_id = id;
        e.sign = t.pos >= t.neg ? 1 : -1;
        e.n_points = t.total;
        e.agreement = static_cast<double>(std::max(t.pos, t.neg)) / static_cast<double>(t.total);
        e.degenerate = e.agreement < consistency;
        out.edges.push_back(e);
    }
    return out;
}

struct CocycleCheck {
    double agreement = 1.0;
    Index n_points = 0;
    bool vacuous = false;
    std::vector<std::pair<std::array<int, 3>, double>> per_triple;
};

/// Fraction of triple-overlap points with
/// sign det g_ki(x) = sign det g_kj(x) * sign det g_ji(x), all at x.
inline CocycleCheck verify_cocycle_condition(const AtlasModel& atlas, const PointCloud& cloud,
                                             const std::vector<TripleOverlap>& triples) {
    CocycleCheck out;
    Index agree = 0;
    for (const auto& t : triples) {
        const auto [i, j, k] = t.triple;
        Index local = 0;
        for (Index p : t.point_indices) {
            const Eigen::VectorXd x = cloud.point(p);
            const int ji = sign_of(transition_jacobian(atlas, i, j, x).determinant());
            const int kj = sign_of(transition_jacobian(atlas, j, k, x).determinant());
            const int ki = sign_of(transition_jacobian(atlas, i, k, x).determinant());
            if (ki == kj * ji && ki != 0) ++local;
        }
        agree += local;
        out.n_points += static_cast<Index>(t.point_indices.size());
        out.per_triple.emplace_back(t.triple, t.point_indices.empty()
                                                  ? 1.0
                                                  : static_cast<double>(local) /
                                                        static_cast<double>(t.point_indices.size()));
    }
    if (out.n_points == 0) {
        out.vacuous = true;
        out.agreement = 1.0;
    } else {
        out.agreement = static_cast<double>(agree) / static_cast<double>(out.n_points);
    }
    return out;
}

/// A closed walk charts[0] -> charts[1] -> ... -> charts[0]; edge t joins
/// charts[t] and charts[(t+1) % size]. Its edge-sign product is -1.
struct WitnessCycle {
    std::vector<int> charts;
    std::vector<std::size_t> edges; // indices into SignCocycle::edges
};

struct CoboundaryResult {
    bool is_coboundary = true;
    std::optional<std::vector<int>> assignment; // nu_i in {+1, -1}
    std::optional<WitnessCycle> witness;
    std::vector<int> nerve_component; // per chart
    std::vector<bool> component_is_coboundary;
};

/**
 * Signed two-colouring of the nerve multigraph. Charts are nodes, each
 * cocycle edge joins its pair. Breadth-first search fixes nu = +1 at the
 * lowest chart of every connected component and propagates
 * nu_j = sign * nu_i; any edge that disagrees (parallel edges included)
 * yields a witness cycle made of the two tree paths and that edge.
 */
inline CoboundaryResult coboundary_test(const SignCocycle& cocycle) {
    const auto bad = cocycle.degenerate_edges();
    if (!bad.empty()) {
        std::string list;
        for (auto e : bad) {
            list += " (" + std::to_string(cocycle.edges[e].pair.first) + "," +
                    std::to_string(cocycle.edges[e].pair.second) + ")#" +
                    std::to_string(cocycle.edges[e].component_id);
        }
        throw Error(ErrorKind::degenerate, "cocycle has degenerate edges:" + list);
    }
    const int n = cocycle.n_charts;
    std::vector<std::vector<std::size_t>> incident(static_cast<std::size_t>(n));
    for (std::size_t e = 0; e < cocycle.edges.size(); ++e) {
        const auto [i, j] = cocycle.edges[e].pair;
        detail::require(i >= 0 && j >= 0 && i < n && j < n && i != j, ErrorKind::parameter, "bad cocycle edge");
        incident[static_cast<std::size_t>(i)].push_back(e);
        incident[static_cast<std::size_t>(j)].push_back(e);
    }
    auto other = [&](std::size_t e, int v) {
        const auto [i, j] = cocycle.edges[e].pair;
        return v == i ? j : i;
    };

    CoboundaryResult out;
    std::vector<int> nu(static_cast<std::size_t>(n), 0);
    std::vector<int> parent_edge(static_cast<std::size_t>(n), -1);
    std::vector<int> depth(static_cast<std::size_t>(n), 0);
    out.nerve_component.assign(static_cast<std::size_t>(n), -1);
    for (int root = 0; root < n; ++root) {
        if (nu[static_cast<std::size_t>(root)] != 0) continue;
        const int comp = static_cast<int>(out.component_is_coboundary.size());
        out.component_is_coboundary.push_back(true);
        nu[static_cast<std::size_t>(root)] = 1;
        out.nerve_component[static_cast<std::size_t>(root)] = comp;
        std::queue<int> frontier;
        frontier.push(root);
        while (!frontier.empty()) {
            const int v = frontier.front();
            frontier.pop();
            for (std::size_t e : incident[static_cast<std::size_t>(v)]) {
                const int w = other(e, v);
                if (nu[static_cast<std::size_t>(w)] != 0) continue;
                nu[static_cast<std::size_t>(w)] = cocycle.edges[e].sign * nu[static_cast<std::size_t>(v)];
                parent_edge[static_cast<std::size_t>(w)] = static_cast<int>(e);
                depth[static_cast<std::size_t>(w)] = depth[static_cast<std::size_t>(v)] + 1;
                out.nerve_component[static_cast<std::size_t>(w)] = comp;
                frontier.push(w);
            }
        }
    }

    for (std::size_t e = 0; e < cocycle.edges.size(); ++e) {
        const auto [i, j] = cocycle.edges[e].pair;
        if (nu[static_cast<std::size_t>(i)] * nu[static_cast<std::size_t>(j)] == cocycle.edges[e].sign) continue;
        out.component_is_coboundary[static_cast<std::size_t>(out.nerve_component[static_cast<std::size_t>(i)])] = false;
        if (out.witness) continue;
        // Walk both endpoints up the BFS tree to their common ancestor.
        std::vector<int> up_i{i}, up_j{j};
        std::vector<std::size_t> edges_i, edges_j;
        int a = i, b = j;
        while (a != b) {
            if (depth[static_cast<std::size_t>(a)] >= depth[static_cast<std::size_t>(b)]) {
                const auto pe = static_cast<std::size_t>(parent_edge[static_cast<std::size_t>(a)]);
                edges_i.push_back(pe);
                a = other(pe, a);
                up_i.push_back(a);
            } else {
                const auto pe = static_cast<std::size_t>(parent_edge[static_cast<std::size_t>(b)]);
                edges_j.push_back(pe);
                b = other(pe, b);
                up_j.push_back(b);
            }
        }
        // Cycle: i -> ... -> lca -> ... -> j -> (edge e) -> i.
        WitnessCycle w;
        w.charts = up_i;
        w.edges = edges_i;
        for (auto it = up_j.rbegin() + 1; it != up_j.rend(); ++it) w.charts.push_back(*it);
        for (auto it = edges_j.rbegin(); it != edges_j.rend(); ++it) w.edges.push_back(*it);
        w.edges.push_back(e);
        out.witness = std::move(w);
    }
    out.is_coboundary = !out.witness.has_value();
    if (out.is_coboundary) out.assignment = std::move(nu);
    return out;
}

// ---------------------------------------------------------------------------
// Verdict
// ---------------------------------------------------------------------------

enum class Verdict { orientable, non_orientable, inconclusive };

inline std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::orientable: return "orientable";
    case Verdict::non_orientable: return "non-orientable";
    case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

/// Trust gates applied before the coboundary test is allowed to speak.
struct Gates {
    double min_delta = 0.0;      // require delta > min_delta
    double max_sup_error = 0.15; // require eps_sup <= this
    double max_chart_eta = 5.0;  // require every per-chart eta_lat <= this
};

struct OrientabilityReport {
    Verdict verdict = Verdict::inconclusive;
    std::vector<std::string> gate_failures;
    std::optional<CoboundaryResult> coboundary;
    double cocycle_agreement = 1.0;
};

inline OrientabilityReport orientability_report(const DiagnosticsReport& diag, const SignCocycle& cocycle,
                                                const CocycleCheck& check, const Gates& gates) {
    OrientabilityReport out;
    out.cocycle_agreement = check.agreement;
    if (!(diag.delta > gates.min_delta)) {
        out.gate_failures.push_back("non-degeneracy gap " + std::to_string(diag.delta) + " is not above " +
                                    std::to_string(gates.min_delta));
    }
    if (!(diag.eps_sup <= gates.max_sup_error)) {
        out.gate_failures.push_back("sup reconstruction error " + std::to_string(diag.eps_sup) + " exceeds " +
                                    std::to_string(gates.max_sup_error));
    }
    for (std::size_t c = 0; c < diag.eta_lat.size(); ++c) {
        if (!(diag.eta_lat[c] <= gates.max_chart_eta)) {
            out.gate_failures.push_back("chart " + std::to_string(c) + " eta_lat " + std::to_string(diag.eta_lat[c]) +
                                        " exceeds " + std::to_string(gates.max_chart_eta));
        }
    }
    const auto bad = cocycle.degenerate_edges();
    if (!bad.empty()) out.gate_failures.push_back(std::to_string(bad.size()) + " degenerate overlap components");
    if (!out.gate_failures.empty()) return out;

    out.coboundary = coboundary_test(cocycle);
    out.verdict = out.coboundary->is_coboundary ? Verdict::orientable : Verdict::non_orientable;
    return out;
}

} // namespace chartwise
