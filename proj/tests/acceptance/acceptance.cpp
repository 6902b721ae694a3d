// Acceptance checks. Each criterion prints one PASS/FAIL line; the exit code
// is nonzero if any selected criterion fails.

#include <chartwise/experiment.hpp>
#include <chartwise/stability.hpp>

#include "oracles.hpp"
#include "synthetic.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>

using namespace chartwise;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kIdentityTol = 1e-12;  // criterion 1
constexpr double kFdStep = 1e-5;        // criterion 2
constexpr double kFdRelTol = 1e-4;      // criterion 2
constexpr double kChainTol = 1e-12;     // criterion 2
constexpr double kLinearTol = 1e-10;    // criterion 3
constexpr int kCoboundaryCases = 2000;  // criterion 4
constexpr double kSphereSupMax = 0.10;  // criterion 5
constexpr double kSphereCocycleMax = 0.05;
constexpr double kCheckMin = 0.95;      // criteria 8, 9
constexpr double kExampleTol = 1e-15;   // criterion 7 (absolute)
constexpr int kMonotoneTuples = 1000;   // criterion 7
constexpr int kNondegCases = 100;       // criterion 10

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Eigen::VectorXd random_vector(Rng& rng, int n, double scale = 1.0) {
    Eigen::VectorXd v(n);
    for (int k = 0; k < n; ++k) v(k) = rng.uniform(-scale, scale);
    return v;
}

Eigen::VectorXd naive(const Mlp& mlp, const Eigen::VectorXd& x) {
    const auto out = oracle::naive_forward(mlp, std::vector<double>(x.data(), x.data() + x.size()));
    return Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

// --- 1 ---------------------------------------------------------------------

Outcome criterion1() {
    Rng rng(101);
    double worst = 0.0;
    int cases = 0;
    for (int t = 0; t < 50; ++t) {
        AtlasModel atlas;
        atlas.latent_dim = 2;
        for (int c = 0; c < 3; ++c) atlas.charts.push_back(make_chart_autoencoder(3, 2, {32, 16}, rng, c));
        atlas.cover.charts.assign(3, {});
        for (int p = 0; p < 20; ++p) {
            const Eigen::VectorXd x = random_vector(rng, 3, 1.5);
            // || E_k(y) - E_k(D_j(E_j(y))) ||, y = D_i(E_i(x)), with loop-based forward passes.
            const auto& ci = atlas.chart(0);
            const auto& cj = atlas.chart(1);
            const auto& ck = atlas.chart(2);
            const Eigen::VectorXd y = naive(ci.decoder, naive(ci.encoder, x));
            const double ref = (naive(ck.encoder, y) - naive(ck.encoder, naive(cj.decoder, naive(cj.encoder, y)))).norm();
            worst = std::max(worst, std::abs(cocycle_defect(atlas, 0, 1, 2, x) - ref));
            ++cases;
        }
    }
    return {worst <= kIdentityTol, std::to_string(cases) + " points on 50 random atlases, max |defect - middle-chart form| " +
                                       fmt("%.3g", worst)};
}

// --- 2 ---------------------------------------------------------------------

Outcome criterion2() {
    Rng rng(102);
    double worst_fd = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Mlp mlp = init_mlp({3, 32, 16, 2}, rng);
        const Eigen::VectorXd x = random_vector(rng, 3);
        const Eigen::MatrixXd jac = jacobian(mlp, x);
        for (int k = 0; k < 3; ++k) {
            Eigen::VectorXd xp = x, xm = x;
            xp(k) += kFdStep;
            xm(k) -= kFdStep;
            const Eigen::VectorXd col = (naive(mlp, xp) - naive(mlp, xm)) / (2.0 * kFdStep);
            for (int r = 0; r < 2; ++r)
                worst_fd = std::max(worst_fd, std::abs(jac(r, k) - col(r)) / std::max(std::abs(col(r)), 1e-6));
        }
    }
    double worst_chain = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Mlp g = init_mlp({3, 16, 2}, rng);
        const Mlp f = init_mlp({2, 8, 4}, rng);
        // f o g as one network: g's linear output layer folds into f's first layer.
        Mlp fg;
        fg.layer_dims = {3, 16, 8, 4};
        fg.weights = {g.weights[0], f.weights[0] * g.weights[1], f.weights[1]};
        fg.biases = {g.biases[0], f.weights[0] * g.biases[1] + f.biases[0], f.biases[1]};
        const Eigen::VectorXd x = random_vector(rng, 3, 2.0);
        const Eigen::MatrixXd chain = jacobian(f, forward(g, x)) * jacobian(g, x);
        worst_chain = std::max(worst_chain, (jacobian(fg, x) - chain).cwiseAbs().maxCoeff());
    }
    return {worst_fd < kFdRelTol && worst_chain <= kChainTol,
            "100 nets: max FD relative error " + fmt("%.3g", worst_fd) + ", chain rule max error " +
                fmt("%.3g", worst_chain)};
}

// --- 3 ---------------------------------------------------------------------

Outcome criterion3() {
    Rng rng(103);
    double worst_cocycle = 0.0, worst_inverse = 0.0, worst_closed = 0.0;
    double min_agreement = 1.0;
    for (int t = 0; t < 50; ++t) {
        const int d = 1 + static_cast<int>(rng.index(3));
        auto [cloud, cover] = synthetic::shared_cloud(rng, d, 30, 3);
        const auto lin = synthetic::random_linear_atlas(rng, cover, d);
        for (Index p = 0; p < cloud.size(); ++p) {
            const Eigen::VectorXd x = cloud.point(p);
            const Eigen::MatrixXd g10 = transition_jacobian(lin.atlas, 0, 1, x);
            const Eigen::MatrixXd g21 = transition_jacobian(lin.atlas, 1, 2, x);
            const Eigen::MatrixXd g20 = transition_jacobian(lin.atlas, 0, 2, x);
            const Eigen::MatrixXd g01 = transition_jacobian(lin.atlas, 1, 0, x);
            worst_cocycle = std::max(worst_cocycle, (g20 - g21 * g10).cwiseAbs().maxCoeff());
            worst_inverse =
                std::max(worst_inverse, (g01 * g10 - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff());
            worst_closed = std::max(worst_closed, (g10 - lin.a[1] * lin.a[0].inverse()).cwiseAbs().maxCoeff());
        }
        const auto check = verify_cocycle_condition(lin.atlas, cloud, triple_overlaps(cover));
        min_agreement = std::min(min_agreement, check.vacuous ? 0.0 : check.agreement);
    }
    const bool pass = worst_cocycle <= kLinearTol && worst_inverse <= kLinearTol && worst_closed <= kLinearTol &&
                      min_agreement == 1.0;
    return {pass, "50 linear atlases: g_ki - g_kj g_ji " + fmt("%.3g", worst_cocycle) + ", g_ij g_ji - I " +
                      fmt("%.3g", worst_inverse) + ", vs A_j A_i^-1 " + fmt("%.3g", worst_closed) +
                      ", sign cocycle agreement " + fmt("%.4f", min_agreement)};
}

// --- 4 ---------------------------------------------------------------------

Outcome criterion4() {
    Rng rng(104);
    int mismatches = 0, bad_certificates = 0, n_coboundary = 0;
    for (int t = 0; t < kCoboundaryCases; ++t) {
        SignCocycle c;
        c.n_charts = 1 + static_cast<int>(rng.index(8));
        std::vector<oracle::SignedEdge> edges;
        const int n_edges = c.n_charts < 2 ? 0 : static_cast<int>(rng.index(17));
        std::map<std::pair<int, int>, int> parallel;
        for (int e = 0; e < n_edges; ++e) {
            int a = static_cast<int>(rng.index(static_cast<std::size_t>(c.n_charts)));
            int b = static_cast<int>(rng.index(static_cast<std::size_t>(c.n_charts)));
            if (a == b) b = (a + 1) % c.n_charts;
            if (a > b) std::swap(a, b);
            CocycleEdge edge;
            edge.pair = {a, b};
            edge.component_id = parallel[edge.pair]++;
            edge.sign = rng.uniform() < 0.5 ? -1 : 1;
            edge.n_points = 1;
            c.edges.push_back(edge);
            edges.push_back({a, b, edge.sign});
        }
        const bool truth = oracle::brute_coboundary(c.n_charts, edges);
        const CoboundaryResult r = coboundary_test(c);
        if (r.is_coboundary != truth) ++mismatches;
        if (r.is_coboundary) {
            ++n_coboundary;
            bool ok = r.assignment.has_value();
            if (ok)
                for (const auto& e : edges) ok = ok && (*r.assignment)[e.a] * (*r.assignment)[e.b] == e.sign;
            if (!ok) ++bad_certificates;
        } else {
            int product = 1;
            bool ok = r.witness.has_value() && !r.witness->edges.empty();
            if (ok)
                for (auto e : r.witness->edges) product *= c.edges[e].sign;
            if (!ok || product != -1) ++bad_certificates;
        }
    }
    return {mismatches == 0 && bad_certificates == 0,
            std::to_string(kCoboundaryCases) + " multigraphs (" + std::to_string(n_coboundary) +
                " coboundaries): " + std::to_string(mismatches) + " mismatches, " + std::to_string(bad_certificates) +
                " invalid assignments or witnesses"};
}

// --- preset runs -----------------------------------------------------------

RunReport run_preset(const std::string& name, const fs::path& out_root) {
    ExperimentConfig cfg = config_from_json(read_json(fs::path(CHARTWISE_PRESET_DIR) / (name + ".json")));
    cfg.output_dir = out_root.string();
    const fs::path dir = out_root / cfg.name;
    RunReport report = run_experiment(cfg, dir);
    emit_tables(report, dir);
    emit_timing(report, dir);
    return report;
}

// Gates recomputed from the diagnostics, independent of the verdict logic.
bool passes_gates(const TrialResult& t, const Gates& g) {
    if (!(t.diagnostics.delta > g.min_delta) || !(t.diagnostics.eps_sup <= g.max_sup_error)) return false;
    for (double e : t.diagnostics.eta_lat)
        if (!(e <= g.max_chart_eta)) return false;
    for (const auto& e : t.cocycle.edges)
        if (e.degenerate) return false;
    return true;
}

std::string trial_tag(const TrialResult& t) { return "seed " + std::to_string(t.seed) + ": "; }

// --- 5 ---------------------------------------------------------------------

Outcome criterion5(const fs::path& out) {
    const RunReport r = run_preset("sphere", out);
    std::ostringstream why;
    bool pass = true;
    int converged = 0;
    for (const auto& t : r.trials) {
        if (!t.ok) {
            pass = false;
            why << trial_tag(t) << "error " << t.error << "; ";
            continue;
        }
        if (!passes_gates(t, r.config.gates)) {
            if (t.orientability.verdict != Verdict::inconclusive) pass = false;
            continue;
        }
        ++converged;
        const auto& d = t.diagnostics;
        const bool four = t.cocycle_check.per_triple.size() == 4 &&
                          std::all_of(t.cocycle_check.per_triple.begin(), t.cocycle_check.per_triple.end(),
                                      [](const auto& p) { return p.second == 1.0; });
        const bool ok = t.orientability.verdict == Verdict::orientable && d.eps_sup <= kSphereSupMax &&
                        d.delta > 0.0 && d.cocycle_error_mean <= kSphereCocycleMax && four;
        if (!ok) {
            pass = false;
            why << trial_tag(t) << to_string(t.orientability.verdict) << " eps_sup " << d.eps_sup << " delta "
                << d.delta << " cocycle " << d.cocycle_error_mean << " check " << t.cocycle_check.agreement << "; ";
        }
    }
    if (converged == 0) pass = false;
    return {pass, std::to_string(converged) + "/" + std::to_string(r.trials.size()) +
                      " converged, all orientable within bands" + (why.str().empty() ? "" : " -- " + why.str())};
}

// --- 6 ---------------------------------------------------------------------

Outcome criterion6(const fs::path& out) {
    const RunReport r = run_preset("mobius", out);
    std::ostringstream why;
    bool pass = true;
    int converged = 0;
    for (const auto& t : r.trials) {
        if (!t.ok) {
            pass = false;
            why << trial_tag(t) << "error " << t.error << "; ";
            continue;
        }
        if (t.cocycle.edges.size() != 2) {
            pass = false;
            why << trial_tag(t) << t.cocycle.edges.size() << " overlap components; ";
            continue;
        }
        if (!passes_gates(t, r.config.gates)) {
            if (t.orientability.verdict != Verdict::inconclusive) pass = false;
            continue;
        }
        ++converged;
        const bool opposite = t.cocycle.edges[0].sign * t.cocycle.edges[1].sign == -1;
        if (t.orientability.verdict != Verdict::non_orientable || !opposite) {
            pass = false;
            why << trial_tag(t) << to_string(t.orientability.verdict) << " signs " << t.cocycle.edges[0].sign << ","
                << t.cocycle.edges[1].sign << "; ";
        }
    }
    if (converged == 0) pass = false;
    return {pass, std::to_string(converged) + "/" + std::to_string(r.trials.size()) +
                      " converged, 2 components with opposite signs, non-orientable" +
                      (why.str().empty() ? "" : " -- " + why.str())};
}

// --- 7 ---------------------------------------------------------------------

Outcome criterion7() {
    std::ostringstream why;
    bool pass = true;
    auto expect = [&](const char* what, double got, double want) {
        if (!(std::abs(got - want) <= kExampleTol)) {
            pass = false;
            why << what << " = " << got << " (want " << want << "); ";
        }
    };
    RegularityBounds u;
    u.l_e = u.l_d = 1.0;
    u.d = 2;
    expect("eta_eff(exact)", eta_eff(u), 0.0);
    expect("gamma(exact)", gamma(u), 0.0);
    u.delta = 0.1;
    if (!stability_check(u).holds) {
        pass = false;
        why << "exact atlas does not hold; ";
    }
    {
        auto b = u;
        b.eta = 0.1;
        expect("eta_eff(eta=0.1)", eta_eff(b), 1.0 / 3.0);
    }
    {
        auto b = u;
        b.l_d_prime = 2.0;
        b.eps = 0.05;
        expect("eta_eff(L_Phi'=2, eps=0.05)", eta_eff(b), 0.1);
    }
    {
        auto b = u;
        b.l_e_prime = 1.0;
        b.eps = 0.01;
        expect("gamma(L_E'=1, eps=0.01)", gamma(b), 4.0 * 0.01 + 3.0 * 0.01 * 0.01);
    }
    {
        auto b = u;
        b.l_d_prime = 1.0;
        expect("l_det(d=2, L_D'=1)", l_det(b), 2.0);
    }
    {
        const auto c = stability_branches(2, 1.0, 0.1, 0.01, 0.3);
        expect("branch_gamma(2, 1, 0.1)", c.branch_gamma, 0.22);
        if (!c.holds) {
            pass = false;
            why << "0.22 < 0.3 does not hold; ";
        }
    }
    expect("nondeg(0.5, 0.5, 2)", nondeg_lower_bound(0.5, 0.5, 2), 0.0625);
    if (!mu_condition(0.05, 0.2, 1.0) || mu_condition(0.1, 0.2, 1.0)) {
        pass = false;
        why << "mu condition; ";
    }
    {
        auto b = u;
        b.eta = 1.0;
        if (stability_check(b).holds) {
            pass = false;
            why << "eta = 1 holds; ";
        }
    }

    // Monotonicity: each derived quantity is non-decreasing in every bound.
    Rng rng(107);
    using Field = double RegularityBounds::*;
    const Field fields[] = {&RegularityBounds::eps, &RegularityBounds::eta, &RegularityBounds::l_e,
                            &RegularityBounds::l_d, &RegularityBounds::l_e_prime, &RegularityBounds::l_d_prime};
    const std::function<double(const RegularityBounds&)> quantities[] = {
        [](const RegularityBounds& b) { return eta_eff(b); },
        [](const RegularityBounds& b) { return gamma(b); },
        [](const RegularityBounds& b) { return l_det(b); },
        [](const RegularityBounds& b) { return stability_check(b).branch_gamma; },
    };
    int violations = 0, flips = 0;
    for (int t = 0; t < kMonotoneTuples; ++t) {
        RegularityBounds b;
        b.l_e = rng.uniform(0.1, 3.0);
        b.l_d = rng.uniform(0.1, 3.0);
        b.l_e_prime = rng.uniform(0.0, 2.0);
        b.l_d_prime = rng.uniform(0.0, 2.0);
        b.eps = rng.uniform(0.0, 0.5);
        b.eta = rng.uniform(0.0, 0.9);
        b.delta = rng.uniform(0.0, 1.0);
        b.d = 1 + static_cast<int>(rng.index(3));
        b.on_manifold = rng.uniform() < 0.5;
        const bool holds = stability_check(b).holds;
        for (Field f : fields) {
            RegularityBounds up = b;
            up.*f += f == &RegularityBounds::eta ? 0.05 * (1.0 - b.eta) : 0.01 + 0.1 * (b.*f);
            for (const auto& q : quantities)
                if (q(up) < q(b) - 1e-12 * std::abs(q(b))) ++violations;
            // Looser bounds can only break the condition, never restore it.
            if (!holds && stability_check(up).holds) ++flips;
        }
        RegularityBounds wider = b;
        wider.delta += 0.1;
        if (holds && !stability_check(wider).holds) ++flips;
    }
    if (violations || flips) pass = false;
    return {pass, "examples " + std::string(why.str().empty() ? "exact" : why.str()) + "; " +
                      std::to_string(kMonotoneTuples) + " tuples, " + std::to_string(violations) +
                      " monotonicity violations, " + std::to_string(flips) + " verdict flips"};
}

// --- 8, 9 ------------------------------------------------------------------

Outcome property_acceptance(const std::string& preset, const fs::path& out, bool need_one) {
    const RunReport r = run_preset(preset, out);
    std::ostringstream why;
    bool pass = true;
    int gated_in = 0, correct = 0;
    for (const auto& t : r.trials) {
        if (!t.ok) {
            pass = false;
            why << trial_tag(t) << "error " << t.error << "; ";
            continue;
        }
        if (!passes_gates(t, r.config.gates)) {
            if (t.orientability.verdict != Verdict::inconclusive) {
                pass = false;
                why << trial_tag(t) << "gated out but verdict " << to_string(t.orientability.verdict) << "; ";
            }
            continue;
        }
        ++gated_in;
        const bool ok = t.cocycle_check.agreement >= kCheckMin && t.orientability.verdict == Verdict::non_orientable;
        correct += ok;
        if (!ok) {
            pass = false;
            why << trial_tag(t) << to_string(t.orientability.verdict) << " with cocycle check "
                << t.cocycle_check.agreement << "; ";
        }
    }
    if (need_one && correct == 0) {
        pass = false;
        why << "no seed passed the gates; ";
    }
    return {pass, std::to_string(gated_in) + "/" + std::to_string(r.trials.size()) + " gated in, " +
                      std::to_string(correct) + " non-orientable with check >= " + fmt("%.2f", kCheckMin) + ", " +
                      std::to_string(r.trials.size() - static_cast<std::size_t>(gated_in)) + " inconclusive" +
                      (why.str().empty() ? "" : " -- " + why.str())};
}

// --- 10 --------------------------------------------------------------------

Outcome criterion10() {
    Rng rng(110);
    int violations = 0;
    double tightest = std::numeric_limits<double>::infinity();
    for (int t = 0; t < kNondegCases; ++t) {
        const int d = 1 + static_cast<int>(rng.index(3));
        const int n_charts = 2 + static_cast<int>(rng.index(3));
        auto [cloud, cover] = synthetic::shared_cloud(rng, d, 25, n_charts);
        AtlasModel atlas;
        atlas.cover = cover;
        atlas.latent_dim = d;
        double s_e = std::numeric_limits<double>::infinity(), s_d = s_e;
        for (int c = 0; c < n_charts; ++c) {
            Eigen::VectorXd sv;
            const Eigen::MatrixXd a = oracle::random_matrix_with_singular_values(rng, d, 0.3, 3.0, &sv);
            Eigen::VectorXd b(d);
            for (int k = 0; k < d; ++k) b(k) = rng.uniform(-1.0, 1.0);
            atlas.charts.push_back(synthetic::affine_chart(a, b, c));
            s_e = std::min(s_e, sv.minCoeff());
            s_d = std::min(s_d, 1.0 / sv.maxCoeff());
        }
        std::vector<OverlapComponent> comps;
        for (int i = 0; i < n_charts; ++i)
            for (int j = i + 1; j < n_charts; ++j) comps.push_back({{i, j}, 0, cover.charts[0]});
        const double delta = nondegeneracy_gap(transition_samples(atlas, cloud, comps));
        const double bound = nondeg_lower_bound(s_e, s_d, d);
        if (delta < bound * (1.0 - 1e-12)) ++violations;
        tightest = std::min(tightest, delta / bound);
    }
    return {violations == 0, std::to_string(kNondegCases) + " linear atlases, " + std::to_string(violations) +
                                 " violations, min delta / bound " + fmt("%.4f", tightest)};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::vector<int> selected;
    std::string out_dir = (fs::temp_directory_path() / "chartwise_acceptance").string();
    app.add_option("--criterion", selected, "Criteria to run (default: all)")->check(CLI::Range(1, 10));
    app.add_option("--output-dir", out_dir, "Where preset runs write their tables");
    CLI11_PARSE(app, argc, argv);
    if (selected.empty())
        for (int c = 1; c <= 10; ++c) selected.push_back(c);

    const fs::path out(out_dir);
    const std::map<int, std::function<Outcome()>> criteria = {
        {1, criterion1},
        {2, criterion2},
        {3, criterion3},
        {4, criterion4},
        {5, [&] { return criterion5(out); }},
        {6, [&] { return criterion6(out); }},
        {7, criterion7},
        {8, [&] { return property_acceptance("klein", out, false); }},
        {9, [&] { return property_acceptance("rp2", out, true); }},
        {10, criterion10},
    };
    bool all = true;
    for (int c : selected) {
        Outcome o;
        try {
            o = criteria.at(c)();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", c, o.detail.c_str());
        std::fflush(stdout);
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
