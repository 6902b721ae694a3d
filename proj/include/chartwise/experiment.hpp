#pragma once

// Multi-seed experiment runner: sample, cover, train, diagnose, decide, and
// write the result tables.

#include <chartwise/bundle.hpp>
#include <chartwise/cohomology.hpp>
#include <chartwise/cover.hpp>
#include <chartwise/error.hpp>
#include <chartwise/geometry.hpp>
#include <chartwise/io.hpp>
#include <chartwise/stability.hpp>
#include <chartwise/train.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace chartwise {

enum class Manifold { sphere, mobius, klein, rp2_patches };

inline std::string to_string(Manifold m) {
    switch (m) {
    case Manifold::sphere: return "sphere";
    case Manifold::mobius: return "mobius";
    case Manifold::klein: return "klein";
    case Manifold::rp2_patches: return "rp2_patches";
    }
    return "sphere";
}

inline Manifold manifold_from_string(const std::string& s) {
    if (s == "sphere") return Manifold::sphere;
    if (s == "mobius") return Manifold::mobius;
    if (s == "klein") return Manifold::klein;
    if (s == "rp2_patches" || s == "rp2") return Manifold::rp2_patches;
    throw Error(ErrorKind::parameter, "unknown manifold '" + s + "'");
}

/// Ground truth for the four test manifolds.
inline Verdict expected_verdict(Manifold m) {
    return m == Manifold::sphere ? Verdict::orientable : Verdict::non_orientable;
}

struct SamplerSpec {
    std::size_t n_points = 1000;
    double klein_m = 4.0;
    std::size_t n_angles = 75;
    std::size_t n_offsets = 75;
    double blur = 0.25;
};

struct CoverSpec {
    CoverMethod method = CoverMethod::tetrahedral;
    double eps = 0.3; // tetrahedral margin
    int axis = 1;     // slab
    double lo = -0.3;
    double hi = 0.3;
    int n_charts = 8; // landmark
    int k = 100;
    double percentile = 0.20;
    double eps_cluster = 0.5; // overlap decomposition
    int min_size = 10;
};

/// Lipschitz constants used to evaluate the stability condition against each
/// trial's measured eps_sup, eta_lat and delta.
struct StabilitySpec {
    double l_e = 1.0;
    double l_e_prime = 0.0;
    double l_d = 1.0;
    double l_d_prime = 0.0;
    bool on_manifold = false;
};

struct ExperimentConfig {
    std::string name = "experiment";
    Manifold manifold = Manifold::sphere;
    SamplerSpec sampler;
    CoverSpec cover;
    TrainConfig train;
    std::vector<std::uint64_t> seeds{42};
    Gates gates;
    double consistency = 0.95;
    std::string output_dir = "runs";
    int jobs = 1; // seeds run concurrently
    bool export_plots = true;
    bool export_models = true;
    std::optional<StabilitySpec> stability;

    void validate() const {
        detail::require(!seeds.empty(), ErrorKind::parameter, "config needs at least one seed");
        detail::require(std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() == seeds.size(),
                        ErrorKind::parameter, "duplicate seeds");
        detail::require(sampler.n_points >= 1, ErrorKind::parameter, "n_points must be positive");
        detail::require(consistency > 0.5 && consistency <= 1.0, ErrorKind::parameter,
                        "consistency must lie in (0.5, 1]");
        detail::require(jobs >= 1, ErrorKind::parameter, "jobs must be at least 1");
        detail::require(cover.eps_cluster > 0.0 && cover.min_size >= 1, ErrorKind::parameter,
                        "bad overlap decomposition settings");
        train.validate();
    }
};

// ---------------------------------------------------------------------------
// Config JSON
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    try {
        detail::read_opt(j, "name", c.name);
        c.manifold = manifold_from_string(j.at("manifold").get<std::string>());
        detail::read_opt(j, "n_points", c.sampler.n_points);
        if (j.contains("sampler")) {
            const auto& s = j["sampler"];
            detail::read_opt(s, "m", c.sampler.klein_m);
            detail::read_opt(s, "n_angles", c.sampler.n_angles);
            detail::read_opt(s, "n_offsets", c.sampler.n_offsets);
            detail::read_opt(s, "blur", c.sampler.blur);
        }
        const auto& cv = j.at("cover");
        c.cover.method = cover_method_from_string(cv.at("method").get<std::string>());
        detail::read_opt(cv, "eps", c.cover.eps);
        detail::read_opt(cv, "axis", c.cover.axis);
        detail::read_opt(cv, "lo", c.cover.lo);
        detail::read_opt(cv, "hi", c.cover.hi);
        detail::read_opt(cv, "n_charts", c.cover.n_charts);
        detail::read_opt(cv, "k", c.cover.k);
        detail::read_opt(cv, "percentile", c.cover.percentile);
        detail::read_opt(cv, "eps_cluster", c.cover.eps_cluster);
        detail::read_opt(cv, "min_size", c.cover.min_size);
        if (j.contains("train")) {
            const auto& t = j["train"];
            detail::read_opt(t, "lr", c.train.lr);
            detail::read_opt(t, "epochs", c.train.epochs);
            detail::read_opt(t, "batch_size", c.train.batch_size);
            detail::read_opt(t, "lambda_jac", c.train.lambda_jac);
            detail::read_opt(t, "eps_sv", c.train.eps_sv);
            detail::read_opt(t, "eps_thresh", c.train.eps_thresh);
            detail::read_opt(t, "max_retries", c.train.max_retries);
            detail::read_opt(t, "retry_extra_epochs", c.train.retry_extra_epochs);
            detail::read_opt(t, "hidden", c.train.hidden);
            detail::read_opt(t, "latent_dim", c.train.latent_dim);
            detail::read_opt(t, "jobs", c.train.jobs);
            detail::read_opt(t, "standardize_init", c.train.standardize_init);
        }
        detail::read_opt(j, "seeds", c.seeds);
        if (j.contains("gates")) {
            const auto& g = j["gates"];
            detail::read_opt(g, "min_delta", c.gates.min_delta);
            detail::read_opt(g, "max_sup_error", c.gates.max_sup_error);
            detail::read_opt(g, "max_chart_eta", c.gates.max_chart_eta);
        }
        detail::read_opt(j, "consistency", c.consistency);
        detail::read_opt(j, "output_dir", c.output_dir);
        detail::read_opt(j, "jobs", c.jobs);
        if (j.contains("export")) {
            detail::read_opt(j["export"], "plots", c.export_plots);
            detail::read_opt(j["export"], "models", c.export_models);
        }
        if (j.contains("stability") && !j["stability"].is_null()) {
            const auto& s = j["stability"];
            StabilitySpec spec;
            detail::read_opt(s, "L_E", spec.l_e);
            detail::read_opt(s, "L_Ep", spec.l_e_prime);
            detail::read_opt(s, "L_D", spec.l_d);
            detail::read_opt(s, "L_Dp", spec.l_d_prime);
            detail::read_opt(s, "on_manifold", spec.on_manifold);
            c.stability = spec;
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parameter, std::string("bad experiment config: ") + e.what());
    }
    c.validate();
    return c;
}

inline json config_to_json(const ExperimentConfig& c) {
    json j;
    j["name"] = c.name;
    j["manifold"] = to_string(c.manifold);
    j["n_points"] = c.sampler.n_points;
    j["sampler"] = {{"m", c.sampler.klein_m},
                    {"n_angles", c.sampler.n_angles},
                    {"n_offsets", c.sampler.n_offsets},
                    {"blur", c.sampler.blur}};
    j["cover"] = {{"method", to_string(c.cover.method)},
                  {"eps", c.cover.eps},
                  {"axis", c.cover.axis},
                  {"lo", c.cover.lo},
                  {"hi", c.cover.hi},
                  {"n_charts", c.cover.n_charts},
                  {"k", c.cover.k},
                  {"percentile", c.cover.percentile},
                  {"eps_cluster", c.cover.eps_cluster},
                  {"min_size", c.cover.min_size}};
    j["train"] = {{"lr", c.train.lr},
                  {"epochs", c.train.epochs},
                  {"batch_size", c.train.batch_size},
                  {"lambda_jac", c.train.lambda_jac},
                  {"eps_sv", c.train.eps_sv},
                  {"eps_thresh", c.train.eps_thresh},
                  {"max_retries", c.train.max_retries},
                  {"retry_extra_epochs", c.train.retry_extra_epochs},
                  {"hidden", c.train.hidden},
                  {"latent_dim", c.train.latent_dim},
                  {"standardize_init", c.train.standardize_init}};
    j["seeds"] = c.seeds;
    j["gates"] = {{"min_delta", c.gates.min_delta},
                  {"max_sup_error", c.gates.max_sup_error},
                  {"max_chart_eta", c.gates.max_chart_eta}};
    j["consistency"] = c.consistency;
    if (c.stability) {
        j["stability"] = {{"L_E", c.stability->l_e},
                          {"L_Ep", c.stability->l_e_prime},
                          {"L_D", c.stability->l_d},
                          {"L_Dp", c.stability->l_d_prime},
                          {"on_manifold", c.stability->on_manifold}};
    }
    return j;
}

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

struct TrialResult {
    std::uint64_t seed = 0;
    bool ok = false; // false: a hard error stopped the pipeline
    std::string error;
    std::string stage;

    NerveStats nerve;
    std::vector<std::size_t> chart_sizes;
    Index n_reassigned = 0;
    Index n_noise = 0;
    std::vector<std::string> warnings;

    bool training_converged = false;
    int retry_count = 0;
    std::vector<std::string> retry_actions;

    DiagnosticsReport diagnostics;
    SignCocycle cocycle;
    CocycleCheck cocycle_check;
    OrientabilityReport orientability;
    std::optional<StabilityCheck> stability;

    double runtime_seconds = 0.0;

    bool gated_in() const { return ok && orientability.verdict != Verdict::inconclusive; }
};

struct MetricSummary {
    std::string metric;
    double mean = 0.0;
    double std = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t n = 0;
};

struct RunReport {
    ExperimentConfig config;
    std::vector<TrialResult> trials;
    std::vector<MetricSummary> summary; // over gated-in trials
    std::size_t n_converged = 0;
    std::size_t n_correct = 0;
    double accuracy = 0.0; // correct / converged, 0 when nothing converged

    bool any_hard_error() const {
        return std::any_of(trials.begin(), trials.end(), [](const TrialResult& t) { return !t.ok; });
    }
};

inline PointCloud sample_manifold(const ExperimentConfig& cfg, std::uint64_t seed) {
    switch (cfg.manifold) {
    case Manifold::sphere: return sample_sphere(cfg.sampler.n_points, seed);
    case Manifold::mobius: return sample_mobius(cfg.sampler.n_points, seed);
    case Manifold::klein: return sample_klein(cfg.sampler.n_points, cfg.sampler.klein_m, seed);
    case Manifold::rp2_patches: return sample_line_patches(cfg.sampler.n_angles, cfg.sampler.n_offsets, cfg.sampler.blur);
    }
    throw Error(ErrorKind::parameter, "unknown manifold");
}

inline Cover build_cover(const CoverSpec& spec, const PointCloud& cloud, std::uint64_t seed) {
    switch (spec.method) {
    case CoverMethod::tetrahedral: return tetrahedral_cover(cloud, spec.eps);
    case CoverMethod::slab: return slab_cover(cloud, spec.axis, spec.lo, spec.hi);
    case CoverMethod::landmark: return landmark_cover(cloud, {spec.n_charts, spec.k, spec.percentile, seed});
    case CoverMethod::custom: break;
    }
    throw Error(ErrorKind::parameter, "custom covers cannot be built from a config");
}

namespace detail {

inline std::string seed_dir_name(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

/// Latent codes of every chart and, per overlap component, the source codes
/// z = E_i(x) with their images T_ji(z).
inline void export_plot_data(const AtlasModel& atlas, const PointCloud& cloud,
                             const std::vector<OverlapComponent>& components, const std::vector<TripleOverlap>& triples,
                             const std::filesystem::path& dir) {
    const int d = atlas.latent_dim;
    for (int c = 0; c < atlas.n_charts(); ++c) {
        auto out = open_output(dir / "latent" / ("chart_" + std::to_string(c) + ".csv"));
        out << "point";
        for (int k = 0; k < d; ++k) out << ",z" << k;
        const Index n_intr = cloud.intrinsic ? cloud.intrinsic->rows() : 0;
        for (Index k = 0; k < n_intr; ++k) out << ",t" << k;
        out << '\n';
        for (Index p : atlas.cover.charts[static_cast<std::size_t>(c)]) {
            const Eigen::VectorXd z = atlas.chart(c).encode(cloud.point(p));
            out << p;
            for (int k = 0; k < d; ++k) out << ',' << format_number(z(k));
            for (Index k = 0; k < n_intr; ++k) out << ',' << format_number((*cloud.intrinsic)(k, p));
            out << '\n';
        }
    }
    std::set<Index> in_triple;
    for (const auto& t : triples) in_triple.insert(t.point_indices.begin(), t.point_indices.end());
    for (const auto& comp : components) {
        const auto [i, j] = comp.pair;
        auto out = open_output(dir / "transitions" /
                               ("pair_" + std::to_string(i) + "_" + std::to_string(j) + "_c" +
                                std::to_string(comp.component_id) + ".csv"));
        out << "point,component,in_triple";
        for (int k = 0; k < d; ++k) out << ",src" << k;
        for (int k = 0; k < d; ++k) out << ",img" << k;
        out << ",det\n";
        for (Index p : comp.point_indices) {
            const Eigen::VectorXd z = atlas.chart(i).encode(cloud.point(p));
            const Eigen::VectorXd w = transition_map(atlas, i, j, z);
            out << p << ',' << comp.component_id << ',' << (in_triple.count(p) ? 1 : 0);
            for (int k = 0; k < d; ++k) out << ',' << format_number(z(k));
            for (int k = 0; k < d; ++k) out << ',' << format_number(w(k));
            out << ',' << format_number(transition_jacobian_latent(atlas, i, j, z).determinant()) << '\n';
        }
    }
}

} // namespace detail

/**
 * The full pipeline for one seed. Every stage error is caught and recorded
 * in the result; `seed_dir`, when nonempty, receives the per-seed artifacts.
 */
inline TrialResult run_trial(const ExperimentConfig& cfg, std::uint64_t seed, const std::filesystem::path& seed_dir) {
    const auto start = std::chrono::steady_clock::now();
    TrialResult r;
    r.seed = seed;
    try {
        r.stage = "sample";
        const PointCloud cloud = sample_manifold(cfg, seed);
        r.stage = "cover";
        const Cover cover = build_cover(cfg.cover, cloud, seed);
        r.nerve = nerve_stats(cover);
        for (const auto& c : cover.charts) r.chart_sizes.push_back(c.size());
        r.n_reassigned = cover.n_reassigned;
        if (r.nerve.single_chart) r.warnings.push_back("single-chart cover cannot carry a non-trivial bundle");
        r.stage = "overlaps";
        const OverlapDecomposition dec = decompose_overlaps(cloud, cover, cfg.cover.eps_cluster, cfg.cover.min_size);
        r.n_noise = dec.n_noise;
        r.warnings.insert(r.warnings.end(), dec.warnings.begin(), dec.warnings.end());
        const auto triples = triple_overlaps(cover);
        if (triples.empty()) r.warnings.push_back("no triple overlaps; cocycle check is vacuous");

        r.stage = "train";
        TrainConfig tc = cfg.train;
        tc.seed = seed;
        auto [atlas, log] = train_atlas(cloud, cover, tc);
        r.training_converged = log.converged;
        r.retry_count = log.retry_count;
        r.retry_actions = log.retry_actions;

        r.stage = "diagnostics";
        const auto samples = transition_samples(atlas, cloud, dec.components);
        r.diagnostics = diagnose(atlas, cloud, samples, triples);
        r.stage = "cocycle";
        r.cocycle = compute_sign_cocycle(samples, atlas.n_charts(), cfg.consistency);
        r.cocycle_check = verify_cocycle_condition(atlas, cloud, triples);
        r.orientability = orientability_report(r.diagnostics, r.cocycle, r.cocycle_check, cfg.gates);
        if (cfg.stability) {
            RegularityBounds b;
            b.l_e = cfg.stability->l_e;
            b.l_e_prime = cfg.stability->l_e_prime;
            b.l_d = cfg.stability->l_d;
            b.l_d_prime = cfg.stability->l_d_prime;
            b.on_manifold = cfg.stability->on_manifold;
            b.eps = r.diagnostics.eps_sup;
            b.eta = r.diagnostics.eta_lat_max;
            b.delta = r.diagnostics.delta;
            b.d = atlas.latent_dim;
            r.stability = stability_check(b);
        }

        if (!seed_dir.empty()) {
            r.stage = "export";
            std::filesystem::create_directories(seed_dir);
            write_csv(cloud, (seed_dir / "cloud.csv").string());
            write_json(seed_dir / "cover.json", cover_to_json(cover, dec.components, triples));
            {
                auto out = open_output(seed_dir / "training_log.csv");
                write_training_log_csv(log, out);
            }
            write_json(seed_dir / "training_summary.json", training_summary_json(log));
            {
                auto out = open_output(seed_dir / "transition_samples.csv");
                write_transition_samples_csv(samples, out);
            }
            if (cfg.export_models) write_json(seed_dir / "atlas.json", atlas_to_json(atlas));
            if (cfg.export_plots) detail::export_plot_data(atlas, cloud, dec.components, triples, seed_dir);
        }
        r.stage = "done";
        r.ok = true;
    } catch (const Error& e) {
        r.ok = false;
        r.error = e.what();
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = std::string("internal: ") + e.what();
    }
    r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

namespace detail {

inline MetricSummary summarize(const std::string& name, const std::vector<double>& values) {
    MetricSummary s;
    s.metric = name;
    s.n = values.size();
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(values.size()));
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    return s;
}

} // namespace detail

inline void aggregate(RunReport& report) {
    const Verdict truth = expected_verdict(report.config.manifold);
    std::vector<double> eps_sup, eps_mean, eta, delta, coc, coc_max, sigma, agree;
    report.n_converged = 0;
    report.n_correct = 0;
    for (const auto& t : report.trials) {
        if (!t.gated_in()) continue;
        ++report.n_converged;
        if (t.orientability.verdict == truth) ++report.n_correct;
        eps_sup.push_back(t.diagnostics.eps_sup);
        eps_mean.push_back(t.diagnostics.eps_mean);
        eta.push_back(t.diagnostics.eta_lat_max);
        delta.push_back(t.diagnostics.delta);
        coc.push_back(t.diagnostics.cocycle_error_mean);
        coc_max.push_back(t.diagnostics.cocycle_error_max);
        sigma.push_back(t.diagnostics.sigma_min_E);
        agree.push_back(t.cocycle_check.agreement);
    }
    report.accuracy = report.n_converged ? static_cast<double>(report.n_correct) / report.n_converged : 0.0;
    report.summary = {detail::summarize("eps_sup", eps_sup),
                      detail::summarize("eps_mean", eps_mean),
                      detail::summarize("eta_lat", eta),
                      detail::summarize("delta", delta),
                      detail::summarize("cocycle_error", coc),
                      detail::summarize("cocycle_error_max", coc_max),
                      detail::summarize("sigma_min_E", sigma),
                      detail::summarize("cocycle_agreement", agree)};
}

/// Output directory after the CHARTWISE_OUTPUT_DIR override.
inline std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg) {
    if (const char* env = std::getenv("CHARTWISE_OUTPUT_DIR"); env && *env) return std::filesystem::path(env) / cfg.name;
    return std::filesystem::path(cfg.output_dir) / cfg.name;
}

/// Runs every seed (up to cfg.jobs at once) and assembles the report in
/// seed order. Per-seed artifacts go under `out_dir/seed_<s>` when out_dir
/// is nonempty.
inline RunReport run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir = {}) {
    cfg.validate();
    RunReport report;
    report.config = cfg;
    report.trials.resize(cfg.seeds.size());
    detail::parallel_for(static_cast<int>(cfg.seeds.size()), cfg.jobs, [&](int s) {
        const auto seed = cfg.seeds[static_cast<std::size_t>(s)];
        const auto dir = out_dir.empty() ? std::filesystem::path{} : out_dir / detail::seed_dir_name(seed);
        report.trials[static_cast<std::size_t>(s)] = run_trial(cfg, seed, dir);
    });
    aggregate(report);
    return report;
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

inline json trial_to_json(const TrialResult& t, Verdict truth) {
    json j;
    j["seed"] = t.seed;
    j["status"] = t.ok ? "ok" : "error";
    j["error"] = t.error;
    j["failed_stage"] = t.ok ? "" : t.stage;
    j["nerve"] = {{"n_charts", t.nerve.n_charts},
                  {"n_pairwise", t.nerve.n_pairwise},
                  {"n_triple", t.nerve.n_triple},
                  {"single_chart", t.nerve.single_chart}};
    j["chart_sizes"] = t.chart_sizes;
    j["n_reassigned"] = t.n_reassigned;
    j["n_noise"] = t.n_noise;
    j["warnings"] = t.warnings;
    j["training"] = {{"converged", t.training_converged},
                     {"retry_count", t.retry_count},
                     {"retry_actions", t.retry_actions}};
    if (t.ok) {
        j["diagnostics"] = diagnostics_to_json(t.diagnostics);
        j["cocycle"] = cocycle_to_json(t.cocycle);
        j["cocycle_check"] = cocycle_check_to_json(t.cocycle_check);
        j["orientability"] = orientability_to_json(t.orientability);
        j["converged"] = t.gated_in();
        j["correct"] = t.gated_in() && t.orientability.verdict == truth;
        if (t.stability) {
            j["stability"] = {{"holds", t.stability->holds},
                              {"branch_gamma", t.stability->branch_gamma},
                              {"branch_det", t.stability->branch_det},
                              {"margin", t.stability->margin},
                              {"eta_below_one", t.stability->eta_below_one}};
        }
    } else {
        j["converged"] = false;
        j["correct"] = false;
    }
    return j;
}

/// report.json holds only values that are fixed by the config; wall-clock
/// data goes to timing.json.
inline json report_to_json(const RunReport& report) {
    const Verdict truth = expected_verdict(report.config.manifold);
    json j;
    j["config"] = config_to_json(report.config);
    j["expected_verdict"] = to_string(truth);
    j["trials"] = json::array();
    for (const auto& t : report.trials) j["trials"].push_back(trial_to_json(t, truth));
    json agg;
    agg["n_trials"] = report.trials.size();
    agg["n_converged"] = report.n_converged;
    agg["n_correct"] = report.n_correct;
    agg["accuracy"] = report.accuracy;
    agg["metrics"] = json::array();
    for (const auto& m : report.summary) {
        agg["metrics"].push_back(
            {{"metric", m.metric}, {"mean", m.mean}, {"std", m.std}, {"min", m.min}, {"max", m.max}, {"n", m.n}});
    }
    j["aggregate"] = agg;
    return j;
}

inline void emit_tables(const RunReport& report, const std::filesystem::path& dir) {
    const Verdict truth = expected_verdict(report.config.manifold);
    write_json(dir / "report.json", report_to_json(report));
    {
        auto out = open_output(dir / "metrics_summary.csv");
        out << "metric,mean,std,min,max,n\n";
        for (const auto& m : report.summary) {
            if (m.n == 0) continue;
            out << m.metric << ',' << format_number(m.mean) << ',' << format_number(m.std) << ','
                << format_number(m.min) << ',' << format_number(m.max) << ',' << m.n << '\n';
        }
    }
    {
        auto out = open_output(dir / "per_trial.csv");
        out << "seed,status,training_converged,converged,verdict,correct,eps_sup,eps_mean,eta_lat,delta,"
               "cocycle_error,cocycle_error_max,sigma_min_E,cocycle_agreement,n_components,n_positive,n_negative,"
               "retry_count,error\n";
        for (const auto& t : report.trials) {
            int pos = 0, neg = 0;
            for (const auto& e : t.cocycle.edges) (e.sign > 0 ? pos : neg)++;
            const auto& d = t.diagnostics;
            std::string error = t.error;
            std::replace(error.begin(), error.end(), ',', ';');
            std::replace(error.begin(), error.end(), '\n', ' ');
            out << t.seed << ',' << (t.ok ? "ok" : "error") << ',' << t.training_converged << ',' << t.gated_in()
                << ',' << (t.ok ? to_string(t.orientability.verdict) : "error") << ','
                << (t.gated_in() && t.orientability.verdict == truth) << ',' << format_number(d.eps_sup) << ','
                << format_number(d.eps_mean) << ',' << format_number(d.eta_lat_max) << ',' << format_number(d.delta)
                << ',' << format_number(d.cocycle_error_mean) << ',' << format_number(d.cocycle_error_max) << ','
                << format_number(d.sigma_min_E) << ',' << format_number(t.cocycle_check.agreement) << ','
                << t.cocycle.edges.size() << ',' << pos << ',' << neg << ',' << t.retry_count << ',' << error << '\n';
        }
    }
    {
        auto out = open_output(dir / "signs_per_component.csv");
        out << "seed,pair_i,pair_j,component,sign,agreement,n_points,degenerate\n";
        for (const auto& t : report.trials) {
            for (const auto& e : t.cocycle.edges) {
                out << t.seed << ',' << e.pair.first << ',' << e.pair.second << ',' << e.component_id << ','
                    << e.sign << ',' << format_number(e.agreement) << ',' << e.n_points << ',' << e.degenerate
                    << '\n';
            }
        }
    }
}

/// Wall-clock data kept apart from report.json so the latter is reproducible.
inline void emit_timing(const RunReport& report, const std::filesystem::path& dir) {
    json j;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    j["timestamp"] = stamp;
    j["runtime_seconds"] = json::object();
    for (const auto& t : report.trials) j["runtime_seconds"][std::to_string(t.seed)] = t.runtime_seconds;
    write_json(dir / "timing.json", j);
}

} // namespace chartwise
