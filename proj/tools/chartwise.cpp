// chartwise: run orientability experiments, evaluate stability bounds, and
// run the built-in oracle self-tests.

#include <chartwise/experiment.hpp>
#include <chartwise/oracle.hpp>
#include <chartwise/stability.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace chartwise;

struct RunOptions {
    std::string config;
    std::vector<std::uint64_t> seeds;
    std::optional<int> epochs;
    std::optional<int> jobs;
    std::optional<int> train_jobs;
    std::optional<std::string> output_dir;
    bool no_plots = false;
    bool no_models = false;
};

int cmd_run(const RunOptions& opt) {
    ExperimentConfig cfg = config_from_json(read_json(opt.config));
    if (!opt.seeds.empty()) cfg.seeds = opt.seeds;
    if (opt.epochs) cfg.train.epochs = *opt.epochs;
    if (opt.jobs) cfg.jobs = *opt.jobs;
    if (opt.train_jobs) cfg.train.jobs = *opt.train_jobs;
    if (opt.output_dir) cfg.output_dir = *opt.output_dir;
    if (opt.no_plots) cfg.export_plots = false;
    if (opt.no_models) cfg.export_models = false;
    cfg.validate();

    const auto dir = resolve_output_dir(cfg);
    const RunReport report = run_experiment(cfg, dir);
    emit_tables(report, dir);
    emit_timing(report, dir);

    for (const auto& t : report.trials) {
        if (!t.ok) {
            std::printf("seed %llu  ERROR  %s\n", static_cast<unsigned long long>(t.seed), t.error.c_str());
            continue;
        }
        std::printf("seed %llu  %-15s eps_sup=%.4f eta_lat=%.3f delta=%.4f cocycle=%.4f agree=%.3f\n",
                    static_cast<unsigned long long>(t.seed), to_string(t.orientability.verdict).c_str(),
                    t.diagnostics.eps_sup, t.diagnostics.eta_lat_max, t.diagnostics.delta,
                    t.diagnostics.cocycle_error_mean, t.cocycle_check.agreement);
        for (const auto& g : t.orientability.gate_failures) std::printf("    gate: %s\n", g.c_str());
    }
    std::printf("converged %zu/%zu, accuracy %.3f, output %s\n", report.n_converged, report.trials.size(),
                report.accuracy, dir.string().c_str());
    return report.any_hard_error() ? 1 : 0;
}

struct StabilityOptions {
    RegularityBounds bounds;
    std::optional<double> s_e, s_d;
    std::optional<double> mu, delta0, c0;
};

int cmd_stability(const StabilityOptions& opt) {
    const auto& b = opt.bounds;
    json out;
    out["inputs"] = {{"L_E", b.l_e},   {"L_Ep", b.l_e_prime}, {"L_D", b.l_d}, {"L_Dp", b.l_d_prime},
                     {"eps", b.eps},   {"eta", b.eta},        {"delta", b.delta}, {"d", b.d},
                     {"on_manifold", b.on_manifold}};
    const StabilityCheck check = stability_check(b);
    if (b.eta < 1.0) {
        out["eta_eff"] = eta_eff(b);
        out["gamma"] = gamma(b);
        out["simplified_branch"] = simplified_branch(b);
    } else {
        out["eta_eff"] = nullptr;
        out["gamma"] = nullptr;
        out["simplified_branch"] = nullptr;
    }
    out["l_det"] = l_det(b);
    out["stability"] = {{"holds", check.holds},
                        {"eta_below_one", check.eta_below_one},
                        {"branch_gamma", check.eta_below_one ? json(check.branch_gamma) : json(nullptr)},
                        {"branch_det", check.branch_det},
                        {"margin", check.eta_below_one ? json(check.margin) : json(nullptr)}};
    if (opt.s_e && opt.s_d) out["nondeg_lower_bound"] = nondeg_lower_bound(*opt.s_e, *opt.s_d, b.d);
    if (opt.mu || opt.delta0 || opt.c0) {
        if (!(opt.mu && opt.delta0 && opt.c0)) throw Error(ErrorKind::parameter, "--mu needs --delta0 and --C0");
        out["mu_condition"] = mu_condition(*opt.mu, *opt.delta0, *opt.c0);
    }
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_oracle(int cases, std::uint64_t seed) {
    const std::vector<SelfTestResult> results = {coboundary_self_test(cases, seed),
                                                 jacobian_self_test(std::min(cases, 100), seed + 1)};
    bool all = true;
    for (const auto& r : results) {
        std::printf("%s  %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
        all = all && r.passed;
    }
    return all ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Orientability detection with autoencoder atlases"};
    app.require_subcommand(1);

    RunOptions run_opt;
    auto* run = app.add_subcommand("run", "Run a multi-seed experiment from a JSON config");
    run->add_option("config", run_opt.config, "Experiment config (see presets/)")->required()->check(CLI::ExistingFile);
    run->add_option("--seeds", run_opt.seeds, "Override the seed list")->delimiter(',');
    run->add_option("--epochs", run_opt.epochs, "Override training epochs");
    run->add_option("--jobs", run_opt.jobs, "Seeds run concurrently");
    run->add_option("--train-jobs", run_opt.train_jobs, "Charts trained concurrently per seed");
    run->add_option("--output-dir", run_opt.output_dir, "Override output_dir (CHARTWISE_OUTPUT_DIR wins)");
    run->add_flag("--no-plots", run_opt.no_plots, "Skip latent and transition CSVs");
    run->add_flag("--no-models", run_opt.no_models, "Skip atlas weight export");

    StabilityOptions st;
    auto* stab = app.add_subcommand("stability", "Evaluate the sign-cocycle stability bounds");
    stab->add_option("--L_E", st.bounds.l_e, "Encoder Jacobian bound")->capture_default_str();
    stab->add_option("--L_Ep", st.bounds.l_e_prime, "Lipschitz constant of the encoder Jacobian")->capture_default_str();
    stab->add_option("--L_D", st.bounds.l_d, "Decoder Jacobian bound")->capture_default_str();
    stab->add_option("--L_Dp", st.bounds.l_d_prime, "Lipschitz constant of the decoder Jacobian")->capture_default_str();
    stab->add_option("--eps", st.bounds.eps, "Pointwise reconstruction error")->capture_default_str();
    stab->add_option("--eta", st.bounds.eta, "Differential reconstruction error")->capture_default_str();
    stab->add_option("--delta", st.bounds.delta, "Non-degeneracy gap")->capture_default_str();
    stab->add_option("--d", st.bounds.d, "Latent dimension")->capture_default_str();
    stab->add_flag("--on-manifold", st.bounds.on_manifold, "Use eps_tilde = eps");
    stab->add_option("--sE", st.s_e, "Min encoder singular value (non-degeneracy bound)");
    stab->add_option("--sD", st.s_d, "Min decoder singular value (non-degeneracy bound)");
    stab->add_option("--mu", st.mu, "Perturbation size for the mu-condition");
    stab->add_option("--delta0", st.delta0, "Exact-atlas gap for the mu-condition");
    stab->add_option("--C0", st.c0, "Constant C0 for the mu-condition (no default)");

    int oracle_cases = 1000;
    std::uint64_t oracle_seed = 7;
    auto* oracle = app.add_subcommand("oracle", "Brute-force coboundary and finite-difference self-tests");
    oracle->add_option("--cases", oracle_cases, "Random graphs to check")->capture_default_str();
    oracle->add_option("--seed", oracle_seed, "RNG seed")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(run_opt);
        if (*stab) return cmd_stability(st);
        if (*oracle) return cmd_oracle(oracle_cases, oracle_seed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
