#pragma once

// JSON and CSV serialization for covers, networks, training logs,
// transition samples and diagnostics.

#include <chartwise/bundle.hpp>
#include <chartwise/cohomology.hpp>
#include <chartwise/cover.hpp>
#include <chartwise/error.hpp>
#include <chartwise/net.hpp>
#include <chartwise/train.hpp>

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace chartwise {

using json = nlohmann::json;

/// Decimal text that parses back to the same double (17 significant digits).
inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw Error(ErrorKind::io, "cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    auto out = open_output(path);
    out << text;
    if (!out) throw Error(ErrorKind::io, "write failed: " + path.string());
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::io, path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Cover
// ---------------------------------------------------------------------------

inline CoverMethod cover_method_from_string(const std::string& s) {
    if (s == "tetrahedral") return CoverMethod::tetrahedral;
    if (s == "slab") return CoverMethod::slab;
    if (s == "landmark") return CoverMethod::landmark;
    if (s == "custom") return CoverMethod::custom;
    throw Error(ErrorKind::parameter, "unknown cover method '" + s + "'");
}

inline json cover_to_json(const Cover& cover, const std::vector<OverlapComponent>& components = {},
                          const std::vector<TripleOverlap>& triples = {}) {
    json j;
    j["method"] = to_string(cover.method);
    j["n_points"] = cover.n_points;
    j["charts"] = cover.charts;
    j["landmarks"] = cover.landmarks;
    j["components"] = json::array();
    for (const auto& c : components) {
        j["components"].push_back(
            {{"pair", {c.pair.first, c.pair.second}}, {"id", c.component_id}, {"indices", c.point_indices}});
    }
    j["triples"] = json::array();
    for (const auto& t : triples) j["triples"].push_back({{"triple", t.triple}, {"indices", t.point_indices}});
    return j;
}

struct CoverRecord {
    Cover cover;
    std::vector<OverlapComponent> components;
    std::vector<TripleOverlap> triples;
};

inline CoverRecord cover_from_json(const json& j) {
    CoverRecord r;
    try {
        r.cover.method = cover_method_from_string(j.at("method").get<std::string>());
        r.cover.n_points = j.at("n_points").get<Index>();
        r.cover.charts = j.at("charts").get<std::vector<std::vector<Index>>>();
        if (j.contains("landmarks")) r.cover.landmarks = j["landmarks"].get<std::vector<Index>>();
        for (const auto& c : j.value("components", json::array())) {
            OverlapComponent oc;
            oc.pair = {c.at("pair").at(0).get<int>(), c.at("pair").at(1).get<int>()};
            oc.component_id = c.at("id").get<int>();
            oc.point_indices = c.at("indices").get<std::vector<Index>>();
            r.components.push_back(std::move(oc));
        }
        for (const auto& t : j.value("triples", json::array())) {
            TripleOverlap to;
            to.triple = t.at("triple").get<std::array<int, 3>>();
            to.point_indices = t.at("indices").get<std::vector<Index>>();
            r.triples.push_back(std::move(to));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::io, std::string("malformed cover JSON: ") + e.what());
    }
    r.cover.validate();
    return r;
}

// ---------------------------------------------------------------------------
// Networks
// ---------------------------------------------------------------------------

inline json mlp_to_json(const Mlp& mlp) {
    json j;
    j["layer_dims"] = mlp.layer_dims;
    j["weights"] = json::array();
    j["biases"] = json::array();
    for (int l = 0; l < mlp.n_layers(); ++l) {
        const auto& w = mlp.weights[static_cast<std::size_t>(l)];
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(w.size()));
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
        j["weights"].push_back(flat);
        const auto& b = mlp.biases[static_cast<std::size_t>(l)];
        j["biases"].push_back(std::vector<double>(b.data(), b.data() + b.size()));
    }
    return j;
}

inline Mlp mlp_from_json(const json& j) {
    Mlp mlp;
    try {
        mlp.layer_dims = j.at("layer_dims").get<std::vector<int>>();
        const auto& ws = j.at("weights");
        const auto& bs = j.at("biases");
        detail::require(mlp.layer_dims.size() >= 2 && ws.size() + 1 == mlp.layer_dims.size() && bs.size() == ws.size(),
                        ErrorKind::io, "mlp JSON: layer count mismatch");
        for (std::size_t l = 0; l + 1 < mlp.layer_dims.size(); ++l) {
            const int rows = mlp.layer_dims[l + 1];
            const int cols = mlp.layer_dims[l];
            const auto flat = ws[l].get<std::vector<double>>();
            const auto bias = bs[l].get<std::vector<double>>();
            detail::require(flat.size() == static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) &&
                                bias.size() == static_cast<std::size_t>(rows),
                            ErrorKind::io, "mlp JSON: layer " + std::to_string(l) + " has the wrong size");
            Eigen::MatrixXd w(rows, cols);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) w(r, c) = flat[static_cast<std::size_t>(r) * cols + c];
            mlp.weights.push_back(std::move(w));
            mlp.biases.push_back(Eigen::Map<const Eigen::VectorXd>(bias.data(), rows));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::io, std::string("malformed mlp JSON: ") + e.what());
    }
    mlp.validate();
    return mlp;
}

inline json atlas_to_json(const AtlasModel& atlas) {
    json j;
    j["latent_dim"] = atlas.latent_dim;
    j["charts"] = json::array();
    for (const auto& c : atlas.charts) {
        j["charts"].push_back(
            {{"chart_index", c.chart_index}, {"encoder", mlp_to_json(c.encoder)}, {"decoder", mlp_to_json(c.decoder)}});
    }
    j["cover"] = cover_to_json(atlas.cover);
    return j;
}

inline AtlasModel atlas_from_json(const json& j) {
    AtlasModel atlas;
    try {
        atlas.latent_dim = j.at("latent_dim").get<int>();
        for (const auto& c : j.at("charts")) {
            ChartAutoencoder ae;
            ae.chart_index = c.at("chart_index").get<int>();
            ae.encoder = mlp_from_json(c.at("encoder"));
            ae.decoder = mlp_from_json(c.at("decoder"));
            atlas.charts.push_back(std::move(ae));
        }
        atlas.cover = cover_from_json(j.at("cover")).cover;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::io, std::string("malformed atlas JSON: ") + e.what());
    }
    atlas.validate();
    return atlas;
}

// ---------------------------------------------------------------------------
// Training log, transition samples, diagnostics
// ---------------------------------------------------------------------------

inline void write_training_log_csv(const TrainingLog& log, std::ostream& out) {
    out << "epoch,chart,loss\n";
    for (std::size_t c = 0; c < log.loss_curves.size(); ++c) {
        const auto& curve = log.loss_curves[c];
        for (std::size_t e = 0; e < curve.size(); ++e) out << e << ',' << c << ',' << format_number(curve[e]) << '\n';
    }
}

inline json training_summary_json(const TrainingLog& log) {
    json j;
    j["converged"] = log.converged;
    j["retry_count"] = log.retry_count;
    j["retry_actions"] = log.retry_actions;
    j["chart_sup"] = log.chart_sup;
    j["chart_mean"] = log.chart_mean;
    std::vector<std::size_t> epochs;
    std::vector<double> final_loss;
    for (const auto& curve : log.loss_curves) {
        epochs.push_back(curve.size());
        final_loss.push_back(curve.empty() ? 0.0 : curve.back());
    }
    j["epochs_per_chart"] = epochs;
    j["final_loss"] = final_loss;
    return j;
}

inline void write_transition_samples_csv(const std::vector<TransitionSample>& samples, std::ostream& out) {
    out << "point,pair_i,pair_j,component,det,sign\n";
    for (const auto& s : samples) {
        out << s.point_index << ',' << s.pair.first << ',' << s.pair.second << ',' << s.component_id << ','
            << format_number(s.det) << ',' << s.sign << '\n';
    }
}

inline json diagnostics_to_json(const DiagnosticsReport& d) {
    return {{"eps_sup", d.eps_sup},
            {"eps_mean", d.eps_mean},
            {"chart_eps_sup", d.chart_eps_sup},
            {"chart_eps_mean", d.chart_eps_mean},
            {"eta_lat", d.eta_lat},
            {"eta_lat_max", d.eta_lat_max},
            {"delta", d.delta},
            {"cocycle_error_mean", d.cocycle_error_mean},
            {"cocycle_error_max", d.cocycle_error_max},
            {"sigma_min_E", d.sigma_min_E}};
}

inline json cocycle_to_json(const SignCocycle& cocycle) {
    json edges = json::array();
    for (const auto& e : cocycle.edges) {
        edges.push_back({{"pair", {e.pair.first, e.pair.second}},
                         {"component", e.component_id},
                         {"sign", e.sign},
                         {"agreement", e.agreement},
                         {"n_points", e.n_points},
                         {"degenerate", e.degenerate}});
    }
    return {{"n_charts", cocycle.n_charts}, {"edges", edges}};
}

inline json coboundary_to_json(const CoboundaryResult& r) {
    json j;
    j["is_coboundary"] = r.is_coboundary;
    j["assignment"] = r.assignment ? json(*r.assignment) : json(nullptr);
    if (r.witness) {
        j["witness"] = {{"charts", r.witness->charts}, {"edges", r.witness->edges}};
    } else {
        j["witness"] = nullptr;
    }
    j["nerve_component"] = r.nerve_component;
    j["component_is_coboundary"] = r.component_is_coboundary;
    return j;
}

inline json cocycle_check_to_json(const CocycleCheck& c) {
    json per = json::array();
    for (const auto& [t, a] : c.per_triple) per.push_back({{"triple", t}, {"agreement", a}});
    return {{"agreement", c.agreement}, {"n_points", c.n_points}, {"vacuous", c.vacuous}, {"per_triple", per}};
}

inline json orientability_to_json(const OrientabilityReport& r) {
    json j;
    j["verdict"] = to_string(r.verdict);
    j["gate_failures"] = r.gate_failures;
    j["cocycle_agreement"] = r.cocycle_agreement;
    j["coboundary"] = r.coboundary ? coboundary_to_json(*r.coboundary) : json(nullptr);
    return j;
}

} // namespace chartwise
