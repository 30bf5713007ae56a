#include "qkf/config.hpp"

#include <cmath>
#include <fstream>

namespace qkf {

using nlohmann::json;

CwExperimentConfig::CwExperimentConfig() {
    noise.kind = NoiseSpec::Kind::three_point;
    noise.dim = 2;
    noise.support = {1e-3, -3e-3, -9e-3};
    noise.probs = {15.0 / 18.0, 2.0 / 18.0, 1.0 / 18.0};
}

ExperimentConfig default_config(const std::string& id) {
    ExperimentConfig cfg;
    cfg.id = id;
    return cfg;
}

namespace {

Vector get_vector(const json& j) { return j.get<Vector>(); }

void parse_noise(const json& j, NoiseSpec& spec) {
    if (j.contains("type")) {
        const std::string type = j.at("type").get<std::string>();
        if (type == "gaussian")
            spec.kind = NoiseSpec::Kind::gaussian;
        else if (type == "three_point")
            spec.kind = NoiseSpec::Kind::three_point;
        else
            throw std::invalid_argument("config: unknown noise type '" + type + "'");
    }
    if (j.contains("support_rad")) spec.support = get_vector(j.at("support_rad"));
    if (j.contains("probs")) spec.probs = get_vector(j.at("probs"));
    if (j.contains("weights")) {
        Vector w = get_vector(j.at("weights"));
        double total = 0.0;
        for (double v : w) total += v;
        if (total <= 0.0) throw std::invalid_argument("config: noise weights must be positive");
        for (double& v : w) v /= total;
        spec.probs = w;
    }
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    ExperimentConfig cfg;

    if (doc.contains("scenario")) {
        const json& s = doc.at("scenario");
        if (s.contains("id")) cfg.id = s.at("id").get<std::string>();
        if (s.contains("seed")) cfg.seed = s.at("seed").get<uint64_t>();
        if (s.contains("samples")) cfg.scalar.samples = s.at("samples").get<int>();
        if (s.contains("bins")) cfg.scalar.bins = s.at("bins").get<std::size_t>();
        if (s.contains("cadence_s")) cfg.cw.cadence = s.at("cadence_s").get<double>();
        if (s.contains("horizon_s")) cfg.cw.horizon = s.at("horizon_s").get<double>();
    }
    if (cfg.id != "scalar" && cfg.id != "cw")
        throw std::invalid_argument("config: scenario.id must be 'scalar' or 'cw'");

    if (doc.contains("models")) {
        const json& m = doc.at("models");
        if (m.contains("prior_mean")) cfg.scalar.prior_mean = m.at("prior_mean").get<double>();
        if (m.contains("prior_variance"))
            cfg.scalar.prior_variance = m.at("prior_variance").get<double>();
        if (m.contains("mu_km3_s2")) cfg.cw.mu = m.at("mu_km3_s2").get<double>();
        if (m.contains("semimajor_axis_km"))
            cfg.cw.semimajor_axis = m.at("semimajor_axis_km").get<double>();
        if (m.contains("initial_mean")) cfg.cw.initial_mean = get_vector(m.at("initial_mean"));
        if (m.contains("initial_position_variance_km2"))
            cfg.cw.initial_position_variance = m.at("initial_position_variance_km2").get<double>();
        if (m.contains("initial_velocity_variance_km2_s2"))
            cfg.cw.initial_velocity_variance =
                m.at("initial_velocity_variance_km2_s2").get<double>();
        if (m.contains("process_noise_diag"))
            cfg.cw.process_noise_diag = get_vector(m.at("process_noise_diag"));
    }

    if (doc.contains("noise")) {
        const json& n = doc.at("noise");
        if (cfg.id == "scalar") {
            if (n.contains("std")) cfg.scalar.noise_std = n.at("std").get<double>();
        } else {
            parse_noise(n, cfg.cw.noise);
        }
    }

    if (doc.contains("filters")) {
        cfg.filters.clear();
        for (const auto& f : doc.at("filters")) {
            const std::string name = f.get<std::string>();
            auto kind = filter_from_name(name);
            if (!kind) throw std::invalid_argument("config: unknown filter '" + name + "'");
            cfg.filters.push_back(*kind);
        }
    }

    if (doc.contains("ut")) {
        const json& u = doc.at("ut");
        if (u.contains("alpha")) cfg.ut.alpha = u.at("alpha").get<double>();
        if (u.contains("beta")) cfg.ut.beta = u.at("beta").get<double>();
        if (u.contains("kappa") && !u.at("kappa").is_null())
            cfg.ut.kappa = u.at("kappa").get<double>();
    }
    cfg.scalar.ut = cfg.ut;
    cfg.scalar.filters = cfg.filters;
    cfg.scalar.seed = cfg.seed;

    if (doc.contains("montecarlo")) {
        const json& mc = doc.at("montecarlo");
        if (mc.contains("runs")) cfg.mc_runs = mc.at("runs").get<int>();
        if (mc.contains("threads")) cfg.threads = mc.at("threads").get<int>();
    }

    if (doc.contains("output")) {
        const json& o = doc.at("output");
        if (o.contains("dir")) cfg.out_dir = o.at("dir").get<std::string>();
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    json doc = json::parse(in);
    return parse_config(doc);
}

json to_json(const ExperimentConfig& cfg) {
    json doc;
    doc["scenario"] = {{"id", cfg.id}, {"seed", cfg.seed}};
    if (cfg.id == "scalar") {
        doc["scenario"]["samples"] = cfg.scalar.samples;
        doc["scenario"]["bins"] = cfg.scalar.bins;
        doc["models"] = {{"prior_mean", cfg.scalar.prior_mean},
                         {"prior_variance", cfg.scalar.prior_variance}};
        doc["noise"] = {{"type", "gaussian"}, {"std", cfg.scalar.noise_std}};
    } else {
        doc["scenario"]["cadence_s"] = cfg.cw.cadence;
        doc["scenario"]["horizon_s"] = cfg.cw.horizon;
        doc["models"] = {{"mu_km3_s2", cfg.cw.mu},
                         {"semimajor_axis_km", cfg.cw.semimajor_axis},
                         {"initial_mean", cfg.cw.initial_mean},
                         {"initial_position_variance_km2", cfg.cw.initial_position_variance},
                         {"initial_velocity_variance_km2_s2", cfg.cw.initial_velocity_variance},
                         {"process_noise_diag", cfg.cw.process_noise_diag}};
        doc["noise"] = {{"type", cfg.cw.noise.kind == NoiseSpec::Kind::gaussian ? "gaussian"
                                                                                : "three_point"},
                        {"support_rad", cfg.cw.noise.support},
                        {"probs", cfg.cw.noise.probs}};
    }
    json filters = json::array();
    for (FilterKind f : cfg.filters) filters.push_back(filter_name(f));
    doc["filters"] = filters;
    doc["ut"] = {{"alpha", cfg.ut.alpha}, {"beta", cfg.ut.beta}};
    if (cfg.ut.kappa)
        doc["ut"]["kappa"] = *cfg.ut.kappa;
    else
        doc["ut"]["kappa"] = nullptr;
    doc["montecarlo"] = {{"runs", cfg.mc_runs}, {"threads", cfg.threads}};
    doc["output"] = {{"dir", cfg.out_dir}};
    return doc;
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> bad;

    if (cfg.filters.empty()) bad.push_back("filters: at least one filter must be selected");

    const std::size_t n = cfg.id == "scalar" ? 1 : 6;
    if (!(static_cast<double>(n) + cfg.ut.lambda(n) > 0.0))
        bad.push_back("ut: n + lambda must be positive");

    if (cfg.id == "scalar") {
        if (cfg.scalar.prior_variance < 0.0) bad.push_back("models.prior_variance must be >= 0");
        if (cfg.scalar.noise_std < 0.0) bad.push_back("noise.std must be >= 0");
        if (cfg.scalar.samples < 10) bad.push_back("scenario.samples must be >= 10");
        if (cfg.scalar.bins < 5) bad.push_back("scenario.bins must be >= 5");
        return bad;
    }

    if (!(cfg.cw.mu > 0.0)) bad.push_back("models.mu_km3_s2 must be positive");
    if (!(cfg.cw.semimajor_axis > 0.0)) bad.push_back("models.semimajor_axis_km must be positive");
    if (cfg.cw.initial_mean.size() != 6) bad.push_back("models.initial_mean must have 6 entries");
    if (cfg.cw.initial_position_variance < 0.0 || cfg.cw.initial_velocity_variance < 0.0)
        bad.push_back("models: initial covariance must be positive semidefinite");
    if (cfg.cw.process_noise_diag.size() != 6)
        bad.push_back("models.process_noise_diag must have 6 entries");
    for (double q : cfg.cw.process_noise_diag)
        if (q < 0.0) bad.push_back("models.process_noise_diag entries must be >= 0");
    if (!(cfg.cw.cadence > 0.0)) bad.push_back("scenario.cadence_s must be positive");
    if (!(cfg.cw.horizon > 0.0)) bad.push_back("scenario.horizon_s must be positive");
    if (cfg.cw.cadence > 0.0 && cfg.cw.horizon > 0.0) {
        const double k = cfg.cw.horizon / cfg.cw.cadence;
        if (std::abs(k - std::round(k)) > 1e-9)
            bad.push_back("scenario.horizon_s must be a positive multiple of cadence_s");
    }
    if (cfg.mc_runs < 1) bad.push_back("montecarlo.runs must be >= 1");

    if (cfg.cw.noise.kind == NoiseSpec::Kind::three_point) {
        if (cfg.cw.noise.support.size() != cfg.cw.noise.probs.size() ||
            cfg.cw.noise.support.empty()) {
            bad.push_back("noise: support and probability lists must match and be non-empty");
        } else {
            double psum = 0.0, mean = 0.0;
            for (std::size_t i = 0; i < cfg.cw.noise.probs.size(); ++i) {
                psum += cfg.cw.noise.probs[i];
                mean += cfg.cw.noise.probs[i] * cfg.cw.noise.support[i];
            }
            if (std::abs(psum - 1.0) > 1e-12)
                bad.push_back("noise: probabilities must sum to 1");
            if (std::abs(mean) > 1e-12)
                bad.push_back(
                    "noise: support mean must be zero (update formulas assume zero-mean noise)");
        }
    }
    return bad;
}

CwScenario make_cw_scenario(const ExperimentConfig& cfg) {
    CwScenario out;
    CwParams params{cfg.cw.mu, cfg.cw.semimajor_axis};
    out.dynamics = std::make_unique<CwDynamics>(params, Matrix::diagonal(cfg.cw.process_noise_diag));
    out.measurement = std::make_unique<AnglesMeasurement>();

    Matrix p0(6, 6);
    for (std::size_t i = 0; i < 3; ++i) p0(i, i) = cfg.cw.initial_position_variance;
    for (std::size_t i = 3; i < 6; ++i) p0(i, i) = cfg.cw.initial_velocity_variance;

    out.scenario.dynamics = out.dynamics.get();
    out.scenario.measurement = out.measurement.get();
    out.scenario.prior = GaussianBelief{cfg.cw.initial_mean, p0};
    out.scenario.noise = cfg.cw.noise;
    out.scenario.dt = cfg.cw.cadence;
    out.scenario.steps = cfg.cw.steps();
    out.scenario.filters = cfg.filters;
    out.scenario.ut = cfg.ut;
    return out;
}

}  // namespace qkf
