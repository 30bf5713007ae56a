// Experiment configuration: one JSON document with sections
// {scenario, models, noise, filters, ut, montecarlo, output}. Defaults for
// both experiments are built in; a config file and then CLI flags override
// individual fields.
#pragma once

#include <memory>
#include <string>

#include "qkf/harness.hpp"
#include "qkf/scalar_study.hpp"

#include "json.hpp"

namespace qkf {

struct CwExperimentConfig {
    double mu = 398600.4418;          // km^3/s^2 (WGS-84-era Earth constant)
    double semimajor_axis = 7000.0;   // km
    Vector initial_mean{2.0, 10.0, -3.5, 0.01, -0.005, 0.0005};  // km, km/s
    double initial_position_variance = 1e-4;  // km^2 per axis
    double initial_velocity_variance = 1e-9;  // km^2/s^2 per axis
    Vector process_noise_diag = Vector(6, 0.0);
    double cadence = 60.0;    // s
    double horizon = 10800.0; // s
    NoiseSpec noise;

    CwExperimentConfig();
    int steps() const { return static_cast<int>(horizon / cadence + 0.5); }
};

struct ExperimentConfig {
    std::string id = "cw";  // "scalar" | "cw"
    uint64_t seed = 20240718;
    ScalarStudyConfig scalar;
    CwExperimentConfig cw;
    std::vector<FilterKind> filters{FilterKind::ekf, FilterKind::ukf, FilterKind::qekf,
                                    FilterKind::qukf};
    UtParams ut;
    int mc_runs = 200;
    int threads = 0;
    std::string out_dir;
};

ExperimentConfig default_config(const std::string& id);

// Parse over the defaults: absent fields keep their default values.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config_file(const std::string& path);

// Fully resolved round-trip for the summary and the config copy.
nlohmann::json to_json(const ExperimentConfig& cfg);

// Itemized invariant violations; empty means valid.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

// CW scenario wired from a config; owns the model objects.
struct CwScenario {
    std::unique_ptr<CwDynamics> dynamics;
    std::unique_ptr<AnglesMeasurement> measurement;
    Scenario scenario;
};

CwScenario make_cw_scenario(const ExperimentConfig& cfg);

}  // namespace qkf
