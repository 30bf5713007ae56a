#include "qkf/runner.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "qkf/csv.hpp"

namespace qkf {

using nlohmann::json;

namespace {

std::vector<FilterKind> parse_filter_list(const std::string& csv) {
    std::vector<FilterKind> out;
    std::stringstream ss(csv);
    std::string name;
    while (std::getline(ss, name, ',')) {
        if (name.empty()) continue;
        auto kind = filter_from_name(name);
        if (!kind) throw std::invalid_argument("unknown filter '" + name + "'");
        out.push_back(*kind);
    }
    if (out.empty()) throw std::invalid_argument("empty filter list");
    return out;
}

std::filesystem::path pick_out_dir(const ExperimentConfig& cfg) {
    if (!cfg.out_dir.empty()) return cfg.out_dir;
    if (const char* root = std::getenv("QKF_OUT_ROOT")) return std::filesystem::path(root) / cfg.id;
    return std::filesystem::path("qkf_out") / cfg.id;
}

void require_valid(const ExperimentConfig& cfg) {
    const auto problems = validate_config(cfg);
    if (problems.empty()) return;
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw std::invalid_argument(msg);
}

void write_json(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path.string());
    out << doc.dump(2) << '\n';
}

std::string unit_of(std::size_t component) { return component < 3 ? "km" : "km/s"; }

const char* state_label(std::size_t component) {
    static const char* labels[6] = {"x", "y", "z", "vx", "vy", "vz"};
    return component < 6 ? labels[component] : "?";
}

}  // namespace

ExperimentConfig resolve_config(const std::string& id, const std::string& config_path,
                                const CliOverrides& ov) {
    ExperimentConfig cfg =
        config_path.empty() ? default_config(id) : load_config_file(config_path);
    cfg.id = id;

    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.nmc) cfg.mc_runs = *ov.nmc;
    if (ov.samples) cfg.scalar.samples = *ov.samples;
    if (ov.out_dir) cfg.out_dir = *ov.out_dir;
    if (ov.filters) cfg.filters = parse_filter_list(*ov.filters);
    if (ov.alpha) cfg.ut.alpha = *ov.alpha;
    if (ov.beta) cfg.ut.beta = *ov.beta;
    if (ov.kappa) cfg.ut.kappa = *ov.kappa;
    if (ov.threads) cfg.threads = *ov.threads;

    cfg.scalar.seed = cfg.seed;
    cfg.scalar.ut = cfg.ut;
    cfg.scalar.filters = cfg.filters;
    return cfg;
}

OutputBundle cmd_scalar(const std::string& config_path, const CliOverrides& overrides) {
    ExperimentConfig cfg = resolve_config("scalar", config_path, overrides);
    require_valid(cfg);

    const ScalarStudyResult result = run_scalar_study(cfg.scalar);

    OutputBundle bundle;
    bundle.dir = pick_out_dir(cfg);
    std::filesystem::create_directories(bundle.dir);

    auto add = [&](const std::string& name) {
        bundle.files.push_back(name);
        return bundle.dir / name;
    };

    {
        CsvWriter w(add("samples.csv"));
        w.header({"x [-]", "y [rad]"});
        for (std::size_t i = 0; i < result.xs.size(); ++i) w.row({result.xs[i], result.ys[i]});
    }

    {
        CsvWriter w(add("estimator_curves.csv"));
        std::vector<std::string> cols{"y [rad]"};
        for (FilterKind f : cfg.filters) cols.push_back(std::string(filter_name(f)) + " [-]");
        cols.push_back("lmmse_fit [-]");
        cols.push_back("qmmse_fit [-]");
        w.header(cols);

        const auto [lo_it, hi_it] = std::minmax_element(result.ys.begin(), result.ys.end());
        const double lo = *lo_it, hi = *hi_it;
        const int grid = 201;
        for (int g = 0; g < grid; ++g) {
            const double y = lo + (hi - lo) * g / (grid - 1);
            std::vector<double> row{y};
            for (const auto& est : result.estimators) row.push_back(est.evaluate(y));
            row.push_back(result.lmmse_fit.evaluate(y));
            row.push_back(result.qmmse_fit.evaluate(y));
            w.row(row);
        }
    }

    {
        CsvWriter w(add("conditional_mean.csv"));
        w.header({"y_bin_mean [rad]", "x_mean [-]"});
        for (std::size_t b = 0; b < result.cond_mean.y_centers.size(); ++b)
            w.row({result.cond_mean.y_centers[b], result.cond_mean.x_means[b]});
    }

    {
        std::ofstream w(bundle.dir / "rmse.csv", std::ios::binary);
        bundle.files.push_back("rmse.csv");
        w << "estimator,rmse [-]\n";
        for (const auto& [name, value] : result.rmse_table)
            w << name << ',' << format_double(value) << '\n';
    }

    json summary;
    summary["scenario"] = "scalar";
    summary["seed"] = cfg.seed;
    summary["samples"] = cfg.scalar.samples;
    summary["rmse"] = result.rmse_table;
    json coeffs;
    for (std::size_t i = 0; i < result.filters.size(); ++i) {
        const auto& est = result.estimators[i];
        coeffs[filter_name(result.filters[i])] = {{"y_hat", est.y_hat},
                                                  {"b", est.b},
                                                  {"c", est.c},
                                                  {"p_yy", est.p_yy},
                                                  {"posterior_variance", est.posterior_variance}};
    }
    summary["estimators"] = coeffs;

    json checks;
    const auto have = [&](const char* k) { return result.rmse_table.count(k) > 0; };
    if (have("ekf") && have("qekf"))
        checks["qekf_matches_ekf"] =
            std::abs(result.rmse_table.at("qekf") - result.rmse_table.at("ekf")) <=
            1e-9 * std::max(1.0, result.rmse_table.at("ekf"));
    if (have("ekf") && have("ukf"))
        checks["ukf_below_ekf"] = result.rmse_table.at("ukf") < result.rmse_table.at("ekf");
    if (have("ukf") && have("qukf"))
        checks["qukf_to_ukf_rmse_ratio"] =
            result.rmse_table.at("qukf") / result.rmse_table.at("ukf");
    summary["checks"] = checks;

    json warnings = json::array();
    if (cfg.scalar.samples < 1000)
        warnings.push_back("low sample count: RMSE estimates will be noisy");
    summary["warnings"] = warnings;
    summary["config"] = to_json(cfg);

    write_json(bundle.dir / "summary.json", summary);
    bundle.files.push_back("summary.json");
    write_json(bundle.dir / "config.json", to_json(cfg));
    bundle.files.push_back("config.json");
    return bundle;
}

OutputBundle cmd_cw(const std::string& config_path, const CliOverrides& overrides) {
    ExperimentConfig cfg = resolve_config("cw", config_path, overrides);
    require_valid(cfg);

    const CwScenario cw = make_cw_scenario(cfg);
    const McReport report = monte_carlo(cw.scenario, cfg.mc_runs, cfg.seed, cfg.threads);
    const std::size_t steps = report.times.size();

    OutputBundle bundle;
    bundle.dir = pick_out_dir(cfg);
    std::filesystem::create_directories(bundle.dir);
    auto add = [&](const std::string& name) {
        bundle.files.push_back(name);
        return bundle.dir / name;
    };

    {
        CsvWriter w(add("trajectory.csv"));
        w.header({"t [s]", "x [km]", "y [km]", "z [km]", "vx [km/s]", "vy [km/s]", "vz [km/s]"});
        std::vector<double> row{0.0};
        for (double v : report.first_run.truth.initial_state) row.push_back(v);
        w.row(row);
        for (std::size_t k = 0; k < steps; ++k) {
            row.assign(1, report.first_run.truth.times[k]);
            for (double v : report.first_run.truth.states[k]) row.push_back(v);
            w.row(row);
        }
    }

    {
        CsvWriter w(add("sigma.csv"));
        std::vector<std::string> cols{"t [s]"};
        for (FilterKind f : report.filters) {
            const std::string n = filter_name(f);
            cols.push_back(n + "_sigma_pos_est [km]");
            cols.push_back(n + "_sigma_pos_eff [km]");
            cols.push_back(n + "_sigma_vel_est [km/s]");
            cols.push_back(n + "_sigma_vel_eff [km/s]");
        }
        w.header(cols);
        for (std::size_t k = 0; k < steps; ++k) {
            std::vector<double> row{report.times[k]};
            for (const auto& cs : report.series) {
                row.push_back(cs.sigma_pos_est[k]);
                row.push_back(cs.sigma_pos_eff[k]);
                row.push_back(cs.sigma_vel_est[k]);
                row.push_back(cs.sigma_vel_eff[k]);
            }
            w.row(row);
        }
    }

    {
        CsvWriter w(add("errors_run0.csv"));
        std::vector<std::string> cols{"t [s]"};
        for (FilterKind f : report.filters)
            for (std::size_t j = 0; j < 6; ++j)
                cols.push_back(std::string(filter_name(f)) + "_err_" + state_label(j) + " [" +
                               unit_of(j) + "]");
        w.header(cols);
        for (std::size_t k = 0; k < steps; ++k) {
            std::vector<double> row{report.times[k]};
            for (std::size_t fi = 0; fi < report.filters.size(); ++fi)
                for (std::size_t j = 0; j < 6; ++j)
                    row.push_back(report.first_run.traces[fi].errors[k][j]);
            w.row(row);
        }
    }

    {
        CsvWriter w(add("containment.csv"));
        std::vector<std::string> cols{"t [s]"};
        for (FilterKind f : report.filters)
            for (std::size_t j = 0; j < 6; ++j)
                cols.push_back(std::string(filter_name(f)) + "_within3sigma_" + state_label(j) +
                               " [-]");
        w.header(cols);
        for (std::size_t k = 0; k < steps; ++k) {
            std::vector<double> row{report.times[k]};
            for (const auto& cs : report.series)
                for (std::size_t j = 0; j < 6; ++j) row.push_back(cs.containment[j][k]);
            w.row(row);
        }
    }

    json summary;
    summary["scenario"] = "cw";
    summary["seed"] = cfg.seed;
    summary["runs"] = report.runs;
    summary["epochs"] = steps;

    json final_sigma;
    json rmse_table;
    for (std::size_t fi = 0; fi < report.filters.size(); ++fi) {
        const auto& cs = report.series[fi];
        const char* name = filter_name(report.filters[fi]);
        final_sigma[name] = {{"sigma_pos_est_km", cs.sigma_pos_est[steps - 1]},
                             {"sigma_pos_eff_km", cs.sigma_pos_eff[steps - 1]},
                             {"sigma_vel_est_km_s", cs.sigma_vel_est[steps - 1]},
                             {"sigma_vel_eff_km_s", cs.sigma_vel_eff[steps - 1]}};
        json comps = json::array();
        for (double v : cs.rmse_final) comps.push_back(v);
        rmse_table[name] = comps;
    }
    summary["final_epoch"] = final_sigma;
    summary["rmse_final_epoch"] = rmse_table;

    // Consistency and accuracy verdicts over the final hour of the campaign.
    const std::size_t tail = std::min<std::size_t>(steps, std::max<std::size_t>(1, steps / 3));
    json checks;
    for (std::size_t fi = 0; fi < report.filters.size(); ++fi) {
        const auto& cs = report.series[fi];
        double min_containment = 1.0;
        for (std::size_t j = 0; j < 6; ++j)
            for (std::size_t k = steps - tail; k < steps; ++k)
                min_containment = std::min(min_containment, cs.containment[j][k]);
        const double ratio = cs.sigma_pos_est[steps - 1] > 0.0
                                 ? cs.sigma_pos_eff[steps - 1] / cs.sigma_pos_est[steps - 1]
                                 : 0.0;
        checks[filter_name(report.filters[fi])] = {
            {"min_containment_final_third", min_containment},
            {"sigma_pos_eff_to_est_final", ratio}};
    }
    summary["checks"] = checks;
    summary["config"] = to_json(cfg);

    write_json(bundle.dir / "summary.json", summary);
    bundle.files.push_back("summary.json");
    write_json(bundle.dir / "config.json", to_json(cfg));
    bundle.files.push_back("config.json");
    return bundle;
}

int cmd_validate(const std::string& config_path, std::ostream& out) {
    ExperimentConfig cfg;
    try {
        cfg = config_path.empty() ? default_config("cw") : load_config_file(config_path);
    } catch (const std::exception& e) {
        out << "config parse error: " << e.what() << '\n';
        return 1;
    }
    out << to_json(cfg).dump(2) << '\n';
    const auto problems = validate_config(cfg);
    if (problems.empty()) {
        out << "config: valid\n";
        return 0;
    }
    for (const auto& p : problems) out << "violation: " << p << '\n';
    return static_cast<int>(problems.size());
}

}  // namespace qkf
