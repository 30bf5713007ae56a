// qkf: state-estimation experiments with linear and quadratic Kalman updates.
//
//   qkf scalar   scalar arctan study (sample cloud, estimator curves, RMSE)
//   qkf cw       Clohessy-Wiltshire Monte Carlo campaign
//   qkf validate parse and check a config without running
#include <iostream>

#include "CLI11.hpp"

#include "qkf/kernels.hpp"
#include "qkf/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Quadratic extended/unscented Kalman filtering experiments"};
    app.require_subcommand(1);

    std::string config_path;
    qkf::CliOverrides ov;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (defaults built in)");
        cmd->add_option_function<std::string>(
            "--out", [&](const std::string& v) { ov.out_dir = v; }, "output directory");
        cmd->add_option_function<uint64_t>(
            "--seed", [&](uint64_t v) { ov.seed = v; }, "master seed");
        cmd->add_option_function<std::string>(
            "--filters", [&](const std::string& v) { ov.filters = v; },
            "comma-separated subset of ekf,ukf,qekf,qukf");
        cmd->add_option_function<double>(
            "--alpha", [&](double v) { ov.alpha = v; }, "UT spread parameter");
        cmd->add_option_function<double>(
            "--beta", [&](double v) { ov.beta = v; }, "UT constant");
        cmd->add_option_function<double>(
            "--kappa", [&](double v) { ov.kappa = v; }, "UT scaling parameter");
    };

    CLI::App* scalar = app.add_subcommand("scalar", "run the scalar arctan study");
    add_common(scalar);
    scalar->add_option_function<int>(
        "--samples", [&](int v) { ov.samples = v; }, "joint sample count");

    CLI::App* cw = app.add_subcommand("cw", "run the Clohessy-Wiltshire Monte Carlo campaign");
    add_common(cw);
    cw->add_option_function<int>(
        "--nmc", [&](int v) { ov.nmc = v; }, "Monte Carlo run count");
    cw->add_option_function<int>(
        "--threads", [&](int v) { ov.threads = v; }, "worker threads (0 = hardware)");

    CLI::App* validate = app.add_subcommand("validate", "check a config without running");
    validate->add_option("--config", config_path, "JSON config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(validate)) return qkf::cmd_validate(config_path, std::cout);

        qkf::OutputBundle bundle;
        if (app.got_subcommand(scalar)) bundle = qkf::cmd_scalar(config_path, ov);
        if (app.got_subcommand(cw)) bundle = qkf::cmd_cw(config_path, ov);

        std::cout << "kernels: " << qkf::kernels::active_name() << '\n';
        std::cout << "wrote " << bundle.dir.string() << '\n';
        for (const auto& f : bundle.files) std::cout << "  " << f << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
