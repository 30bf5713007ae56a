// Experiment commands behind the CLI: load a config, apply flag overrides,
// run, and write plot-ready CSVs plus a JSON summary with the RMSE table and
// built-in sanity verdicts.
#pragma once

#include <iosfwd>
#include <optional>

#include "qkf/config.hpp"

namespace qkf {

struct CliOverrides {
    std::optional<uint64_t> seed;
    std::optional<int> nmc;
    std::optional<int> samples;
    std::optional<std::string> out_dir;
    std::optional<std::string> filters;  // comma-separated
    std::optional<double> alpha, beta, kappa;
    std::optional<int> threads;
};

struct OutputBundle {
    std::filesystem::path dir;
    std::vector<std::string> files;
};

// config_path may be empty: built-in defaults are used.
ExperimentConfig resolve_config(const std::string& id, const std::string& config_path,
                                const CliOverrides& overrides);

OutputBundle cmd_scalar(const std::string& config_path, const CliOverrides& overrides);
OutputBundle cmd_cw(const std::string& config_path, const CliOverrides& overrides);

// Echo the resolved config and every invariant violation; returns the number
// of violations (0 means valid).
int cmd_validate(const std::string& config_path, std::ostream& out);

}  // namespace qkf
