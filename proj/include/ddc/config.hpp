#pragma once

#include <string>

#include "ddc/closed_loop.hpp"

namespace ddc {

// YAML experiment config. Errors (syntax, unknown keys, shapes, ranges) throw
// ConfigError carrying the 1-based line of the offending node.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path_or_preset);

// Inverse of parse_config; matrices are written with 17 significant digits.
std::string serialize_config(const ExperimentConfig& cfg);

// Shipped presets: power-generator, power-generator-zoh, f404.
std::vector<std::string> preset_names();
std::string preset_path(const std::string& name);

// Sweepable parameters: eps1, eps2, delta, tau, upsilon, noise_floor, seed.
// Throws InvalidInput for unknown names or out-of-range values.
void set_parameter(ExperimentConfig& cfg, const std::string& name, double value);

// Solver tolerance overrides from DDC_SDP_FEAS_TOL and DDC_SDP_GAP_TOL.
void apply_env_overrides(sdp::SolverSettings& s);

}  // namespace ddc
