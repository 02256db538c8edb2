#pragma once

// Run configuration: one JSON file per run.

#include <optional>
#include <string>
#include <vector>

#include "calabi/profile.hpp"

namespace calabi {

struct RunConfig {
  std::string name;  // file stem, used by sweeps
  BundleConfig bundle;
  KahlerClass class0;
  double rho_min = -30.0, rho_max = 30.0;
  std::size_t count = 2049;
  double s_max = 8.0;
  double cfl_sigma = 0.2;
  double tolerance = 1e-6;
  std::vector<double> checkpoints;
  std::optional<double> weight_A;  // empty means "auto"
  std::string output_directory = "out";
  bool emit_profiles = true;
  bool emit_plots_data = false;
  std::string seed_profile = "canonical";
};

/// Parses and validates. Every failure is a ConfigError naming the dotted
/// field ("class.b0", "grid.count", ...).
RunConfig parse_config(const std::string& text, const std::string& name = "config");
RunConfig load_config(const std::string& path);

}  // namespace calabi
