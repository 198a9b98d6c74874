// Copyright 2026 The lyapctl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lyapctl/experiments.hpp"

namespace lyapctl {

/// Schema violation in a JSON config. The message starts with the key path,
/// e.g. "$.perturbation.epsilon: must be >= 0".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::invalid_argument(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Parses a JSON document. Missing keys take the four-spin defaults; unknown
/// keys are rejected. Physical quantities use unit-suffixed names
/// (h_max_rad_per_us, gamma_per_us, dt_us, ...).
ScenarioConfig parse_config(std::string_view json_text);

/// Reads and parses a config file. A missing file raises ConfigError naming the path.
ScenarioConfig load_config(const std::filesystem::path& path);

/// Canonical JSON with every key present; parse_config(emit_config(c)) == c.
std::string emit_config(const ScenarioConfig& config);

/// FNV-1a of emit_config, as 16 hex digits.
std::string config_hash(const ScenarioConfig& config);

/// %.17g
std::string format_double(double x);

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
void write_fidelity_csv(const std::filesystem::path& path, const FidelityTrack& track);
/// Columns: first_column, tau_bar, tau_bar_stderr.
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepPoint>& points,
                     std::string_view first_column = "epsilon");
/// Columns: t_us, tau_mixture, tau_mean_single.
void write_mixture_csv(const std::filesystem::path& path, const std::vector<double>& times,
                       const std::vector<double>& mixture_tau, const std::vector<double>& mean_single_tau);
/// Columns: run, lifetime_us, censored, decay_rate_per_us.
void write_lifetimes_csv(const std::filesystem::path& path, const std::vector<LifetimeReport>& reports);
/// Non-zero entries of a dense operator: row, col, re, im.
void write_operator_csv(const std::filesystem::path& path, const Matrix& op);

struct AbortInfo {
  std::size_t step = 0;
  double time_us = 0;
  std::string message;
};

struct RunManifest {
  ScenarioConfig config;
  std::string command;
  std::uint64_t seed = 0;
  std::string code_version;
  double wall_time = 0;  // s
  std::map<std::string, std::string> output_paths;
  std::map<std::string, double> results;
  std::optional<AbortInfo> abort;
};

std::string emit_manifest(const RunManifest& manifest);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

/// Version string baked in at build time.
std::string_view code_version();

}  // namespace lyapctl
