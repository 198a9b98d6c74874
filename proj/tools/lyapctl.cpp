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

// lyapctl: command-line driver for the scenario runners.
//
// Exit codes: 0 success, 2 config or usage error, 3 numerical abort,
// 1 anything else (I/O failures).

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lyapctl/experiments.hpp"
#include "lyapctl/io.hpp"

namespace fs = std::filesystem;
using namespace lyapctl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAbort = 3;

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "lyapctl_out";
  std::optional<unsigned> threads;
  std::optional<double> dt_us;
  bool quiet = false;
};

unsigned resolve_threads(const Flags& flags) {
  if (flags.threads) {
    if (*flags.threads == 0) throw ConfigError("--threads", "must be >= 1");
    return *flags.threads;
  }
  const char* env = std::getenv("LYAPCTL_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const unsigned long n = std::strtoul(env, &end, 10);
  if (*end != '\0' || n == 0 || n > 1024) throw ConfigError("LYAPCTL_THREADS", std::string("invalid value '") + env + "'");
  return static_cast<unsigned>(n);
}

ScenarioConfig resolve_config(const Flags& flags) {
  ScenarioConfig config = flags.config_path.empty() ? parse_config("{}") : load_config(flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.dt_us) {
    if (!(*flags.dt_us > 0)) throw ConfigError("--dt-us", "must be > 0");
    config.dt = *flags.dt_us;
  }
  config.validate();
  return config;
}

void summarize(std::map<std::string, double>& results, const std::string& prefix, const Trajectory& tr) {
  if (tr.tau.empty()) return;
  results[prefix + "tau_max"] = *std::max_element(tr.tau.begin(), tr.tau.end());
  results[prefix + "tau_final"] = tr.tau.back();
  results[prefix + "tau_mean"] = time_average(tr.times, tr.tau, tr.times.front(), tr.times.back());
  if (auto t = first_crossing(tr.times, tr.tau, 0.98)) results[prefix + "t_cross_0.98_us"] = *t;
}

class Command {
 public:
  Command(std::string name, const Flags& flags) : name_(std::move(name)), flags_(flags) {}

  int run(const std::function<void(Command&)>& body) {
    const auto start = std::chrono::steady_clock::now();
    int code = kExitOk;
    try {
      manifest_.config = resolve_config(flags_);
      threads_ = resolve_threads(flags_);
      fs::create_directories(flags_.out_dir);
      manifest_.seed = manifest_.config.seed;
      body(*this);
    } catch (const NumericalAbort& e) {
      manifest_.abort = AbortInfo{e.step(), e.time(), e.what()};
      std::cerr << "lyapctl: numerical abort: " << e.what() << "\n";
      code = kExitAbort;
    } catch (const std::invalid_argument& e) {
      std::cerr << "lyapctl: config error: " << e.what() << "\n";
      return kExitConfig;
    }
    manifest_.command = name_;
    manifest_.code_version = std::string(code_version());
    manifest_.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const fs::path manifest_path = fs::path(flags_.out_dir) / "manifest.json";
    manifest_.output_paths["manifest"] = manifest_path.string();
    write_manifest(manifest_path, manifest_);
    if (!flags_.quiet && code == kExitOk) {
      std::cout << name_ << ": wrote " << manifest_.output_paths.size() << " files to " << flags_.out_dir << "\n";
      for (const auto& [k, v] : manifest_.results) std::cout << "  " << k << " = " << format_double(v) << "\n";
    }
    return code;
  }

  const ScenarioConfig& config() const { return manifest_.config; }
  RunOptions options() const {
    RunOptions o;
    o.threads = threads_;
    return o;
  }
  fs::path output(const std::string& key, const std::string& file) {
    const fs::path p = fs::path(flags_.out_dir) / file;
    manifest_.output_paths[key] = p.string();
    return p;
  }
  std::map<std::string, double>& results() { return manifest_.results; }

 private:
  std::string name_;
  const Flags& flags_;
  RunManifest manifest_;
  unsigned threads_ = 1;
};

void do_trajectory(Command& cmd) {
  const ScenarioConfig& c = cmd.config();
  const Trajectory tr = c.scenario == Scenario::Coherent ? run_coherent(c, cmd.options()) : run_dissipative(c, cmd.options());
  write_trajectory_csv(cmd.output("trajectory", "trajectory.csv"), tr);
  summarize(cmd.results(), "", tr);
  if (c.n_realizations > 1 && c.perturbation.kind != PerturbationKind::None) {
    const EnsembleAverage avg = run_perturbed_ensemble(c, c.perturbation, c.n_realizations, cmd.options());
    write_mixture_csv(cmd.output("mixture", "mixture.csv"), avg.times, avg.mixture_tau, avg.mean_single_tau);
  }
}

void do_fidelity(Command& cmd) {
  const FidelityTrack track = run_fidelity_track(cmd.config(), 32, cmd.options());
  write_trajectory_csv(cmd.output("trajectory", "trajectory.csv"), track.trajectory);
  write_fidelity_csv(cmd.output("fidelity", "fidelity.csv"), track);
  summarize(cmd.results(), "", track.trajectory);
  const char* names[4] = {"F_i", "F_2", "F_3", "F_f"};
  for (int j = 0; j < 4; ++j) {
    const auto& f = track.fidelity[j];
    const auto it = std::max_element(f.begin(), f.end());
    cmd.results()[std::string(names[j]) + "_max"] = *it;
    cmd.results()[std::string(names[j]) + "_argmax_us"] = track.times[static_cast<std::size_t>(it - f.begin())];
  }
}

void do_robust(Command& cmd) {
  const ScenarioConfig& c = cmd.config();
  const RobustStatesResult r = run_robust_states(c, cmd.options());
  write_trajectory_csv(cmd.output("trajectory", "trajectory.csv"), r.controlled);
  write_lifetimes_csv(cmd.output("lifetimes", "lifetimes.csv"), r.ensemble_lifetimes);
  auto& res = cmd.results();
  res["controlled_lifetime_us"] = r.controlled_lifetime.lifetime;
  res["controlled_censored"] = r.controlled_lifetime.censored ? 1 : 0;
  res["median_ensemble_lifetime_us"] = r.median_ensemble_lifetime;
  res["lifetime_ratio"] = r.lifetime_ratio;
  res["early_field_energy_fraction"] = r.early_field_energy_fraction;
  RngStream rng(c.seed, 0x2001);
  for (double angle : c.robust.rotation_angles) {
    const RotationSensitivity s = robustness_of_robust_state(r.robust_state, angle, c.robust.n_directions, rng, c,
                                                             cmd.options());
    res["max_rate_increase@" + format_double(angle)] = s.max_relative_increase;
  }
}

void do_sweep(Command& cmd) {
  const ScenarioConfig& c = cmd.config();
  if (c.perturbation.kind != PerturbationKind::None) {
    const auto pts = run_epsilon_sweep(c, c.perturbation.kind, cmd.options());
    write_sweep_csv(cmd.output("sweep", "sweep.csv"), pts);
    if (pts.size() >= 3) {
      const QuadraticFit fit = fit_quadratic(pts);
      for (int k = 0; k < 3; ++k) {
        cmd.results()["fit_c" + std::to_string(k)] = fit.coefficients[k];
        cmd.results()["fit_c" + std::to_string(k) + "_stderr"] = fit.stderr[k];
      }
    }
  } else if (!c.h_max_sweep.empty()) {
    write_sweep_csv(cmd.output("sweep", "sweep.csv"), run_h_max_sweep(c, cmd.options()), "h_max_rad_per_us");
  } else {
    throw ConfigError("$", "sweep needs a perturbation kind (epsilon sweep) or h_max_sweep_rad_per_us");
  }
}

void do_pulse(Command& cmd) {
  const PulseRobustnessResult r = run_pulse_robustness(cmd.config(), cmd.options());
  write_trajectory_csv(cmd.output("trajectory", "trajectory.csv"), r.perturbed);
  write_trajectory_csv(cmd.output("unperturbed", "unperturbed.csv"), r.unperturbed);
  write_mixture_csv(cmd.output("mixture", "mixture.csv"), r.mixture_times, r.mixture_tau, r.mean_single_tau);
  write_sweep_csv(cmd.output("sweep", "sweep.csv"), r.sweep);
  cmd.results()["peak_reduction"] = r.peak_reduction;
  if (r.sweep.size() >= 3) {
    const QuadraticFit fit = fit_quadratic(r.sweep);
    for (int k = 0; k < 3; ++k) {
      cmd.results()["fit_c" + std::to_string(k)] = fit.coefficients[k];
      cmd.results()["fit_c" + std::to_string(k) + "_stderr"] = fit.stderr[k];
    }
  }
}

void do_simulate(Command& cmd) {
  switch (cmd.config().scenario) {
    case Scenario::Coherent:
    case Scenario::Dissipative:
      return do_trajectory(cmd);
    case Scenario::RobustStates:
      return do_robust(cmd);
    case Scenario::PulseRobustness:
      return do_pulse(cmd);
    case Scenario::FidelityTrack:
      return do_fidelity(cmd);
  }
}

void do_build_op(Command& cmd) {
  const QubitSystem sys = cmd.config().system();
  if (sys.n_qubits() > 5) throw ConfigError("$.n_qubits", "build-op materializes A only for n_qubits <= 5");
  const ConcurrenceOperator op = build_concurrence_operator(sys);
  write_operator_csv(cmd.output("operator", "operator_A.csv"), op.a);
  cmd.results()["normalization"] = op.normalization;
  cmd.results()["n_patterns"] = static_cast<double>(op.n_patterns);
  cmd.results()["duplicate_dim"] = static_cast<double>(op.a.rows());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-local control of multi-qubit entanglement"};
  app.require_subcommand(1);

  Flags flags;
  std::function<void(Command&)> body;
  std::string name;
  const auto sub = [&](const char* n, const char* help, std::function<void(Command&)> fn) {
    CLI::App* cmd = app.add_subcommand(n, help);
    cmd->add_option("--config", flags.config_path, "JSON config file")->type_name("PATH");
    cmd->add_option("--seed", flags.seed, "RNG seed (overrides the config)")->type_name("U64");
    cmd->add_option("--out", flags.out_dir, "output directory")->type_name("DIR")->capture_default_str();
    cmd->add_option("--threads", flags.threads, "worker threads (fallback: LYAPCTL_THREADS)")->type_name("N");
    cmd->add_option("--dt-us", flags.dt_us, "RK4 step in us (overrides the config)")->type_name("F");
    cmd->add_flag("--quiet", flags.quiet, "no summary on stdout");
    cmd->callback([&, n, fn] {
      name = n;
      body = fn;
    });
  };
  sub("simulate", "run the scenario named in the config", do_simulate);
  sub("sweep", "epsilon sweep (perturbation set) or h_max sweep", do_sweep);
  sub("robust", "robust-state lifetime study", do_robust);
  sub("fidelity", "LU-maximized overlaps along a coherent run", do_fidelity);
  sub("build-op", "dump the duplicate-space operator A", do_build_op);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "lyapctl: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    return Command(name, flags).run(body);
  } catch (const std::exception& e) {
    std::cerr << "lyapctl: " << e.what() << "\n";
    return kExitFailure;
  }
}
