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

#include "lyapctl/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#ifndef LYAPCTL_VERSION
#define LYAPCTL_VERSION "0.0.0"
#endif

namespace lyapctl {
namespace {

using json = nlohmann::json;

// Read-side view of one JSON object that remembers which keys were consumed,
// so leftovers can be reported as unknown.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const std::string& key) const { return j_.at(key); }
  std::string path(const std::string& key) const { return path_ + "." + key; }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return as_number(at(key), path(key));
  }
  double non_negative(const std::string& key, double fallback) {
    const double v = number(key, fallback);
    if (!(v >= 0)) throw ConfigError(path(key), "must be >= 0");
    return v;
  }
  double positive(const std::string& key, double fallback) {
    const double v = number(key, fallback);
    if (!(v > 0)) throw ConfigError(path(key), "must be > 0");
    return v;
  }
  std::uint64_t count(const std::string& key, std::uint64_t fallback, std::uint64_t min = 0) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError(path(key), "expected a non-negative integer");
    }
    const auto n = v.get<std::uint64_t>();
    if (n < min) throw ConfigError(path(key), "must be >= " + std::to_string(min));
    return n;
  }
  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    if (!at(key).is_string()) throw ConfigError(path(key), "expected a string");
    return at(key).get<std::string>();
  }
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_array()) throw ConfigError(path(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  void reject_unknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(path(it.key()), "unknown key");
    }
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
    return x;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Parses a value with a named-choice helper and rethrows with the key path.
template <typename F>
auto parse_choice(Node& node, const std::string& key, const std::string& fallback, F parse) {
  const std::string name = node.string(key, fallback);
  try {
    return parse(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(node.path(key), e.what());
  }
}

CouplingMatrix parse_lambda(const json& v, const std::string& path, int n) {
  if (!v.is_array() || static_cast<int>(v.size()) != n) {
    throw ConfigError(path, "expected an " + std::to_string(n) + " x " + std::to_string(n) + " array");
  }
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    const std::string row = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || static_cast<int>(v[i].size()) != n) {
      throw ConfigError(row, "expected " + std::to_string(n) + " entries");
    }
    for (int j = 0; j < n; ++j) m(i, j) = Node::as_number(v[i][j], row + "[" + std::to_string(j) + "]");
  }
  try {
    return CouplingMatrix(m);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

std::vector<double> parse_gamma(const json& v, const std::string& path, int n) {
  std::vector<double> out;
  if (v.is_number()) {
    out.assign(n, Node::as_number(v, path));
  } else if (v.is_array()) {
    if (static_cast<int>(v.size()) != n) throw ConfigError(path, "expected " + std::to_string(n) + " rates");
    for (int i = 0; i < n; ++i) out.push_back(Node::as_number(v[i], path + "[" + std::to_string(i) + "]"));
  } else {
    throw ConfigError(path, "expected a number or an array of numbers");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < 0) {
      throw ConfigError(v.is_array() ? path + "[" + std::to_string(i) + "]" : path, "dephasing rate must be >= 0");
    }
  }
  return out;
}

InitialState parse_initial(const json& v, const std::string& path) {
  Node node(v, path);
  InitialState s;
  s.kind = parse_choice(node, "kind", "product", parse_initial_kind);
  s.alpha = node.number("alpha", s.alpha);
  s.theta = node.number("theta_rad", s.theta);
  s.p = node.number("p", s.p);
  s.target_tau = node.number("target_tau", s.target_tau);
  if (node.has("amplitudes")) {
    const json& a = node.at("amplitudes");
    const std::string ap = node.path("amplitudes");
    if (!a.is_array()) throw ConfigError(ap, "expected an array of [re, im] pairs");
    for (std::size_t k = 0; k < a.size(); ++k) {
      const std::string ep = ap + "[" + std::to_string(k) + "]";
      if (a[k].is_number()) {
        s.amplitudes.emplace_back(Node::as_number(a[k], ep), 0.0);
      } else if (a[k].is_array() && a[k].size() == 2) {
        s.amplitudes.emplace_back(Node::as_number(a[k][0], ep + "[0]"), Node::as_number(a[k][1], ep + "[1]"));
      } else {
        throw ConfigError(ep, "expected a number or [re, im]");
      }
    }
  }
  node.reject_unknown();
  return s;
}

KickSpec parse_kick(const json& v, const std::string& path) {
  Node node(v, path);
  KickSpec k;
  k.axis = parse_choice(node, "axis", "x", parse_axis);
  k.amplitude = node.number("amplitude_rad_per_us", k.amplitude);
  k.duration = node.non_negative("duration_us", k.duration);
  node.reject_unknown();
  return k;
}

FeedbackPlacement parse_placement(std::string_view name) {
  if (name == "step") return FeedbackPlacement::Step;
  if (name == "stage") return FeedbackPlacement::Stage;
  throw std::invalid_argument("expected 'step' or 'stage', got '" + std::string(name) + "'");
}

std::string_view placement_name(FeedbackPlacement p) { return p == FeedbackPlacement::Step ? "step" : "stage"; }

PerturbationSpec parse_perturbation(const json& v, const std::string& path) {
  Node node(v, path);
  PerturbationSpec p;
  p.kind = parse_choice(node, "kind", "none", parse_perturbation_kind);
  p.epsilon = node.non_negative("epsilon", p.epsilon);
  p.cutoff = node.positive("cutoff_rad_per_us", p.cutoff);
  p.stream = node.count("stream", p.stream);
  node.reject_unknown();
  return p;
}

RobustStudy parse_robust(const json& v, const std::string& path) {
  Node node(v, path);
  RobustStudy r;
  r.ensemble_size = node.count("ensemble_size", r.ensemble_size, 1);
  r.lifetime_threshold = node.positive("lifetime_threshold", r.lifetime_threshold);
  r.pulse_window_fraction = node.positive("pulse_window_fraction", r.pulse_window_fraction);
  r.rotation_angles = node.numbers("rotation_angles_rad", r.rotation_angles);
  r.n_directions = node.count("n_directions", r.n_directions, 1);
  node.reject_unknown();
  return r;
}

PulseStudy parse_pulse(const json& v, const std::string& path) {
  Node node(v, path);
  PulseStudy p;
  p.mixture_size = node.count("mixture_size", p.mixture_size, 1);
  p.sweep_epsilons = node.numbers("sweep_epsilons", p.sweep_epsilons);
  p.sweep_realizations = node.count("sweep_realizations", p.sweep_realizations, 1);
  p.window_start = node.non_negative("window_start_us", p.window_start);
  p.window_end = node.positive("window_end_us", p.window_end);
  node.reject_unknown();
  return p;
}

ScenarioConfig parse_document(const json& doc) {
  Node root(doc, "$");
  ScenarioConfig c;
  c.scenario = parse_choice(root, "scenario", "coherent", parse_scenario);
  c.n_qubits = static_cast<int>(root.count("n_qubits", 4));
  if (c.n_qubits < kMinQubits || c.n_qubits > kMaxQubits) {
    throw ConfigError(root.path("n_qubits"),
                      "must lie in [" + std::to_string(kMinQubits) + ", " + std::to_string(kMaxQubits) + "]");
  }
  c.lambda = c.n_qubits == 4 ? CouplingMatrix::reference_four_spin() : CouplingMatrix::zeros(c.n_qubits);
  if (root.has("lambda_rad_per_us")) {
    c.lambda = parse_lambda(root.at("lambda_rad_per_us"), root.path("lambda_rad_per_us"), c.n_qubits);
  }
  c.gamma.assign(c.n_qubits, 0.0);
  if (root.has("gamma_per_us")) c.gamma = parse_gamma(root.at("gamma_per_us"), root.path("gamma_per_us"), c.n_qubits);
  if (root.has("initial")) c.initial = parse_initial(root.at("initial"), root.path("initial"));

  c.policy.h_max = root.non_negative("h_max_rad_per_us", c.policy.h_max);
  c.policy.x_tolerance = root.non_negative("x_tolerance", c.policy.x_tolerance);
  if (root.has("kick")) {
    const json& k = root.at("kick");
    c.policy.kick = k.is_null() ? std::nullopt : std::optional<KickSpec>(parse_kick(k, root.path("kick")));
  }
  c.policy.placement = parse_choice(root, "feedback_placement", "step", parse_placement);

  if (root.has("perturbation")) c.perturbation = parse_perturbation(root.at("perturbation"), root.path("perturbation"));
  c.t_end = root.positive("t_end_us", c.t_end);
  c.dt = root.positive("dt_us", c.dt);
  c.record_every = root.count("record_every", c.record_every, 1);
  c.n_realizations = root.count("n_realizations", c.n_realizations, 1);
  c.seed = root.count("seed", c.seed);
  if (root.has("robust")) c.robust = parse_robust(root.at("robust"), root.path("robust"));
  if (root.has("pulse")) c.pulse = parse_pulse(root.at("pulse"), root.path("pulse"));
  c.h_max_sweep = root.numbers("h_max_sweep_rad_per_us", c.h_max_sweep);
  root.reject_unknown();

  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("$", e.what());
  }
  return c;
}

json config_json(const ScenarioConfig& c) {
  json j;
  j["scenario"] = std::string(scenario_name(c.scenario));
  j["n_qubits"] = c.n_qubits;
  json lambda = json::array();
  for (int i = 0; i < c.n_qubits; ++i) {
    json row = json::array();
    for (int k = 0; k < c.n_qubits; ++k) row.push_back(c.lambda(i, k));
    lambda.push_back(row);
  }
  j["lambda_rad_per_us"] = lambda;
  j["gamma_per_us"] = c.gamma;

  json init;
  init["kind"] = std::string(initial_kind_name(c.initial.kind));
  init["alpha"] = c.initial.alpha;
  init["theta_rad"] = c.initial.theta;
  init["p"] = c.initial.p;
  init["target_tau"] = c.initial.target_tau;
  json amps = json::array();
  for (const cplx& a : c.initial.amplitudes) amps.push_back({a.real(), a.imag()});
  init["amplitudes"] = amps;
  j["initial"] = init;

  j["h_max_rad_per_us"] = c.policy.h_max;
  j["x_tolerance"] = c.policy.x_tolerance;
  if (c.policy.kick) {
    j["kick"] = {{"axis", std::string(1, axis_label(c.policy.kick->axis))},
                 {"amplitude_rad_per_us", c.policy.kick->amplitude},
                 {"duration_us", c.policy.kick->duration}};
  } else {
    j["kick"] = nullptr;
  }
  j["feedback_placement"] = std::string(placement_name(c.policy.placement));
  j["perturbation"] = {{"kind", std::string(perturbation_kind_name(c.perturbation.kind))},
                       {"epsilon", c.perturbation.epsilon},
                       {"cutoff_rad_per_us", c.perturbation.cutoff},
                       {"stream", c.perturbation.stream}};
  j["t_end_us"] = c.t_end;
  j["dt_us"] = c.dt;
  j["record_every"] = c.record_every;
  j["n_realizations"] = c.n_realizations;
  j["seed"] = c.seed;
  j["robust"] = {{"ensemble_size", c.robust.ensemble_size},
                 {"lifetime_threshold", c.robust.lifetime_threshold},
                 {"pulse_window_fraction", c.robust.pulse_window_fraction},
                 {"rotation_angles_rad", c.robust.rotation_angles},
                 {"n_directions", c.robust.n_directions}};
  j["pulse"] = {{"mixture_size", c.pulse.mixture_size},
                {"sweep_epsilons", c.pulse.sweep_epsilons},
                {"sweep_realizations", c.pulse.sweep_realizations},
                {"window_start_us", c.pulse.window_start},
                {"window_end_us", c.pulse.window_end}};
  j["h_max_sweep_rad_per_us"] = c.h_max_sweep;
  return j;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// Non-finite doubles become null; everything else keeps full precision.
json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

ScenarioConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  return parse_document(doc);
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ":" + e.path(), std::string(e.what()).substr(e.path().size() + 2));
  }
}

std::string emit_config(const ScenarioConfig& config) { return config_json(config).dump(2) + "\n"; }

std::string config_hash(const ScenarioConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : emit_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  const int n = traj.fields.empty() ? 0 : traj.fields.front().n_qubits();
  std::ofstream out = open_out(path);
  out << "t_us,tau";
  for (int i = 1; i <= n; ++i) out << ",h_x_" << i << ",h_y_" << i << ",h_z_" << i;
  out << ",purity\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << format_double(traj.times[k]) << ',' << format_double(traj.tau[k]);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c) out << ',' << format_double(traj.fields[k].h(i, c));
    out << ',' << format_double(traj.purity[k]) << '\n';
  }
  close_out(out, path);
}

void write_fidelity_csv(const std::filesystem::path& path, const FidelityTrack& track) {
  std::ofstream out = open_out(path);
  out << "t_us,F_i,F_2,F_3,F_f\n";
  for (std::size_t k = 0; k < track.times.size(); ++k) {
    out << format_double(track.times[k]);
    for (const auto& f : track.fidelity) out << ',' << format_double(f[k]);
    out << '\n';
  }
  close_out(out, path);
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepPoint>& points,
                     std::string_view first_column) {
  std::ofstream out = open_out(path);
  out << first_column << ",tau_bar,tau_bar_stderr\n";
  for (const SweepPoint& p : points) {
    out << format_double(p.epsilon) << ',' << format_double(p.tau_bar) << ',' << format_double(p.tau_bar_stderr)
        << '\n';
  }
  close_out(out, path);
}

void write_mixture_csv(const std::filesystem::path& path, const std::vector<double>& times,
                       const std::vector<double>& mixture_tau, const std::vector<double>& mean_single_tau) {
  std::ofstream out = open_out(path);
  out << "t_us,tau_mixture,tau_mean_single\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    out << format_double(times[k]) << ',' << format_double(mixture_tau[k]) << ',' << format_double(mean_single_tau[k])
        << '\n';
  }
  close_out(out, path);
}

void write_lifetimes_csv(const std::filesystem::path& path, const std::vector<LifetimeReport>& reports) {
  std::ofstream out = open_out(path);
  out << "run,lifetime_us,censored,decay_rate_per_us\n";
  for (std::size_t k = 0; k < reports.size(); ++k) {
    out << k << ',' << format_double(reports[k].lifetime) << ',' << (reports[k].censored ? 1 : 0) << ','
        << format_double(reports[k].decay_rate) << '\n';
  }
  close_out(out, path);
}

void write_operator_csv(const std::filesystem::path& path, const Matrix& op) {
  std::ofstream out = open_out(path);
  out << "row,col,re,im\n";
  for (Eigen::Index i = 0; i < op.rows(); ++i)
    for (Eigen::Index j = 0; j < op.cols(); ++j) {
      const cplx v = op(i, j);
      if (v == cplx(0, 0)) continue;
      out << i << ',' << j << ',' << format_double(v.real()) << ',' << format_double(v.imag()) << '\n';
    }
  close_out(out, path);
}

std::string emit_manifest(const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["config_echo"] = config_json(m.config);
  j["config_hash"] = config_hash(m.config);
  j["seed"] = m.seed;
  j["code_version"] = m.code_version;
  j["wall_time_s"] = m.wall_time;
  j["output_paths"] = m.output_paths;
  json results = json::object();
  for (const auto& [k, v] : m.results) results[k] = finite_or_null(v);
  j["results"] = results;
  if (m.abort) {
    j["abort"] = {{"step", m.abort->step}, {"time_us", m.abort->time_us}, {"message", m.abort->message}};
  } else {
    j["abort"] = nullptr;
  }
  return j.dump(2) + "\n";
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  std::ofstream out = open_out(path);
  out << emit_manifest(manifest);
  close_out(out, path);
}

std::string_view code_version() { return LYAPCTL_VERSION; }

}  // namespace lyapctl
