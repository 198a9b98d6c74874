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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "lyapctl/io.hpp"

namespace lyapctl {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("lyapctl_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string error_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, EmptyObjectIsDefault) { EXPECT_EQ(parse_config("{}"), ScenarioConfig{}); }

TEST(Config, UnitSuffixedKeys) {
  const ScenarioConfig c = parse_config(R"({"h_max_rad_per_us": 200, "dt_us": 1e-5, "gamma_per_us": 0.2})");
  EXPECT_EQ(c.policy.h_max, 200.0);
  EXPECT_EQ(c.dt, 1e-5);
  EXPECT_EQ(c.gamma, std::vector<double>(4, 0.2));
  EXPECT_EQ(parse_config(R"({"gamma_per_us": [0.1, 0.2, 0.3, 0.4]})").gamma, (std::vector<double>{0.1, 0.2, 0.3, 0.4}));
}

TEST(Config, NegativeGammaIsAnError) {
  EXPECT_THROW(parse_config(R"({"gamma_per_us": -0.1})"), ConfigError);
  EXPECT_EQ(error_of(R"({"gamma_per_us": [0, 0, -1, 0]})").rfind("$.gamma_per_us[2]", 0), 0u);
}

TEST(Config, UnknownKeysNameThePath) {
  EXPECT_EQ(error_of(R"({"h_max": 3})").rfind("$.h_max: unknown key", 0), 0u);
  EXPECT_EQ(error_of(R"({"perturbation": {"kind": "white_noise", "eps": 0.1}})").rfind("$.perturbation.eps: unknown key", 0),
            0u);
  EXPECT_EQ(error_of(R"({"robust": {"ensemble": 3}})").rfind("$.robust.ensemble: unknown key", 0), 0u);
}

TEST(Config, TypeAndValueErrors) {
  EXPECT_THROW(parse_config("[1, 2]"), ConfigError);
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_EQ(error_of(R"({"dt_us": 0})").rfind("$.dt_us", 0), 0u);
  EXPECT_EQ(error_of(R"({"scenario": "nope"})").rfind("$.scenario", 0), 0u);
  EXPECT_EQ(error_of(R"({"lambda_rad_per_us": [[0, 1], [1, 0]]})").rfind("$.lambda_rad_per_us", 0), 0u);
  EXPECT_THROW(parse_config(R"({"record_every": -3})"), ConfigError);
  // ConfigError is an invalid_argument
  EXPECT_THROW(parse_config(R"({"t_end_us": "long"})"), std::invalid_argument);
}

TEST(Config, RoundTripDefault) {
  const ScenarioConfig c;
  EXPECT_EQ(parse_config(emit_config(c)), c);
  EXPECT_EQ(emit_config(parse_config(emit_config(c))), emit_config(c));
}

TEST(Config, RoundTripVaried) {
  ScenarioConfig c;
  c.scenario = Scenario::PulseRobustness;
  c.gamma = {0.1, 0.2, 0.0, 0.4};
  c.initial.kind = InitialState::Kind::Explicit;
  c.initial.amplitudes.assign(16, cplx(0.25, 0.0));
  c.initial.amplitudes[3] = cplx(0.0, 0.25);
  c.policy.h_max = 0.1 + 0.2;  // not exactly representable in short decimal
  c.policy.placement = FeedbackPlacement::Stage;
  c.policy.kick.reset();
  c.perturbation.kind = PerturbationKind::CouplingError;
  c.perturbation.epsilon = 1.0 / 3.0;
  c.t_end = 0.7;
  c.dt = 2e-5;
  c.seed = 0xffffffffffffffffull;
  c.robust.rotation_angles = {0.1};
  c.pulse.sweep_epsilons = {0, 0.5};
  c.h_max_sweep = {10, 20};
  const ScenarioConfig back = parse_config(emit_config(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_NE(config_hash(back), config_hash(ScenarioConfig{}));
}

TEST(Config, MissingFileNamesThePath) {
  const fs::path p = fs::temp_directory_path() / "lyapctl_does_not_exist.json";
  try {
    load_config(p);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(p.string()), std::string::npos);
  }
}

TEST(Config, LoadedErrorsCarryTheFile) {
  const fs::path d = temp_dir("load");
  std::ofstream(d / "bad.json") << R"({"perturbation": {"bogus": 1}})";
  try {
    load_config(d / "bad.json");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bad.json"), std::string::npos);
    EXPECT_NE(msg.find("$.perturbation.bogus"), std::string::npos);
  }
}

TEST(Format, SeventeenDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Csv, TrajectoryHasFifteenColumnsAtFourQubits) {
  ScenarioConfig c;
  c.t_end = 0.002;
  const Trajectory tr = run_coherent(c);
  const fs::path d = temp_dir("traj");
  write_trajectory_csv(d / "a.csv", tr);
  std::ifstream in(d / "a.csv");
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), 14);
  EXPECT_EQ(header.rfind("t_us,tau", 0), 0u);
  std::size_t rows = 0;
  while (std::getline(in, row)) {
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), 14);
    ++rows;
  }
  EXPECT_EQ(rows, tr.size());
}

TEST(Csv, ByteDeterministic) {
  ScenarioConfig c;
  c.t_end = 0.01;
  c.perturbation.kind = PerturbationKind::WhiteNoise;
  c.perturbation.epsilon = 0.05;
  const fs::path d = temp_dir("det");
  write_trajectory_csv(d / "a.csv", run_coherent(c));
  write_trajectory_csv(d / "b.csv", run_coherent(c));
  EXPECT_EQ(slurp(d / "a.csv"), slurp(d / "b.csv"));
  write_sweep_csv(d / "s.csv", {{0.0, 0.5, 0.0}, {0.1, 0.25, 0.01}});
  EXPECT_EQ(slurp(d / "s.csv"), "epsilon,tau_bar,tau_bar_stderr\n0,0.5,0\n0.10000000000000001,0.25,0.01\n");
  write_sweep_csv(d / "h.csv", {{17.0, 0.5, 0.0}}, "h_max_rad_per_us");
  EXPECT_EQ(slurp(d / "h.csv").rfind("h_max_rad_per_us,", 0), 0u);
}

TEST(Manifest, Fields) {
  RunManifest m;
  m.command = "simulate";
  m.seed = 7;
  m.code_version = std::string(code_version());
  m.output_paths["trajectory"] = "out/trajectory.csv";
  m.abort = AbortInfo{12, 0.0012, "NaN"};
  const std::string text = emit_manifest(m);
  for (const char* key : {"\"config_echo\"", "\"seed\": 7", "\"code_version\"", "\"wall_time_s\"", "\"output_paths\"",
                          "\"abort\"", "\"step\": 12", "\"config_hash\""}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
  EXPECT_FALSE(code_version().empty());
}

}  // namespace
}  // namespace lyapctl
