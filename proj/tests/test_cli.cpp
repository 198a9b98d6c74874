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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>
#include <sys/wait.h>

#ifndef LYAPCTL_CLI_PATH
#error "LYAPCTL_CLI_PATH must point at the lyapctl binary"
#endif

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("lyapctl_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI with `args`, stderr captured to dir/stderr.txt; returns the exit code.
int cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
  const std::string cmd =
      env + " \"" LYAPCTL_CLI_PATH "\" " + args + " >\"" + (dir / "stdout.txt").string() + "\" 2>\"" +
      (dir / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

const char* kShort = R"({"t_end_us": 0.01, "record_every": 5})";

TEST(Cli, SimulateWritesOutputsAndManifest) {
  const fs::path d = scratch_dir("simulate");
  const fs::path cfg = write_config(d, kShort);
  ASSERT_EQ(cli("simulate --config " + cfg.string() + " --seed 7 --quiet --out " + (d / "out").string(), d), 0)
      << slurp(d / "stderr.txt");
  EXPECT_EQ(slurp(d / "stdout.txt"), "");
  const auto m = nlohmann::json::parse(slurp(d / "out" / "manifest.json"));
  EXPECT_EQ(m["seed"], 7);
  EXPECT_EQ(m["config_echo"]["seed"], 7);
  EXPECT_EQ(m["config_echo"]["t_end_us"], 0.01);
  EXPECT_TRUE(m["abort"].is_null());
  EXPECT_TRUE(m["wall_time_s"].is_number());
  EXPECT_FALSE(m["code_version"].get<std::string>().empty());
  ASSERT_TRUE(m["output_paths"].contains("trajectory"));
  std::ifstream in(m["output_paths"]["trajectory"].get<std::string>());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), 14);
}

TEST(Cli, ByteIdenticalAcrossRunsAndThreads) {
  const fs::path d = scratch_dir("det");
  const fs::path cfg = write_config(
      d, R"({"t_end_us": 0.01, "perturbation": {"kind": "white_noise", "epsilon": 0.1}, "n_realizations": 3})");
  const std::string base = "simulate --quiet --config " + cfg.string();
  ASSERT_EQ(cli(base + " --threads 1 --out " + (d / "a").string(), d), 0);
  ASSERT_EQ(cli(base + " --out " + (d / "b").string(), d, "LYAPCTL_THREADS=3"), 0);
  for (const char* f : {"trajectory.csv", "mixture.csv"}) {
    EXPECT_EQ(slurp(d / "a" / f), slurp(d / "b" / f)) << f;
    EXPECT_FALSE(slurp(d / "a" / f).empty());
  }
}

TEST(Cli, DtOverride) {
  const fs::path d = scratch_dir("dt");
  ASSERT_EQ(cli("simulate --quiet --dt-us 5e-5 --config " + write_config(d, kShort).string() + " --out " +
                    (d / "o").string(),
                d),
            0);
  EXPECT_EQ(nlohmann::json::parse(slurp(d / "o" / "manifest.json"))["config_echo"]["dt_us"], 5e-5);
}

TEST(Cli, UnknownFlagPrintsUsage) {
  const fs::path d = scratch_dir("flag");
  EXPECT_EQ(cli("simulate --bogus", d), 2);
  const std::string err = slurp(d / "stderr.txt");
  EXPECT_NE(err.find("--bogus"), std::string::npos);
  EXPECT_NE(err.find("Usage"), std::string::npos);
  EXPECT_EQ(cli("", d), 2);
  EXPECT_EQ(cli("frobnicate", d), 2);
}

TEST(Cli, MissingConfigNamesThePath) {
  const fs::path d = scratch_dir("missing");
  const std::string path = (d / "nowhere.json").string();
  EXPECT_EQ(cli("simulate --config " + path + " --out " + (d / "o").string(), d), 2);
  EXPECT_NE(slurp(d / "stderr.txt").find(path), std::string::npos);
}

TEST(Cli, ConfigErrors) {
  const fs::path d = scratch_dir("cfgerr");
  EXPECT_EQ(cli("simulate --config " + write_config(d, R"({"gamma_per_us": -0.5})").string(), d), 2);
  EXPECT_NE(slurp(d / "stderr.txt").find("$.gamma_per_us"), std::string::npos);
  EXPECT_EQ(cli("simulate --config " + write_config(d, R"({"pulse": {"window": 1}})").string(), d), 2);
  EXPECT_NE(slurp(d / "stderr.txt").find("$.pulse.window"), std::string::npos);
  EXPECT_EQ(cli("simulate --config " + write_config(d, kShort).string(), d, "LYAPCTL_THREADS=many"), 2);
  EXPECT_EQ(cli("sweep --config " + write_config(d, kShort).string() + " --out " + (d / "o").string(), d), 2);
}

TEST(Cli, NumericalAbortRecordsStep) {
  const fs::path d = scratch_dir("abort");
  const fs::path cfg = write_config(d, R"({"t_end_us": 0.01, "h_max_rad_per_us": 1e300, "kick": null})");
  EXPECT_EQ(cli("simulate --config " + cfg.string() + " --out " + (d / "o").string(), d), 3);
  const auto m = nlohmann::json::parse(slurp(d / "o" / "manifest.json"));
  ASSERT_TRUE(m["abort"].is_object());
  EXPECT_GE(m["abort"]["step"].get<int>(), 1);
  EXPECT_TRUE(m["abort"]["time_us"].is_number());
}

TEST(Cli, BuildOpAndHmaxSweep) {
  const fs::path d = scratch_dir("misc");
  ASSERT_EQ(cli("build-op --quiet --config " + write_config(d, R"({"n_qubits": 2, "lambda_rad_per_us": [[0,1],[1,0]],
      "gamma_per_us": 0, "initial": {"kind": "product"}})").string() + " --out " + (d / "op").string(), d), 0)
      << slurp(d / "stderr.txt");
  EXPECT_EQ(slurp(d / "op" / "operator_A.csv").rfind("row,col,re,im\n", 0), 0u);
  ASSERT_EQ(cli("sweep --quiet --config " +
                    write_config(d, R"({"t_end_us": 0.2, "h_max_sweep_rad_per_us": [0, 17],
                      "pulse": {"window_start_us": 0.1, "window_end_us": 0.2}})").string() +
                    " --out " + (d / "sw").string(),
                d),
            0)
      << slurp(d / "stderr.txt");
  const std::string sweep = slurp(d / "sw" / "sweep.csv");
  EXPECT_EQ(sweep.rfind("h_max_rad_per_us,tau_bar,tau_bar_stderr\n", 0), 0u);
  EXPECT_EQ(std::count(sweep.begin(), sweep.end(), '\n'), 3);
}

}  // namespace
