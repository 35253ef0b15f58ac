// Copyright 2026 The natproj Authors
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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "natproj/pipeline.hpp"
#include "natproj/natset.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
namespace nt = natproj::testing;
using natproj::Json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("natproj_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "config.json";
  natproj::write_text(p, body);
  return p;
}

const char* kForkConfig = R"({
  "dataset": {"synth": {"kind": "fork", "n_trajectories": 63, "horizon": 120,
                        "split_frame": 50, "seed": 11}},
  "clusterer": {"algorithm": "kmeans_constrained", "k": 3, "min_cluster_size": 3},
  "output": "out"})";

const char* kStopGoConfig = R"({
  "dataset": {"synth": {"kind": "stop_go_lane", "n_trajectories": 12, "horizon": 120, "seed": 2}},
  "clusterer": {"algorithm": "kmeans_constrained", "k": 2, "min_cluster_size": 3},
  "output": "out"})";

// Generates the set once per directory; returns the output directory.
fs::path generate(const fs::path& dir, const char* config, std::uint64_t seed = 3) {
  std::ostringstream log;
  natproj::GenNatsetOptions opts;
  opts.config = write_config(dir, config);
  opts.out = dir / "out";
  opts.seed = seed;
  REQUIRE(natproj::cmd_gen_natset(opts, log) == natproj::kExitOk);
  return dir / "out";
}

int run_binary(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(NATPROJ_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("gen-natset with fixed k gives k = 3 at every frame") {
  const fs::path out = generate(scratch("fixed_k"), kForkConfig);
  CHECK(fs::exists(out / "natset.json"));
  CHECK(fs::exists(out / "trajectories.csv"));
  const auto rows = read_rows(out / "metrics.csv");
  REQUIRE(rows.size() == 121);
  for (const auto& r : rows) CHECK(r[1] == "3");
  const Json set = natproj::read_json(out / "natset.json");
  CHECK(set["provenance"]["clusterer"]["seed"] == 3);
  CHECK(set["provenance"]["tool"]["version"] == std::string(natproj::kVersion));
}

TEST_CASE("density clusterer on the fork is unimodal before the split and multimodal after") {
  const fs::path dir = scratch("density");
  natproj::GenNatsetOptions opts;
  opts.config = write_config(dir, R"({
    "dataset": {"synth": {"kind": "fork", "n_trajectories": 63, "seed": 11}},
    "clusterer": {"algorithm": "density", "epsilon": 2, "min_cluster_size": 3},
    "output": "out"})");
  std::ostringstream log;
  REQUIRE(natproj::cmd_gen_natset(opts, log) == natproj::kExitOk);
  const auto rows = read_rows(dir / "out" / "metrics.csv");
  REQUIRE(rows.size() == 301);
  const int split = natproj::ScenarioSpec{}.split_frame;
  for (int t = 0; t < split; ++t) CHECK(rows[static_cast<std::size_t>(t)][1] == "1");
  CHECK(rows.back()[1] == "3");
}

TEST_CASE("gen-natset reruns are byte-identical and independent of the output path") {
  const fs::path a = generate(scratch("rerun_a"), kForkConfig, 9);
  const fs::path b = generate(scratch("rerun_b"), kForkConfig, 9);
  for (const char* f : {"natset.json", "metrics.csv", "trajectories.csv"})
    CHECK(slurp(a / f) == slurp(b / f));
  const fs::path c = generate(scratch("rerun_c"), kForkConfig, 10);
  CHECK(slurp(a / "natset.json") != slurp(c / "natset.json"));
}

TEST_CASE("gen-natset reads a csv dataset relative to the config") {
  const fs::path src = generate(scratch("csv_src"), kStopGoConfig);
  const fs::path dir = scratch("csv_dst");
  fs::copy_file(src / "trajectories.csv", dir / "data.csv");
  natproj::GenNatsetOptions opts;
  opts.config = write_config(dir, R"({
    "dataset": {"csv": "data.csv"},
    "clusterer": {"algorithm": "kmeans_constrained", "k": 2, "min_cluster_size": 3, "seed": 3},
    "output": "out"})");
  opts.out = dir / "out";
  std::ostringstream log;
  REQUIRE(natproj::cmd_gen_natset(opts, log) == natproj::kExitOk);
  const auto x = natproj::natset_from_json(natproj::read_json(src / "natset.json"));
  const auto y = natproj::natset_from_json(natproj::read_json(dir / "out" / "natset.json"));
  REQUIRE(x.horizon() == y.horizon());
  for (std::size_t t = 0; t < x.subsets.size(); ++t)
    for (std::size_t j = 0; j < x.subsets[t].polytopes.size(); ++j)
      CHECK(x.subsets[t].polytopes[j].vertices == y.subsets[t].polytopes[j].vertices);
}

TEST_CASE("gen-natset exit codes") {
  const fs::path dir = scratch("gen_errors");
  std::ostringstream log;
  natproj::GenNatsetOptions opts;

  opts.config = dir / "absent.json";
  CHECK(natproj::cmd_gen_natset(opts, log) == natproj::kExitConfig);
  CHECK(log.str().find("absent.json") != std::string::npos);

  opts.config = write_config(dir, R"({"dataset": {"csv": "x.csv", "synth": {}}})");
  CHECK(natproj::cmd_gen_natset(opts, log) == natproj::kExitConfig);

  opts.config = write_config(dir, R"({"dataset": {"csv": "nowhere.csv"}})");
  log.str("");
  CHECK(natproj::cmd_gen_natset(opts, log) == natproj::kExitConfig);
  CHECK(log.str().find("nowhere.csv") != std::string::npos);

  opts.config = write_config(dir, R"({
    "dataset": {"synth": {"kind": "curved_road", "n_trajectories": 10, "horizon": 40}},
    "filter": {"start": {"shape": "circle", "center": [1000, 1000], "radius": 1}},
    "output": "out"})");
  log.str("");
  CHECK(natproj::cmd_gen_natset(opts, log) == natproj::kExitGeneration);
  CHECK(log.str().find("stage filter") != std::string::npos);
}

TEST_CASE("project flags are accepted and echoed into the result") {
  const fs::path dir = scratch("project_flags");
  const fs::path out = generate(dir, kForkConfig);
  const fs::path res = dir / "res";
  const std::string args = "project --natset " + (out / "natset.json").string() + " --traj " +
                           (out / "trajectories.csv").string() +
                           " --index 5 --gamma 0.1 --frame-skip 2 --downsample 2 --mip-gap 1e-6 "
                           "--time-limit 60 --out " +
                           res.string();
  REQUIRE(run_binary(args, dir / "log.txt") == natproj::kExitOk);
  const Json j = natproj::read_json(res / "projection.json");
  CHECK(j["status"] == "Optimal");
  CHECK(j["config"]["gamma"] == 0.1);
  CHECK(j["config"]["frame_skip"] == 2);
  CHECK(j["config"]["downsample"] == 2);
  CHECK(j["config"]["mip_gap"] == 1e-6);
  CHECK(j["config"]["time_limit"] == 60.0);
  CHECK(j["provenance"]["config_hash"] == natproj::content_hash(j["config"].dump()));
  CHECK(j["provenance"]["source"]["index"] == 5);
  const auto rows = read_rows(res / "distances.csv");
  REQUIRE(rows.size() == 61);
  CHECK(rows[0][2] == "0");
  CHECK(rows[10][1] == "20");
}

TEST_CASE("project with a missing natset exits 2 naming the path") {
  const fs::path dir = scratch("project_missing");
  CHECK(run_binary("project --natset " + (dir / "gone.json").string() + " --traj x.csv",
                   dir / "log.txt") == natproj::kExitConfig);
  CHECK(slurp(dir / "log.txt").find("gone.json") != std::string::npos);
  CHECK(run_binary("project --traj x.csv", dir / "log2.txt") == natproj::kExitConfig);
  CHECK(run_binary("no-such-command", dir / "log3.txt") == natproj::kExitConfig);
}

TEST_CASE("self-projection through the command costs no more than the own control effort") {
  const fs::path dir = scratch("self");
  const fs::path out = generate(dir, kStopGoConfig);
  const auto trajs = natproj::load_csv(out / "trajectories.csv", natproj::kDatasetPeriod);
  const auto dyn = natproj::double_integrator(natproj::kDatasetPeriod);
  for (std::size_t i = 0; i < 3; ++i) {
    natproj::ProjectOptions opts;
    opts.natset = out / "natset.json";
    opts.traj = out / "trajectories.csv";
    opts.index = i;
    opts.flags.frame_skip = 3;
    opts.out = dir / ("res" + std::to_string(i));
    std::ostringstream log;
    REQUIRE(natproj::cmd_project(opts, log) == natproj::kExitOk);
    const double own = 0.1 * natproj::recover_controls(dyn, trajs[i]).controls.squaredNorm();
    const double obj = natproj::read_json(opts.out / "projection.json")["objective"].get<double>();
    CHECK(obj <= own + 1e-6);
  }
}

TEST_CASE("project from a synthetic scenario file") {
  const fs::path dir = scratch("project_synth");
  const fs::path out = generate(dir, kStopGoConfig);
  natproj::write_text(dir / "spec.json",
                      R"({"kind": "stop_go_lane", "n_trajectories": 12, "horizon": 120, "seed": 2})");
  natproj::ProjectOptions opts;
  opts.natset = out / "natset.json";
  opts.synth = dir / "spec.json";
  opts.seed = 3;
  opts.flags.frame_skip = 6;
  opts.out = dir / "res";
  std::ostringstream log;
  CHECK(natproj::cmd_project(opts, log) == natproj::kExitOk);
  const Json j = natproj::read_json(dir / "res" / "projection.json");
  CHECK(j["provenance"]["source"]["synth"]["seed"] == 3);

  opts.index = 12;
  CHECK(natproj::cmd_project(opts, log) == natproj::kExitConfig);
}

TEST_CASE("unreachable start exits 4 citing the feasibility condition") {
  const fs::path dir = scratch("infeasible");
  const fs::path out = generate(dir, kStopGoConfig);
  auto trajs = natproj::load_csv(out / "trajectories.csv", natproj::kDatasetPeriod);
  trajs.resize(1);
  trajs[0].states.row(1).array() += 500.0;
  natproj::write_csv(dir / "fast.csv", trajs);
  natproj::ProjectOptions opts;
  opts.natset = out / "natset.json";
  opts.traj = dir / "fast.csv";
  opts.out = dir / "res";
  std::ostringstream log;
  CHECK(natproj::cmd_project(opts, log) == natproj::kExitInfeasible);
  CHECK(log.str().find("dynamically feasible trajectory") != std::string::npos);
  CHECK(natproj::read_json(dir / "res" / "projection.json")["status"] == "Infeasible");
}

TEST_CASE("node limit exits 5 and still writes the incumbent") {
  const fs::path dir = scratch("limit");
  const fs::path out = generate(dir, kForkConfig);
  natproj::ProjectOptions opts;
  opts.natset = out / "natset.json";
  opts.traj = out / "trajectories.csv";
  opts.index = 1;
  opts.flags.downsample = 2;
  opts.flags.node_limit = 1;
  opts.out = dir / "res";
  std::ostringstream log;
  REQUIRE(natproj::cmd_project(opts, log) == natproj::kExitLimit);
  const Json j = natproj::read_json(dir / "res" / "projection.json");
  CHECK(j["status"] == "Limit");
  CHECK(j["states"].size() == 61);
  CHECK(read_rows(dir / "res" / "distances.csv").size() == 61);
}

TEST_CASE("export-plot writes polygons that re-parse as valid polytopes") {
  const fs::path dir = scratch("plot");
  const fs::path out = generate(dir, kForkConfig);
  natproj::ProjectOptions p;
  p.natset = out / "natset.json";
  p.traj = out / "trajectories.csv";
  p.flags.frame_skip = 8;
  p.out = dir / "res";
  std::ostringstream log;
  REQUIRE(natproj::cmd_project(p, log) == natproj::kExitOk);

  natproj::ExportPlotOptions opts;
  opts.natset = out / "natset.json";
  opts.frames = {96, 120};
  opts.results = {dir / "res" / "projection.json"};
  opts.out = dir / "plot";
  REQUIRE(natproj::cmd_export_plot(opts, log) == natproj::kExitOk);
  for (long t : opts.frames) {
    const Json j = natproj::read_json(dir / "plot" / ("frame_" + std::to_string(t) + ".json"));
    CHECK(j["t"] == t);
    REQUIRE(j["polytopes"].size() == 3);
    for (const Json& pj : j["polytopes"]) {
      const auto poly = natproj::polytope_from_json(pj);
      CHECK(nt::polytope_invariants(poly.vertices, poly.G, poly.h));
    }
  }
  const Json tr = natproj::read_json(dir / "plot" / "trajectories.json");
  REQUIRE(tr["trajectories"].size() == 1);
  CHECK(tr["trajectories"][0]["points"].size() == 121);
  CHECK(tr["trajectories"][0]["points"][0].size() == 2);
}

TEST_CASE("export-plot edge cases") {
  const fs::path dir = scratch("plot_edges");
  const fs::path out = generate(dir, kStopGoConfig);
  std::ostringstream log;
  natproj::ExportPlotOptions opts;
  opts.natset = out / "natset.json";
  opts.out = dir / "empty";
  CHECK(natproj::cmd_export_plot(opts, log) == natproj::kExitOk);
  CHECK_FALSE(fs::exists(dir / "empty"));

  opts.frames = {121};
  CHECK(natproj::cmd_export_plot(opts, log) == natproj::kExitConfig);
  opts.frames = {-1};
  CHECK(natproj::cmd_export_plot(opts, log) == natproj::kExitConfig);
}

TEST_CASE("benchmark sweep rows, runtimes and monotone objectives") {
  const fs::path dir = scratch("bench");
  const fs::path out = generate(dir, kStopGoConfig);
  natproj::BenchmarkOptions opts;
  opts.natset = out / "natset.json";
  opts.trajs = {out / "trajectories.csv"};
  opts.limit = 3;
  opts.frame_skips = {1, 2, 4, 8};
  opts.downsamples = {2};
  opts.out = dir / "bench";
  std::ostringstream log;
  REQUIRE(natproj::cmd_benchmark(opts, log) == natproj::kExitOk);
  const auto rows = read_rows(dir / "bench" / "benchmark.csv");
  REQUIRE(rows.size() == 12);
  std::map<std::string, std::vector<double>> objectives;
  for (const auto& r : rows) {
    CHECK(r[1] == "kmeans_constrained-2");
    CHECK(r[2] == "2");
    CHECK(std::stod(r[5]) > 0);
    objectives[r[0]].push_back(std::stod(r[6]));
  }
  REQUIRE(objectives.size() == 3);
  for (const auto& [id, obj] : objectives) {
    REQUIRE(obj.size() == 4);
    for (std::size_t i = 1; i < obj.size(); ++i) CHECK(obj[i] <= obj[i - 1] * (1 + 1e-6) + 1e-9);
  }
  const auto quality = read_rows(dir / "bench" / "quality.csv");
  CHECK(quality.size() == 3 * 3 * 61);
  for (const auto& q : quality) CHECK(q[2] != "1");
  const std::string md = slurp(dir / "bench" / "benchmark.md");
  CHECK(md.find("| frame skip |") != std::string::npos);

  opts.frame_skips = {};
  CHECK(natproj::cmd_benchmark(opts, log) == natproj::kExitConfig);
}
