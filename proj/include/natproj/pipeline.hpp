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

#pragma once

// Batch commands behind the natproj executable. Each command reads files,
// writes artifacts into an output directory and returns a process exit code;
// diagnostics go to the supplied stream.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "natproj/clustering.hpp"
#include "natproj/ingest.hpp"
#include "natproj/io.hpp"
#include "natproj/projector.hpp"

namespace natproj {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitGeneration = 3,
  kExitInfeasible = 4,
  kExitLimit = 5,
};

struct PipelineConfig {
  // Relative csv and output paths resolve against the config file's directory.
  std::optional<std::filesystem::path> csv;
  std::optional<ScenarioSpec> synth;
  std::optional<FilterSpec> filter;
  ClustererConfig clusterer;
  std::string hull_state_map = "position";
  ProjectionConfig projection;
  std::filesystem::path output = "out";

  /// Exactly one dataset source; throws ConfigError otherwise.
  void validate() const;
};

/// {"dataset":{"csv":path}|{"synth":{...}}, "filter", "clusterer",
///  "hull_state_map", "projection", "output"}. Unknown keys are rejected.
PipelineConfig pipeline_config_from_json(const Json& j);
Json to_json(const PipelineConfig& c);

/// 64-bit FNV-1a of `bytes` as 16 hex digits.
std::string content_hash(std::string_view bytes);

/// SOURCE_DATE_EPOCH when set, "unspecified" otherwise. Never the clock, so
/// reruns stay byte-identical.
std::string generation_stamp();

/// {"version", "config_hash", "generated_at"} plus `extra` keys.
Json provenance_block(const Json& config, const Json& extra = Json::object());

struct GenNatsetOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;  // overrides config "output"
  std::optional<std::uint64_t> seed;         // overrides clusterer and synth seeds
};

/// Writes natset.json, metrics.csv and trajectories.csv (the dataset after
/// filtering).
int cmd_gen_natset(const GenNatsetOptions& opts, std::ostream& log);

/// Projection flags shared by project and benchmark; unset fields keep the
/// defaults or the values from --config.
struct ProjectionFlags {
  std::optional<std::filesystem::path> config;  // a pipeline config; its "projection" is used
  std::optional<double> gamma;
  std::optional<int> frame_skip;
  std::optional<int> downsample;
  std::optional<double> mip_gap;
  std::optional<double> time_limit;
  std::optional<long> node_limit;
  std::optional<std::string> binary_mode;
  std::optional<std::string> big_m;  // "auto" or a number

  ProjectionConfig resolve() const;
};

struct ProjectOptions {
  std::filesystem::path natset;
  std::optional<std::filesystem::path> traj;   // CSV
  std::optional<std::filesystem::path> synth;  // ScenarioSpec JSON
  std::size_t index = 0;                        // which trajectory of the source
  std::optional<std::uint64_t> seed;            // overrides the synth seed
  ProjectionFlags flags;
  std::filesystem::path out = ".";
};

/// Writes projection.json (result plus provenance) and distances.csv with
/// columns t,frame,distance. Exit 4 when infeasible, 5 when a limit stopped
/// the search (the incumbent is still written).
int cmd_project(const ProjectOptions& opts, std::ostream& log);

struct ExportPlotOptions {
  std::filesystem::path natset;
  std::vector<long> frames;
  std::vector<std::filesystem::path> results;
  std::filesystem::path out = ".";
};

/// Writes frame_<t>.json per frame ({"t", "polytopes":[...]}) and, when
/// results are given, trajectories.json with one hull-state polyline per
/// result.
int cmd_export_plot(const ExportPlotOptions& opts, std::ostream& log);

struct BenchmarkOptions {
  std::filesystem::path natset;
  std::vector<std::filesystem::path> trajs;  // CSV files; every trajectory is projected
  std::optional<std::size_t> limit;          // first N trajectories only
  std::vector<int> frame_skips = {1, 2, 4, 8};
  std::vector<int> downsamples = {2};
  ProjectionFlags flags;
  std::filesystem::path out = ".";
};

/// Writes benchmark.csv and benchmark.md with columns trajectory, clusterer,
/// downsample, frame_skip, status, runtime_s, objective, nodes; and
/// quality.csv with the per-frame state distance between the smallest-Δφ
/// solution and every other Δφ of the same trajectory and downsample.
int cmd_benchmark(const BenchmarkOptions& opts, std::ostream& log);

}  // namespace natproj
