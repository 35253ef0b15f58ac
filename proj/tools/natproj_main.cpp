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

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "natproj/pipeline.hpp"

namespace {

void add_projection_flags(CLI::App* cmd, natproj::ProjectionFlags& f) {
  cmd->add_option("--config", f.config, "pipeline config whose \"projection\" block is the base");
  cmd->add_option("--gamma", f.gamma, "control effort weight");
  cmd->add_option("--frame-skip", f.frame_skip, "enforce set membership every K frames");
  cmd->add_option("--downsample", f.downsample, "keep every D-th frame of set and trajectory");
  cmd->add_option("--mip-gap", f.mip_gap, "relative optimality gap");
  cmd->add_option("--time-limit", f.time_limit, "seconds per projection");
  cmd->add_option("--node-limit", f.node_limit, "branch-and-bound nodes per projection");
  cmd->add_option("--binary-mode", f.binary_mode, "exactly_one or at_least_one");
  cmd->add_option("--big-m", f.big_m, "\"auto\" or a number");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Naturalistic set generation and mixed-integer trajectory projection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(natproj::kVersion));

  natproj::GenNatsetOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-natset", "cluster a dataset per frame and build hulls");
  gen_cmd->add_option("--config", gen.config, "pipeline config JSON")->required();
  gen_cmd->add_option("--out", gen.out, "output directory (overrides the config)");
  gen_cmd->add_option("--seed", gen.seed, "seed for the clusterer and synthetic scenes");

  natproj::ProjectOptions proj;
  auto* proj_cmd = app.add_subcommand("project", "project one trajectory into a set");
  proj_cmd->add_option("--natset", proj.natset, "natset JSON")->required();
  auto* traj_opt = proj_cmd->add_option("--traj", proj.traj, "trajectory CSV");
  auto* synth_opt = proj_cmd->add_option("--synth", proj.synth, "synthetic scenario spec JSON");
  traj_opt->excludes(synth_opt);
  proj_cmd->add_option("--index", proj.index, "trajectory index within the source");
  proj_cmd->add_option("--seed", proj.seed, "seed for --synth");
  proj_cmd->add_option("--out", proj.out, "output directory");
  add_projection_flags(proj_cmd, proj.flags);

  natproj::ExportPlotOptions plot;
  auto* plot_cmd = app.add_subcommand("export-plot", "write polygons and solution polylines");
  plot_cmd->add_option("--natset", plot.natset, "natset JSON")->required();
  plot_cmd->add_option("--frames", plot.frames, "frames to export")->delimiter(',');
  plot_cmd->add_option("--results", plot.results, "projection result JSON files")->delimiter(',');
  plot_cmd->add_option("--out", plot.out, "output directory");

  natproj::BenchmarkOptions bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "runtime and objective sweep over frame skips");
  bench_cmd->add_option("--natset", bench.natset, "natset JSON")->required();
  bench_cmd->add_option("--trajs", bench.trajs, "trajectory CSV files")->delimiter(',')->required();
  bench_cmd->add_option("--limit", bench.limit, "project only the first N trajectories");
  bench_cmd->add_option("--frame-skips", bench.frame_skips, "frame skip sweep")->delimiter(',');
  bench_cmd->add_option("--downsamples", bench.downsamples, "downsample sweep")->delimiter(',');
  bench_cmd->add_option("--out", bench.out, "output directory");
  add_projection_flags(bench_cmd, bench.flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? natproj::kExitOk : natproj::kExitConfig;
  }

  if (*gen_cmd) return natproj::cmd_gen_natset(gen, std::cerr);
  if (*proj_cmd) return natproj::cmd_project(proj, std::cerr);
  if (*plot_cmd) return natproj::cmd_export_plot(plot, std::cerr);
  return natproj::cmd_benchmark(bench, std::cerr);
}
