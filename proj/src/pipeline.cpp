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

#include "natproj/pipeline.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <sstream>

#include "natproj/error.hpp"
#include "natproj/natset.hpp"

namespace natproj {

namespace fs = std::filesystem;

namespace {

void require_keys(const Json& j, std::initializer_list<const char*> keys, const char* where) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, std::string(where) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
      throw Error(ErrorCode::ConfigError, std::string(where) + ": unknown key \"" + it.key() + "\"");
}

// Raised with the pipeline stage that failed; maps to exit 3.
struct StageError {
  std::string stage;
  std::string message;
};

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw StageError{name, e.what()};
  }
}

NaturalisticSet load_natset(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::ConfigError, "natset file not found: " + path.string());
  return natset_from_json(read_json(path));
}

std::vector<Trajectory> load_trajectories(const fs::path& path, double dt) {
  if (!fs::exists(path)) throw Error(ErrorCode::ConfigError, "trajectory file not found: " + path.string());
  return load_csv(path, dt);
}

std::string clusterer_label(const ClustererConfig& c) {
  if (c.algorithm == ClusterAlgorithm::Density) return "density";
  return std::string(to_string(c.algorithm)) + "-" + std::to_string(c.k);
}

int exit_for(ProjectionStatus status) {
  switch (status) {
    case ProjectionStatus::Infeasible: return kExitInfeasible;
    case ProjectionStatus::Limit: return kExitLimit;
    default: return kExitOk;
  }
}

constexpr const char* kInfeasibleHint =
    "no dynamically feasible trajectory from this initial state stays inside the naturalistic set "
    "at the enforced frames; projection is feasible only when the set contains one";

// ||x_t - x_t^a|| over the frames both trajectories define.
std::vector<double> state_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::Index len = std::min(a.cols(), b.cols());
  std::vector<double> d(static_cast<std::size_t>(len));
  for (Eigen::Index t = 0; t < len; ++t) d[static_cast<std::size_t>(t)] = (a.col(t) - b.col(t)).norm();
  return d;
}

}  // namespace

void PipelineConfig::validate() const {
  if (csv.has_value() == synth.has_value())
    throw Error(ErrorCode::ConfigError, "dataset needs exactly one of \"csv\" or \"synth\"");
  clusterer.validate();
  projection.validate();
  hull_state_map_from_id(hull_state_map);
}

PipelineConfig pipeline_config_from_json(const Json& j) {
  require_keys(j, {"dataset", "filter", "clusterer", "hull_state_map", "projection", "output"}, "config");
  PipelineConfig c;
  if (!j.contains("dataset")) throw Error(ErrorCode::ConfigError, "config is missing \"dataset\"");
  const Json& d = j["dataset"];
  require_keys(d, {"csv", "synth"}, "dataset");
  try {
    if (d.contains("csv")) c.csv = fs::path(d["csv"].get<std::string>());
    if (j.contains("hull_state_map")) c.hull_state_map = j["hull_state_map"].get<std::string>();
    if (j.contains("output")) c.output = fs::path(j["output"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config: ") + e.what());
  }
  if (d.contains("synth")) c.synth = scenario_from_json(d["synth"]);
  if (j.contains("filter") && !j["filter"].is_null()) c.filter = filter_from_json(j["filter"]);
  if (j.contains("clusterer")) c.clusterer = clusterer_config_from_json(j["clusterer"]);
  if (j.contains("projection")) c.projection = projection_config_from_json(j["projection"]);
  c.validate();
  return c;
}

Json to_json(const PipelineConfig& c) {
  Json j;
  Json d = Json::object();
  if (c.csv) d["csv"] = c.csv->generic_string();
  if (c.synth) d["synth"] = to_json(*c.synth);
  j["dataset"] = std::move(d);
  if (c.filter) j["filter"] = to_json(*c.filter);
  j["clusterer"] = to_json(c.clusterer);
  j["hull_state_map"] = c.hull_state_map;
  j["projection"] = to_json(c.projection);
  j["output"] = c.output.generic_string();
  return j;
}

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string generation_stamp() {
  const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
  if (epoch != nullptr && *epoch != '\0') return std::string("epoch:") + epoch;
  return "unspecified";
}

Json provenance_block(const Json& config, const Json& extra) {
  Json j;
  j["version"] = std::string(kVersion);
  j["config_hash"] = content_hash(config.dump());
  j["generated_at"] = generation_stamp();
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

int cmd_gen_natset(const GenNatsetOptions& opts, std::ostream& log) {
  PipelineConfig cfg;
  try {
    cfg = pipeline_config_from_json(read_json(opts.config));
    if (opts.seed) {
      cfg.clusterer.seed = *opts.seed;
      if (cfg.synth) cfg.synth->seed = *opts.seed;
    }
    if (opts.out) cfg.output = *opts.out;
    else if (cfg.output.is_relative()) cfg.output = opts.config.parent_path() / cfg.output;
    if (cfg.csv && cfg.csv->is_relative()) cfg.csv = opts.config.parent_path() / *cfg.csv;
    if (cfg.csv && !fs::exists(*cfg.csv))
      throw Error(ErrorCode::ConfigError, "dataset file not found: " + cfg.csv->string());
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    std::vector<Trajectory> data = stage("load", [&] {
      return cfg.csv ? load_csv(*cfg.csv) : synth_scenario(*cfg.synth);
    });
    if (cfg.filter) {
      data = stage("filter", [&] {
        auto kept = filter_tasks(data, *cfg.filter);
        if (kept.empty()) throw Error(ErrorCode::EmptyDataset, "no trajectory passes the filter");
        return kept;
      });
    }
    Json config_json = to_json(cfg);
    config_json.erase("output");
    const GeneratedSet g = stage("generate", [&] {
      return generate(data, hull_state_map_from_id(cfg.hull_state_map), cfg.clusterer,
                      generation_stamp());
    });
    stage("write", [&] {
      fs::create_directories(cfg.output);
      Json set = to_json(g.set);
      set["provenance"]["tool"] = provenance_block(config_json);
      write_json(cfg.output / "natset.json", set);
      std::ostringstream metrics;
      write_metrics_csv(metrics, g.metrics);
      write_text(cfg.output / "metrics.csv", metrics.str());
      write_csv(cfg.output / "trajectories.csv", data);
      return 0;
    });
    log << "natset: " << data.size() << " trajectories, horizon " << g.set.horizon() << " -> "
        << (cfg.output / "natset.json").string() << '\n';
  } catch (const StageError& e) {
    log << "error: generation failed at stage " << e.stage << ": " << e.message << '\n';
    return kExitGeneration;
  } catch (const fs::filesystem_error& e) {
    log << "error: generation failed at stage write: " << e.what() << '\n';
    return kExitGeneration;
  }
  return kExitOk;
}

ProjectionConfig ProjectionFlags::resolve() const {
  ProjectionConfig c;
  if (config) c = pipeline_config_from_json(read_json(*config)).projection;
  if (gamma) c.gamma = *gamma;
  if (frame_skip) c.frame_skip = *frame_skip;
  if (downsample) c.downsample = *downsample;
  if (mip_gap) c.mip_gap = *mip_gap;
  if (time_limit) c.time_limit = *time_limit;
  if (node_limit) c.node_limit = *node_limit;
  if (binary_mode) c.binary_mode = binary_mode_from_string(*binary_mode);
  if (big_m) {
    if (*big_m == "auto") {
      c.big_m_auto = true;
    } else {
      char* end = nullptr;
      const double v = std::strtod(big_m->c_str(), &end);
      if (end == big_m->c_str() || *end != '\0')
        throw Error(ErrorCode::ConfigError, "big-M must be \"auto\" or a number, got '" + *big_m + "'");
      c.big_m_auto = false;
      c.big_m = v;
    }
  }
  c.validate();
  return c;
}

int cmd_project(const ProjectOptions& opts, std::ostream& log) {
  NaturalisticSet nset;
  Trajectory traj;
  ProjectionConfig cfg;
  Json source;
  try {
    if (opts.traj.has_value() == opts.synth.has_value())
      throw Error(ErrorCode::ConfigError, "give exactly one of --traj or --synth");
    nset = load_natset(opts.natset);
    cfg = opts.flags.resolve();
    std::vector<Trajectory> pool;
    if (opts.traj) {
      pool = load_trajectories(*opts.traj, nset.dt);
      source["traj"] = opts.traj->generic_string();
    } else {
      if (!fs::exists(*opts.synth))
        throw Error(ErrorCode::ConfigError, "synth spec not found: " + opts.synth->string());
      ScenarioSpec spec = scenario_from_json(read_json(*opts.synth));
      if (opts.seed) spec.seed = *opts.seed;
      pool = synth_scenario(spec);
      source["synth"] = to_json(spec);
    }
    if (opts.index >= pool.size())
      throw Error(ErrorCode::ConfigError, "trajectory index " + std::to_string(opts.index) +
                                              " out of range (" + std::to_string(pool.size()) +
                                              " available)");
    traj = pool[opts.index];
    source["index"] = opts.index;
    source["id"] = traj.id;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  ProjectionResult result;
  try {
    const auto map = hull_state_map_from_id(nset.provenance.hull_state_map);
    result = project(nset, double_integrator(nset.dt * cfg.downsample), traj, cfg, map);
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  Json extra;
  extra["natset"] = opts.natset.generic_string();
  extra["natset_hash"] = content_hash(read_json(opts.natset).dump());
  extra["source"] = source;
  Json out = to_json(result);
  const Json cfg_json = to_json(cfg);
  out["config"] = cfg_json;
  out["provenance"] = provenance_block(cfg_json, extra);
  try {
    fs::create_directories(opts.out);
    write_json(opts.out / "projection.json", out);
    std::ostringstream csv;
    csv << "t,frame,distance\n";
    if (result.has_solution) {
      const Trajectory ref = downsample(traj, cfg.downsample);
      const auto d = state_distances(result.trajectory.states, ref.states);
      for (std::size_t t = 0; t < d.size(); ++t)
        csv << t << ',' << t * static_cast<std::size_t>(cfg.downsample) << ',' << format_double(d[t])
            << '\n';
    }
    write_text(opts.out / "distances.csv", csv.str());
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  log << "projection: " << to_string(result.status) << ", objective " << result.objective << ", "
      << result.nodes_explored << " nodes, " << result.wall_time << " s\n";
  if (result.status == ProjectionStatus::Infeasible) log << "infeasible: " << kInfeasibleHint << '\n';
  if (result.status == ProjectionStatus::Limit)
    log << "limit reached: " << (result.has_solution ? "incumbent written" : "no incumbent found")
        << '\n';
  return exit_for(result.status);
}

int cmd_export_plot(const ExportPlotOptions& opts, std::ostream& log) {
  try {
    const NaturalisticSet nset = load_natset(opts.natset);
    for (long t : opts.frames)
      if (t < 0 || t > nset.horizon())
        throw Error(ErrorCode::ConfigError, "frame " + std::to_string(t) + " outside 0.." +
                                                std::to_string(nset.horizon()));
    std::vector<ProjectionResult> results;
    for (const fs::path& p : opts.results) {
      if (!fs::exists(p)) throw Error(ErrorCode::ConfigError, "result file not found: " + p.string());
      results.push_back(projection_result_from_json(read_json(p)));
    }
    if (opts.frames.empty() && results.empty()) return kExitOk;

    fs::create_directories(opts.out);
    for (long t : opts.frames) {
      Json j;
      j["t"] = t;
      Json polys = Json::array();
      for (const Polytope& p : nset.subsets[static_cast<std::size_t>(t)].polytopes)
        polys.push_back(to_json(p));
      j["polytopes"] = std::move(polys);
      write_json(opts.out / ("frame_" + std::to_string(t) + ".json"), j);
    }
    if (!results.empty()) {
      const auto map = hull_state_map_from_id(nset.provenance.hull_state_map);
      Json list = Json::array();
      for (std::size_t i = 0; i < results.size(); ++i) {
        Json item;
        item["source"] = opts.results[i].generic_string();
        item["dt"] = results[i].trajectory.dt;
        item["points"] = results[i].has_solution
                             ? columns_to_json(map.apply(results[i].trajectory.states))
                             : Json::array();
        list.push_back(std::move(item));
      }
      Json j;
      j["trajectories"] = std::move(list);
      write_json(opts.out / "trajectories.json", j);
    }
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

int cmd_benchmark(const BenchmarkOptions& opts, std::ostream& log) {
  NaturalisticSet nset;
  ProjectionConfig base;
  std::vector<Trajectory> pool;
  try {
    if (opts.frame_skips.empty() || opts.downsamples.empty())
      throw Error(ErrorCode::ConfigError, "empty frame-skip or downsample sweep");
    for (int k : opts.frame_skips)
      if (k < 1) throw Error(ErrorCode::ConfigError, "frame skip must be >= 1");
    for (int d : opts.downsamples)
      if (d < 1) throw Error(ErrorCode::ConfigError, "downsample must be >= 1");
    nset = load_natset(opts.natset);
    base = opts.flags.resolve();
    for (const fs::path& p : opts.trajs) {
      auto part = load_trajectories(p, nset.dt);
      pool.insert(pool.end(), part.begin(), part.end());
    }
    if (opts.limit && *opts.limit < pool.size()) pool.resize(*opts.limit);
    if (pool.empty()) throw Error(ErrorCode::ConfigError, "no trajectories to benchmark");
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  std::vector<int> skips = opts.frame_skips;
  std::sort(skips.begin(), skips.end());
  skips.erase(std::unique(skips.begin(), skips.end()), skips.end());
  const std::string label = clusterer_label(nset.provenance.clusterer);

  std::ostringstream table, md, quality;
  table << "trajectory,clusterer,downsample,frame_skip,status,runtime_s,objective,nodes\n";
  md << "| trajectory | clusterer | downsample | frame skip | status | runtime (s) | objective | nodes |\n"
     << "|---|---|---|---|---|---|---|---|\n";
  quality << "trajectory,downsample,frame_skip,t,distance\n";
  int code = kExitOk;
  try {
    const auto map = hull_state_map_from_id(nset.provenance.hull_state_map);
    for (const Trajectory& traj : pool) {
      for (int ds : opts.downsamples) {
        Eigen::MatrixXd finest;
        for (int skip : skips) {
          ProjectionConfig cfg = base;
          cfg.downsample = ds;
          cfg.frame_skip = skip;
          const ProjectionResult r =
              project(nset, double_integrator(nset.dt * ds), traj, cfg, map);
          const std::string obj = std::isfinite(r.objective) ? format_double(r.objective) : "inf";
          table << traj.id << ',' << label << ',' << ds << ',' << skip << ',' << to_string(r.status)
                << ',' << format_double(r.wall_time) << ',' << obj << ',' << r.nodes_explored << '\n';
          md << "| " << traj.id << " | " << label << " | " << ds << " | " << skip << " | "
             << to_string(r.status) << " | " << format_double(r.wall_time) << " | " << obj << " | "
             << r.nodes_explored << " |\n";
          if (r.status == ProjectionStatus::Infeasible) code = kExitInfeasible;
          else if (r.status == ProjectionStatus::Limit && code == kExitOk) code = kExitLimit;
          if (!r.has_solution) continue;
          if (skip == skips.front()) {
            finest = r.trajectory.states;
          } else if (finest.size() > 0) {
            const auto d = state_distances(finest, r.trajectory.states);
            for (std::size_t t = 0; t < d.size(); ++t)
              quality << traj.id << ',' << ds << ',' << skip << ',' << t << ',' << format_double(d[t])
                      << '\n';
          }
        }
      }
      log << "benchmark: trajectory " << traj.id << " done\n";
    }
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    fs::create_directories(opts.out);
    write_text(opts.out / "benchmark.csv", table.str());
    write_text(opts.out / "benchmark.md", md.str());
    write_text(opts.out / "quality.csv", quality.str());
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (code == kExitInfeasible) log << "infeasible: " << kInfeasibleHint << '\n';
  return code;
}

}  // namespace natproj
