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

#include "natproj/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <sstream>

#include "natproj/error.hpp"

namespace natproj {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

[[noreturn]] void parse_fail(const std::string& msg) { throw Error(ErrorCode::ParseError, msg); }

const Json& field(const Json& j, const char* key, const char* where) {
  if (!j.is_object()) parse_fail(std::string(where) + " must be an object");
  auto it = j.find(key);
  if (it == j.end()) parse_fail(std::string(where) + " is missing \"" + key + "\"");
  return *it;
}

double number(const Json& j, const char* what) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  if (!j.is_number()) parse_fail(std::string(what) + " must be a number");
  return j.get<double>();
}

long integer(const Json& j, const char* what) {
  if (!j.is_number_integer()) parse_fail(std::string(what) + " must be an integer");
  return j.get<long>();
}

// Configs reject keys they do not know, so typos surface as errors.
void check_keys(const Json& j, std::initializer_list<const char*> keys, const char* where) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, std::string(where) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw Error(ErrorCode::ConfigError, std::string(where) + ": unknown key \"" + it.key() + "\"");
  }
}

Json vector_to_json(const VectorXd& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

VectorXd vector_from_json(const Json& j, const char* what) {
  if (!j.is_array()) parse_fail(std::string(what) + " must be an array");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = number(j[i], what);
  return v;
}

Json rows_to_json(const MatrixXd& m) {
  Json a = Json::array();
  for (Index r = 0; r < m.rows(); ++r) a.push_back(vector_to_json(m.row(r).transpose()));
  return a;
}

MatrixXd rows_from_json(const Json& j, Index cols, const char* what) {
  if (!j.is_array()) parse_fail(std::string(what) + " must be an array of rows");
  MatrixXd m(static_cast<Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const VectorXd row = vector_from_json(j[r], what);
    if (row.size() != cols)
      parse_fail(std::string(what) + " row " + std::to_string(r) + " has " +
                 std::to_string(row.size()) + " entries, expected " + std::to_string(cols));
    m.row(static_cast<Index>(r)) = row.transpose();
  }
  return m;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json columns_to_json(const MatrixXd& m) {
  Json a = Json::array();
  for (Index c = 0; c < m.cols(); ++c) a.push_back(vector_to_json(m.col(c)));
  return a;
}

MatrixXd columns_from_json(const Json& rows, Index dim) {
  return rows_from_json(rows, dim, "columns").transpose();
}

Json to_json(const Polytope& p) {
  Json j;
  j["vertices"] = columns_to_json(p.vertices);
  j["G"] = rows_to_json(p.G);
  j["h"] = vector_to_json(p.h);
  return j;
}

Polytope polytope_from_json(const Json& j) {
  Polytope p;
  const Json& v = field(j, "vertices", "polytope");
  const Index dim = (v.is_array() && !v.empty() && v[0].is_array()) ? static_cast<Index>(v[0].size()) : 2;
  p.vertices = rows_from_json(v, dim, "polytope vertices").transpose();
  p.G = rows_from_json(field(j, "G", "polytope"), dim, "polytope G");
  p.h = vector_from_json(field(j, "h", "polytope"), "polytope h");
  if (p.G.rows() != p.h.size()) parse_fail("polytope G and h have different row counts");
  if (!p.vertices.allFinite() || !p.G.allFinite() || !p.h.allFinite())
    parse_fail("polytope holds non-finite values");
  return p;
}

Json to_json(const ClustererConfig& c) {
  Json j;
  j["algorithm"] = std::string(to_string(c.algorithm));
  j["k"] = c.k;
  j["min_cluster_size"] = c.min_cluster_size;
  j["epsilon"] = c.epsilon;
  j["seed"] = c.seed;
  j["max_iterations"] = c.max_iterations;
  j["n_init"] = c.n_init;
  return j;
}

ClustererConfig clusterer_config_from_json(const Json& j) {
  check_keys(j, {"algorithm", "k", "min_cluster_size", "epsilon", "seed", "max_iterations", "n_init"},
             "clusterer");
  ClustererConfig c;
  try {
    if (j.contains("algorithm")) c.algorithm = cluster_algorithm_from_string(j["algorithm"].get<std::string>());
    if (j.contains("k")) c.k = j["k"].get<int>();
    if (j.contains("min_cluster_size")) c.min_cluster_size = j["min_cluster_size"].get<int>();
    if (j.contains("epsilon")) c.epsilon = j["epsilon"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("max_iterations")) c.max_iterations = j["max_iterations"].get<int>();
    if (j.contains("n_init")) c.n_init = j["n_init"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("clusterer: ") + e.what());
  }
  return c;
}

Json to_json(const Provenance& p) {
  Json j;
  j["dataset_hash"] = p.dataset_hash;
  j["clusterer"] = to_json(p.clusterer);
  j["hull_state_map"] = p.hull_state_map;
  j["generated_at"] = p.generated_at;
  return j;
}

Provenance provenance_from_json(const Json& j) {
  Provenance p;
  if (!j.is_object()) return p;
  try {
    if (j.contains("dataset_hash")) p.dataset_hash = j["dataset_hash"].get<std::string>();
    if (j.contains("clusterer")) p.clusterer = clusterer_config_from_json(j["clusterer"]);
    if (j.contains("hull_state_map")) p.hull_state_map = j["hull_state_map"].get<std::string>();
    if (j.contains("generated_at")) p.generated_at = j["generated_at"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    parse_fail(std::string("provenance: ") + e.what());
  }
  return p;
}

Json to_json(const NaturalisticSet& nset) {
  Json j;
  j["dt"] = nset.dt;
  j["horizon"] = nset.horizon();
  j["hull_state_dim"] = nset.hull_state_dim;
  Json subsets = Json::array();
  for (const NaturalisticSubset& s : nset.subsets) {
    Json js;
    js["t"] = s.t;
    js["outliers"] = s.outlier_count;
    Json polys = Json::array();
    for (const Polytope& p : s.polytopes) polys.push_back(to_json(p));
    js["polytopes"] = std::move(polys);
    subsets.push_back(std::move(js));
  }
  j["subsets"] = std::move(subsets);
  j["provenance"] = to_json(nset.provenance);
  return j;
}

NaturalisticSet natset_from_json(const Json& j) {
  NaturalisticSet nset;
  nset.dt = number(field(j, "dt", "naturalistic set"), "dt");
  nset.hull_state_dim = integer(field(j, "hull_state_dim", "naturalistic set"), "hull_state_dim");
  const Json& subsets = field(j, "subsets", "naturalistic set");
  if (!subsets.is_array()) parse_fail("subsets must be an array");
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    NaturalisticSubset s;
    s.t = integer(field(subsets[i], "t", "subset"), "t");
    if (s.t != static_cast<Index>(i)) parse_fail("subset " + std::to_string(i) + " has t = " + std::to_string(s.t));
    s.outlier_count = integer(field(subsets[i], "outliers", "subset"), "outliers");
    const Json& polys = field(subsets[i], "polytopes", "subset");
    if (!polys.is_array()) parse_fail("polytopes must be an array");
    for (const Json& p : polys) {
      s.polytopes.push_back(polytope_from_json(p));
      if (s.polytopes.back().dim() != nset.hull_state_dim)
        parse_fail("polytope dimension differs from hull_state_dim at t = " + std::to_string(s.t));
    }
    nset.subsets.push_back(std::move(s));
  }
  if (j.contains("horizon") && integer(j["horizon"], "horizon") != nset.horizon())
    parse_fail("horizon disagrees with the subset count");
  if (j.contains("provenance")) nset.provenance = provenance_from_json(j["provenance"]);
  return nset;
}

Json to_json(const RegionSpec& r) {
  Json j;
  if (r.shape == RegionSpec::Shape::Circle) {
    j["shape"] = "circle";
    j["center"] = vector_to_json(r.center);
    j["radius"] = r.radius;
  } else {
    j["shape"] = "polygon";
    j["vertices"] = columns_to_json(r.vertices);
  }
  return j;
}

RegionSpec region_from_json(const Json& j) {
  try {
    const std::string shape = field(j, "shape", "region").get<std::string>();
    if (shape == "circle") {
      check_keys(j, {"shape", "center", "radius"}, "region");
      const VectorXd c = vector_from_json(field(j, "center", "region"), "center");
      if (c.size() != 2) throw Error(ErrorCode::ConfigError, "region center must have 2 entries");
      return RegionSpec::circle(c, number(field(j, "radius", "region"), "radius"));
    }
    if (shape == "polygon") {
      check_keys(j, {"shape", "vertices"}, "region");
      return RegionSpec::polygon(columns_from_json(field(j, "vertices", "region"), 2));
    }
    throw Error(ErrorCode::ConfigError, "unknown region shape '" + shape + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("region: ") + e.what());
  }
}

Json to_json(const FilterSpec& f) {
  Json j;
  j["start"] = to_json(f.start);
  if (f.end) j["end"] = to_json(*f.end);
  j["moving_only"] = f.moving_only;
  j["min_speed"] = f.min_speed;
  return j;
}

FilterSpec filter_from_json(const Json& j) {
  check_keys(j, {"start", "end", "moving_only", "min_speed"}, "filter");
  FilterSpec f;
  try {
    f.start = region_from_json(field(j, "start", "filter"));
    if (j.contains("end") && !j["end"].is_null()) f.end = region_from_json(j["end"]);
    if (j.contains("moving_only")) f.moving_only = j["moving_only"].get<bool>();
    if (j.contains("min_speed")) f.min_speed = j["min_speed"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("filter: ") + e.what());
  }
  if (!(f.min_speed >= 0.0)) throw Error(ErrorCode::ConfigError, "filter min_speed must be >= 0");
  return f;
}

Json to_json(const ScenarioSpec& s) {
  Json j;
  j["kind"] = std::string(to_string(s.kind));
  j["n_trajectories"] = s.n_trajectories;
  j["noise_sigma"] = s.noise_sigma;
  j["seed"] = s.seed;
  j["horizon"] = s.horizon;
  j["dt"] = s.dt;
  j["speed"] = s.speed;
  j["branches"] = s.branches;
  j["split_frame"] = s.split_frame;
  j["proportions"] = s.proportions;
  return j;
}

ScenarioSpec scenario_from_json(const Json& j) {
  check_keys(j, {"kind", "n_trajectories", "noise_sigma", "seed", "horizon", "dt", "speed", "branches",
                 "split_frame", "proportions"},
             "synth");
  ScenarioSpec s;
  try {
    if (j.contains("kind")) s.kind = scenario_kind_from_string(j["kind"].get<std::string>());
    if (j.contains("n_trajectories")) s.n_trajectories = j["n_trajectories"].get<int>();
    if (j.contains("noise_sigma")) s.noise_sigma = j["noise_sigma"].get<double>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("horizon")) s.horizon = j["horizon"].get<int>();
    if (j.contains("dt")) s.dt = j["dt"].get<double>();
    if (j.contains("speed")) s.speed = j["speed"].get<double>();
    if (j.contains("branches")) s.branches = j["branches"].get<int>();
    if (j.contains("split_frame")) s.split_frame = j["split_frame"].get<int>();
    if (j.contains("proportions")) s.proportions = j["proportions"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("synth: ") + e.what());
  }
  return s;
}

Json to_json(const ProjectionConfig& c) {
  Json j;
  j["gamma"] = c.gamma;
  j["frame_skip"] = c.frame_skip;
  j["downsample"] = c.downsample;
  if (c.big_m_auto)
    j["big_m"] = "auto";
  else
    j["big_m"] = c.big_m;
  j["binary_mode"] = std::string(to_string(c.binary_mode));
  j["mip_gap"] = c.mip_gap;
  j["node_limit"] = c.node_limit;
  j["time_limit"] = c.time_limit;
  j["qp_tolerance"] = c.qp_tolerance;
  return j;
}

ProjectionConfig projection_config_from_json(const Json& j) {
  check_keys(j, {"gamma", "frame_skip", "downsample", "big_m", "binary_mode", "mip_gap", "node_limit",
                 "time_limit", "qp_tolerance"},
             "projection");
  ProjectionConfig c;
  try {
    if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
    if (j.contains("frame_skip")) c.frame_skip = j["frame_skip"].get<int>();
    if (j.contains("downsample")) c.downsample = j["downsample"].get<int>();
    if (j.contains("big_m")) {
      if (j["big_m"].is_string()) {
        if (j["big_m"].get<std::string>() != "auto")
          throw Error(ErrorCode::ConfigError, "big_m must be \"auto\" or a number");
        c.big_m_auto = true;
      } else {
        c.big_m_auto = false;
        c.big_m = j["big_m"].get<double>();
      }
    }
    if (j.contains("binary_mode")) c.binary_mode = binary_mode_from_string(j["binary_mode"].get<std::string>());
    if (j.contains("mip_gap")) c.mip_gap = j["mip_gap"].get<double>();
    if (j.contains("node_limit")) c.node_limit = j["node_limit"].get<long>();
    if (j.contains("time_limit")) c.time_limit = j["time_limit"].get<double>();
    if (j.contains("qp_tolerance")) c.qp_tolerance = j["qp_tolerance"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("projection: ") + e.what());
  }
  c.validate();
  return c;
}

Json to_json(const ProjectionResult& r) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  Json j;
  j["status"] = std::string(to_string(r.status));
  j["objective"] = finite_or_null(r.objective);
  j["bound"] = finite_or_null(r.bound);
  j["nodes"] = r.nodes_explored;
  j["wall_time_s"] = r.wall_time;
  j["active_clusters"] = r.active_clusters;
  j["enforced_frames"] = r.enforced_frames;
  j["binaries"] = std::vector<double>(r.binaries.data(), r.binaries.data() + r.binaries.size());
  j["dt"] = r.trajectory.dt;
  j["states"] = columns_to_json(r.trajectory.states);
  j["controls"] = columns_to_json(r.controls.controls);
  return j;
}

ProjectionResult projection_result_from_json(const Json& j) {
  ProjectionResult r;
  const std::string status = field(j, "status", "result").get<std::string>();
  if (status == "Optimal") r.status = ProjectionStatus::Optimal;
  else if (status == "GapReached") r.status = ProjectionStatus::GapReached;
  else if (status == "Infeasible") r.status = ProjectionStatus::Infeasible;
  else if (status == "Limit") r.status = ProjectionStatus::Limit;
  else parse_fail("unknown status '" + status + "'");
  auto number_or_inf = [](const Json& v, const char* name) {
    return v.is_null() ? std::numeric_limits<double>::infinity() : number(v, name);
  };
  r.objective = number_or_inf(field(j, "objective", "result"), "objective");
  r.bound = number_or_inf(field(j, "bound", "result"), "bound");
  r.nodes_explored = integer(field(j, "nodes", "result"), "nodes");
  r.wall_time = number(field(j, "wall_time_s", "result"), "wall_time_s");
  try {
    r.active_clusters = field(j, "active_clusters", "result").get<std::vector<int>>();
    if (j.contains("enforced_frames")) r.enforced_frames = j["enforced_frames"].get<std::vector<Index>>();
    if (j.contains("binaries")) {
      const auto b = j["binaries"].get<std::vector<double>>();
      r.binaries = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Index>(b.size()));
    }
  } catch (const nlohmann::json::exception& e) {
    parse_fail(std::string("result: ") + e.what());
  }
  if (j.contains("dt")) r.trajectory.dt = number(j["dt"], "dt");
  const Json& states = field(j, "states", "result");
  const Json& controls = field(j, "controls", "result");
  if (!states.empty()) {
    r.trajectory.states = columns_from_json(states, static_cast<Index>(states[0].size()));
    r.has_solution = true;
  }
  if (!controls.empty()) r.controls.controls = columns_from_json(controls, static_cast<Index>(controls[0].size()));
  return r;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::ConfigError, "write failed for " + path.string());
}

void write_metrics_csv(std::ostream& out, const SetMetrics& metrics) {
  out << "t,k,area,points,outliers\n";
  for (const FrameMetrics& m : metrics)
    out << m.t << ',' << m.k << ',' << format_double(m.total_area) << ',' << m.point_count << ','
        << m.outlier_count << '\n';
}

}  // namespace natproj
