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

#include "natproj/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "natproj/error.hpp"
#include "natproj/geometry.hpp"

namespace natproj {

namespace {

using Eigen::Index;

constexpr const char* kHeader = "actor_id,frame,x,y,vx,vy,ax,ay,heading,class";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line, const char* column) {
  double v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad " + column +
                                           " value '" + s + "'");
  return v;
}

long long parse_int(const std::string& s, std::size_t line) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ": bad frame value '" + s + "'");
  return v;
}

std::string format(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller on the portable uniform draw.
double normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<int> apportion(const std::vector<double>& proportions, int n) {
  std::vector<int> counts(proportions.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < proportions.size(); ++i) {
    const double exact = proportions[i] * n;
    counts[i] = static_cast<int>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - counts[i], i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[remainders[i % remainders.size()].second];
  return counts;
}

int mode_count(const ScenarioSpec& spec) {
  switch (spec.kind) {
    case ScenarioKind::CurvedRoad: return 1;
    case ScenarioKind::StopGoLane: return 3;
    case ScenarioKind::Fork: return spec.branches;
  }
  return 1;
}

std::vector<int> assign_modes(const ScenarioSpec& spec, std::mt19937_64& rng) {
  const int modes = mode_count(spec);
  if (modes < 1) throw Error(ErrorCode::ConfigError, "scenario needs at least one branch");
  std::vector<double> props = spec.proportions;
  if (props.empty()) props.assign(static_cast<std::size_t>(modes), 1.0 / modes);
  if (static_cast<int>(props.size()) != modes)
    throw Error(ErrorCode::BadProportion, "expected " + std::to_string(modes) + " proportions");
  double sum = 0;
  for (double p : props) {
    if (!(p >= 0)) throw Error(ErrorCode::BadProportion, "proportions must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::BadProportion, "proportions must sum to 1");

  const auto counts = apportion(props, spec.n_trajectories);
  std::vector<int> labels;
  for (int m = 0; m < modes; ++m) labels.insert(labels.end(), static_cast<std::size_t>(counts[static_cast<std::size_t>(m)]), m);
  for (std::size_t i = labels.size(); i > 1; --i) {
    const auto j = std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)), i - 1);
    std::swap(labels[i - 1], labels[j]);
  }
  return labels;
}

struct Jitter {
  double dx, dy, dv;
  int dframes;
};

// Force that rotates the velocity at yaw rate `omega` (unit mass).
Eigen::Vector2d turn_force(const Eigen::Vector4d& x, double omega) {
  return omega * Eigen::Vector2d(-x(3), x(1));
}

double heading(const Eigen::Vector4d& x) { return std::atan2(x(3), x(1)); }

Trajectory simulate(const ScenarioSpec& spec, int mode, const Jitter& j, int index) {
  const LinearDynamics dyn = double_integrator(spec.dt, 1.0);
  const double v0 = spec.speed + j.dv;
  Eigen::Vector4d x(j.dx, v0, j.dy, 0.0);
  ControlSequence u{Eigen::MatrixXd::Zero(2, spec.horizon)};
  const int trigger = spec.split_frame + j.dframes;

  // Maneuver state shared across kinds.
  double target_heading = 0.0;
  double omega = 0.0;
  int phase = 0;
  int dwell_left = 0;
  const double brake_distance = 10.0, accel = 2.0;
  const int dwell = mode == 1 ? static_cast<int>(std::lround(1.0 / spec.dt))
                              : static_cast<int>(std::lround(3.0 / spec.dt));

  switch (spec.kind) {
    case ScenarioKind::CurvedRoad:
      target_heading = std::numbers::pi / 2;
      omega = v0 / 15.0;
      break;
    case ScenarioKind::Fork:
      if (spec.branches > 1)
        target_heading = -std::numbers::pi / 4 +
                         mode * (std::numbers::pi / 2) / (spec.branches - 1);
      omega = 0.6;
      break;
    case ScenarioKind::StopGoLane:
      break;
  }

  for (int t = 0; t < spec.horizon; ++t) {
    Eigen::Vector2d f = Eigen::Vector2d::Zero();
    if (t >= trigger) {
      if (spec.kind == ScenarioKind::StopGoLane) {
        if (mode != 0) {
          const double decel = v0 * v0 / (2 * brake_distance);
          if (phase == 0) {
            if (x(1) > decel * spec.dt) {
              f.x() = -decel;
            } else {
              f.x() = -x(1) / spec.dt;
              phase = 1;
              dwell_left = dwell;
            }
          } else if (phase == 1) {
            if (--dwell_left <= 0) phase = 2;
          } else if (phase == 2) {
            if (v0 - x(1) > accel * spec.dt) {
              f.x() = accel;
            } else {
              f.x() = (v0 - x(1)) / spec.dt;
              phase = 3;
            }
          }
        }
      } else if (phase == 0) {
        const double err = target_heading - heading(x);
        if (std::abs(err) < 1e-12) {
          phase = 1;
        } else if (std::abs(err) <= omega * spec.dt) {
          f = turn_force(x, err / spec.dt);
          phase = 1;
        } else {
          f = turn_force(x, std::copysign(omega, err));
        }
      }
    }
    u.controls.col(t) = f;
    x = dyn.A * x + dyn.B * f;
  }
  Trajectory traj = rollout(dyn, Eigen::Vector4d(j.dx, v0, j.dy, 0.0), u);
  traj.id = std::to_string(index);
  traj.actor_class = "car";
  return traj;
}

}  // namespace

RegionSpec RegionSpec::circle(const Eigen::Vector2d& center, double radius) {
  if (!(radius > 0)) throw Error(ErrorCode::ConfigError, "region radius must be positive");
  RegionSpec r;
  r.shape = Shape::Circle;
  r.center = center;
  r.radius = radius;
  return r;
}

RegionSpec RegionSpec::polygon(const Eigen::MatrixXd& vertices) {
  if (vertices.rows() != 2 || vertices.cols() < 3)
    throw Error(ErrorCode::ConfigError, "polygon region needs at least 3 planar vertices");
  to_halfspaces(vertices);  // rejects collinear or clockwise input
  RegionSpec r;
  r.shape = Shape::Polygon;
  r.vertices = vertices;
  return r;
}

bool RegionSpec::contains(const Eigen::Vector2d& p) const {
  if (shape == Shape::Circle) return (p - center).norm() <= radius;
  // Ray casting handles non-convex CCW polygons too.
  bool inside = false;
  const Index n = vertices.cols();
  for (Index i = 0, j = n - 1; i < n; j = i++) {
    const Eigen::Vector2d a = vertices.col(i), b = vertices.col(j);
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
      inside = !inside;
  }
  if (inside) return true;
  // Boundary counts as inside.
  for (Index i = 0; i < n; ++i) {
    const Eigen::Vector2d a = vertices.col(i), b = vertices.col((i + 1) % n);
    const Eigen::Vector2d ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    if ((a + t * ab - p).norm() <= 1e-12) return true;
  }
  return false;
}

std::vector<Trajectory> parse_csv(std::istream& in, double dt) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader)
    throw Error(ErrorCode::ParseError, std::string("line 1: header must be '") + kHeader + "'");

  struct Actor {
    long long last_frame;
    std::vector<Eigen::Vector4d> states;
    std::string cls;
  };
  std::vector<std::string> order;
  std::map<std::string, Actor> actors;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 10)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 10 fields, got " +
                                             std::to_string(f.size()));
    const std::string& id = f[0];
    if (id.empty()) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": empty actor_id");
    const long long frame = parse_int(f[1], line_no);
    const double x = parse_double(f[2], line_no, "x");
    const double y = parse_double(f[3], line_no, "y");
    const double vx = parse_double(f[4], line_no, "vx");
    const double vy = parse_double(f[5], line_no, "vy");
    parse_double(f[6], line_no, "ax");
    parse_double(f[7], line_no, "ay");
    parse_double(f[8], line_no, "heading");

    auto it = actors.find(id);
    if (it == actors.end()) {
      order.push_back(id);
      it = actors.emplace(id, Actor{frame, {}, f[9]}).first;
    } else if (frame != it->second.last_frame + 1) {
      throw Error(ErrorCode::NonContiguousFrames, id);
    }
    it->second.last_frame = frame;
    it->second.states.emplace_back(x, vx, y, vy);
  }

  std::vector<Trajectory> out;
  for (const auto& id : order) {
    const Actor& a = actors.at(id);
    Trajectory traj;
    traj.id = id;
    traj.dt = dt;
    traj.actor_class = a.cls;
    traj.states.resize(4, static_cast<Index>(a.states.size()));
    for (std::size_t t = 0; t < a.states.size(); ++t) traj.states.col(static_cast<Index>(t)) = a.states[t];
    out.push_back(std::move(traj));
  }
  return out;
}

std::vector<Trajectory> load_csv(const std::filesystem::path& path, double dt) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path.string() + "'");
  return parse_csv(in, dt);
}

void write_csv(std::ostream& out, const std::vector<Trajectory>& trajectories) {
  out << kHeader << '\n';
  for (const auto& traj : trajectories) {
    for (Index t = 0; t < traj.length(); ++t) {
      const auto s = traj.states.col(t);
      double ax = 0, ay = 0;
      if (t + 1 < traj.length() && traj.dt > 0) {
        ax = (traj.states(1, t + 1) - s(1)) / traj.dt;
        ay = (traj.states(3, t + 1) - s(3)) / traj.dt;
      }
      out << traj.id << ',' << t << ',' << format(s(0)) << ',' << format(s(2)) << ','
          << format(s(1)) << ',' << format(s(3)) << ',' << format(ax) << ',' << format(ay)
          << ',' << format(std::atan2(s(3), s(1))) << ',' << traj.actor_class << '\n';
    }
  }
}

void write_csv(const std::filesystem::path& path, const std::vector<Trajectory>& trajectories) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write '" + path.string() + "'");
  write_csv(out, trajectories);
}

std::vector<Trajectory> filter_tasks(const std::vector<Trajectory>& trajectories,
                                     const FilterSpec& spec) {
  std::vector<Trajectory> out;
  for (const auto& traj : trajectories) {
    if (traj.length() < 2) continue;
    if (spec.moving_only) {
      if (traj.actor_class != "car") continue;
      double speed = 0;
      for (Index t = 0; t < traj.length(); ++t)
        speed += std::hypot(traj.states(1, t), traj.states(3, t));
      if (speed / static_cast<double>(traj.length()) < spec.min_speed) continue;
    }
    Index first = -1;
    for (Index t = 0; t < traj.length() && first < 0; ++t)
      if (spec.start.contains(Eigen::Vector2d(traj.states(0, t), traj.states(2, t)))) first = t;
    if (first < 0 || first + 1 >= traj.length()) continue;
    const auto last = traj.states.col(traj.length() - 1);
    if (spec.end && !spec.end->contains(Eigen::Vector2d(last(0), last(2)))) continue;
    Trajectory kept = traj;
    kept.states = traj.states.rightCols(traj.length() - first);
    out.push_back(std::move(kept));
  }
  return out;
}

std::vector<int> synth_modes(const ScenarioSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  return assign_modes(spec, rng);
}

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::CurvedRoad: return "curved_road";
    case ScenarioKind::StopGoLane: return "stop_go_lane";
    case ScenarioKind::Fork: return "fork";
  }
  return "?";
}

ScenarioKind scenario_kind_from_string(std::string_view name) {
  if (name == "curved_road") return ScenarioKind::CurvedRoad;
  if (name == "stop_go_lane") return ScenarioKind::StopGoLane;
  if (name == "fork") return ScenarioKind::Fork;
  throw Error(ErrorCode::ConfigError, "unknown scenario kind '" + std::string(name) + "'");
}

std::vector<Trajectory> synth_scenario(const ScenarioSpec& spec) {
  if (spec.n_trajectories < 6)
    throw Error(ErrorCode::ConfigError, "synthetic scenarios need at least 6 trajectories");
  if (spec.horizon < 1 || !(spec.dt > 0) || !(spec.speed > 0) || spec.noise_sigma < 0)
    throw Error(ErrorCode::ConfigError, "invalid scenario parameters");
  std::mt19937_64 rng(spec.seed);
  const auto modes = assign_modes(spec, rng);
  std::vector<Trajectory> out;
  const double s = spec.noise_sigma;
  for (int i = 0; i < spec.n_trajectories; ++i) {
    Jitter j;
    j.dx = s * normal(rng);
    j.dy = s * normal(rng);
    j.dv = 0.5 * s * normal(rng);
    j.dframes = static_cast<int>(std::lround(2.0 * s * normal(rng)));
    out.push_back(simulate(spec, modes[static_cast<std::size_t>(i)], j, i));
  }
  return out;
}

}  // namespace natproj
