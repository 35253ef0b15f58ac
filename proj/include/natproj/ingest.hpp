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

// Trajectory ingestion: the CSV interchange format, start/end-region task
// filtering and seeded synthetic scenes.
//
// CSV header (exact order):
//   actor_id,frame,x,y,vx,vy,ax,ay,heading,class
// Rows of one actor must have consecutive increasing frames. Trajectory states
// are [x, vx, y, vy]; acceleration and heading are carried by the format but
// not by Trajectory.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "natproj/dynamics.hpp"

namespace natproj {

inline constexpr double kDatasetPeriod = 1.0 / 25.0;

struct RegionSpec {
  enum class Shape { Circle, Polygon };

  Shape shape = Shape::Circle;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 1.0;
  Eigen::MatrixXd vertices;  // 2 x n, CCW

  static RegionSpec circle(const Eigen::Vector2d& center, double radius);
  static RegionSpec polygon(const Eigen::MatrixXd& vertices);

  bool contains(const Eigen::Vector2d& p) const;
};

struct FilterSpec {
  RegionSpec start;
  std::optional<RegionSpec> end;
  bool moving_only = true;
  double min_speed = 0.5;  // m/s
};

std::vector<Trajectory> parse_csv(std::istream& in, double dt = kDatasetPeriod);
std::vector<Trajectory> load_csv(const std::filesystem::path& path, double dt = kDatasetPeriod);
void write_csv(std::ostream& out, const std::vector<Trajectory>& trajectories);
void write_csv(const std::filesystem::path& path, const std::vector<Trajectory>& trajectories);

/// Keeps moving cars whose first position inside `start` exists and, when an
/// end region is given, whose final position lies in it. Kept trajectories are
/// re-indexed so that the first in-start frame is t = 0. Order is preserved.
std::vector<Trajectory> filter_tasks(const std::vector<Trajectory>& trajectories,
                                     const FilterSpec& spec);

enum class ScenarioKind { CurvedRoad, StopGoLane, Fork };

std::string_view to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(std::string_view name);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::Fork;
  int n_trajectories = 63;
  double noise_sigma = 0.3;  // meters
  std::uint64_t seed = 0;
  int horizon = 300;  // steps; trajectories have horizon + 1 states
  double dt = kDatasetPeriod;
  double speed = 8.0;  // m/s nominal
  int branches = 3;    // fork only
  int split_frame = 100;
  std::vector<double> proportions;  // per branch / mode; empty means uniform
};

/// Double-integrator rollouts (unit mass) under piecewise feedback controls.
/// Every trajectory is exactly reproduced by rolling out its own controls.
/// Modes are apportioned by largest remainder and assigned in shuffled order.
std::vector<Trajectory> synth_scenario(const ScenarioSpec& spec);

/// Branch or mode index of every trajectory synth_scenario(spec) returns, in
/// the same order.
std::vector<int> synth_modes(const ScenarioSpec& spec);

}  // namespace natproj
