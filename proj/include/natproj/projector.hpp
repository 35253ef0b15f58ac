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

// Projection of a trajectory into a naturalistic set.
//
//   minimize    sum_t |x_t - x^a_t|^2 + gamma sum_t |u_t|^2
//   subject to  x_{t+1} = A x_t + B u_t,  x_0 = x_init
//               G^j_t y_t <= h^j_t + (1 - s^j_t) S    for enforced t, every cluster j
//               sum_j s^j_t = 1   (or >= 1),  s^j_t in {0, 1}
//
// Frames are enforced at t = frame_skip, 2 frame_skip, ... <= min(H, H_a) on
// the downsampled clock. Frames with a single polytope get plain G y <= h rows
// and no binaries. The mixed-integer problem is solved exactly by best-first
// branch and bound over interior-point QP relaxations.

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "natproj/dynamics.hpp"
#include "natproj/natset.hpp"
#include "natproj/qp.hpp"

namespace natproj {

enum class BinaryMode { AtLeastOne, ExactlyOne };

std::string_view to_string(BinaryMode mode);
BinaryMode binary_mode_from_string(std::string_view name);

struct ProjectionConfig {
  double gamma = 0.1;
  int frame_skip = 1;
  int downsample = 1;
  bool big_m_auto = true;
  double big_m = 1e3;  // used when big_m_auto is false
  BinaryMode binary_mode = BinaryMode::ExactlyOne;
  double mip_gap = 1e-6;
  long node_limit = 100000;
  double time_limit = 600.0;  // seconds
  double qp_tolerance = 1e-9;

  void validate() const;
};

/// One enforced frame of the model.
struct EnforcedFrame {
  Eigen::Index t = 0;           // downsampled frame index
  int k = 1;                    // polytopes at this frame
  Eigen::Index binary_offset = -1;  // first s^j_t column, -1 when k == 1
  std::vector<Eigen::Index> row_begin;  // first A_in row of each polytope
  std::vector<Eigen::Index> row_count;
};

struct MiqpModel {
  LinearDynamics dynamics;
  HullStateMap hull_map;
  Trajectory reference;  // downsampled autonomous trajectory
  Eigen::VectorXd x_init;
  NaturalisticSet set;   // downsampled naturalistic set
  BinaryMode binary_mode = BinaryMode::ExactlyOne;
  double gamma = 0.0;

  Eigen::Index horizon = 0;  // H_a
  Eigen::Index num_binaries = 0;
  std::vector<EnforcedFrame> frames;
  /// Big-M value of each A_in row (0 for rows without a binary).
  Eigen::VectorXd big_m;
  bool has_bound_rows = false;

  /// Binaries relaxed to [0, 1]. Columns: states x_0..x_H, controls
  /// u_0..u_{H-1}, then binaries.
  QuadraticProgram relaxation;

  Eigen::Index state_offset(Eigen::Index t) const { return t * dynamics.state_dim(); }
  Eigen::Index control_offset(Eigen::Index t) const {
    return (horizon + 1) * dynamics.state_dim() + t * dynamics.control_dim();
  }
  Eigen::Index binary_begin() const {
    return (horizon + 1) * dynamics.state_dim() + horizon * dynamics.control_dim();
  }
};

enum class ProjectionStatus { Optimal, GapReached, Infeasible, Limit };

std::string_view to_string(ProjectionStatus status);

struct ProjectionResult {
  ProjectionStatus status = ProjectionStatus::Infeasible;
  bool has_solution = false;
  Trajectory trajectory;     // downsampled clock
  ControlSequence controls;
  std::vector<Eigen::Index> enforced_frames;
  std::vector<int> active_clusters;  // per enforced frame
  Eigen::VectorXd binaries;          // model binary block of the incumbent
  double objective = 0.0;
  double bound = 0.0;
  long nodes_explored = 0;
  long qp_solves = 0;
  double wall_time = 0.0;  // seconds
};

/// Errors: DtMismatch when auto_traj.dt != nset.dt or dyn.dt != nset.dt *
/// downsample; EmptyEnforcementSet when no frame qualifies.
MiqpModel build_model(const NaturalisticSet& nset, const LinearDynamics& dyn,
                      const Trajectory& auto_traj, const Eigen::VectorXd& x_init,
                      const ProjectionConfig& cfg,
                      const HullStateMap& map = HullStateMap::position());

ProjectionResult solve(const MiqpModel& model, const ProjectionConfig& cfg);

/// build_model + solve with x_init = auto_traj state 0.
ProjectionResult project(const NaturalisticSet& nset, const LinearDynamics& dyn,
                         const Trajectory& auto_traj, const ProjectionConfig& cfg,
                         const HullStateMap& map = HullStateMap::position());

/// Continuous QP of the model with every binary fixed; assignment[i] is the
/// selected polytope at model.frames[i] (ignored for k == 1 frames).
QuadraticProgram fixed_assignment_qp(const MiqpModel& model, const std::vector<int>& assignment);

/// Objective of a rollout, sum |x_t - x^a_t|^2 + gamma sum |u_t|^2.
double projection_objective(const MiqpModel& model, const Trajectory& traj,
                            const ControlSequence& u);

}  // namespace natproj
