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

#include <string>

#include <Eigen/Core>

namespace natproj {

/// x_{t+1} = A x_t + B u_t with sampling period dt.
struct LinearDynamics {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  double dt = 0.0;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index control_dim() const { return B.cols(); }
};

/// States stored as columns, x_0 .. x_H. For the planar models the state
/// order is [p_x, v_x, p_y, v_y].
struct Trajectory {
  Eigen::MatrixXd states;
  double dt = 0.0;
  std::string id;
  std::string actor_class = "car";

  Eigen::Index horizon() const { return states.cols() - 1; }
  Eigen::Index length() const { return states.cols(); }
};

/// Controls stored as columns, u_0 .. u_{H-1}.
struct ControlSequence {
  Eigen::MatrixXd controls;

  Eigen::Index length() const { return controls.cols(); }
};

/// Point-mass planar double integrator with state [p_x, v_x, p_y, v_y] and
/// force control [F_x, F_y].
LinearDynamics double_integrator(double dt, double mass = 1.0);

/// Forward simulation; the result has controls.length() + 1 states.
Trajectory rollout(const LinearDynamics& dyn, const Eigen::VectorXd& x0,
                   const ControlSequence& u);

/// Least-squares controls reproducing a trajectory under `dyn`; exact for any
/// trajectory that is dynamically feasible and B has full column rank.
ControlSequence recover_controls(const LinearDynamics& dyn, const Trajectory& traj);

}  // namespace natproj
