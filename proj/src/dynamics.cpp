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

#include "natproj/dynamics.hpp"

#include <Eigen/QR>

#include "natproj/error.hpp"

namespace natproj {

LinearDynamics double_integrator(double dt, double mass) {
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositive, "dt must be positive");
  if (!(mass > 0.0)) throw Error(ErrorCode::NonPositive, "mass must be positive");
  LinearDynamics dyn;
  dyn.dt = dt;
  dyn.A = Eigen::Matrix4d::Identity();
  dyn.A(0, 1) = dt;
  dyn.A(2, 3) = dt;
  dyn.B = Eigen::MatrixXd::Zero(4, 2);
  dyn.B(1, 0) = dt / mass;
  dyn.B(3, 1) = dt / mass;
  return dyn;
}

Trajectory rollout(const LinearDynamics& dyn, const Eigen::VectorXd& x0,
                   const ControlSequence& u) {
  const Eigen::Index n = dyn.state_dim();
  if (dyn.A.cols() != n || dyn.B.rows() != n || x0.size() != n ||
      (u.length() > 0 && u.controls.rows() != dyn.control_dim()))
    throw Error(ErrorCode::DimensionMismatch, "rollout dimensions are inconsistent");
  Trajectory traj;
  traj.dt = dyn.dt;
  traj.states.resize(n, u.length() + 1);
  traj.states.col(0) = x0;
  for (Eigen::Index t = 0; t < u.length(); ++t)
    traj.states.col(t + 1) = dyn.A * traj.states.col(t) + dyn.B * u.controls.col(t);
  return traj;
}

ControlSequence recover_controls(const LinearDynamics& dyn, const Trajectory& traj) {
  if (traj.states.rows() != dyn.state_dim())
    throw Error(ErrorCode::DimensionMismatch, "trajectory state dimension mismatch");
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(dyn.B);
  ControlSequence u;
  u.controls.resize(dyn.control_dim(), traj.horizon());
  for (Eigen::Index t = 0; t < traj.horizon(); ++t)
    u.controls.col(t) =
        qr.solve(traj.states.col(t + 1) - dyn.A * traj.states.col(t));
  return u;
}

}  // namespace natproj
