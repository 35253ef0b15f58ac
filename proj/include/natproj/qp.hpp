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

// Convex quadratic programs
//
//   minimize    0.5 x'Px + q'x + constant
//   subject to  A_eq x  = b_eq
//               A_in x <= b_in
//
// solved by a primal-dual interior-point method (Mehrotra predictor-corrector)
// on a regularized sparse quasi-definite KKT system.

#include <string_view>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace natproj {

using SparseMatrixd = Eigen::SparseMatrix<double>;

struct QuadraticProgram {
  SparseMatrixd P;  // symmetric positive semidefinite, both triangles stored
  Eigen::VectorXd q;
  SparseMatrixd A_eq;
  Eigen::VectorXd b_eq;
  SparseMatrixd A_in;
  Eigen::VectorXd b_in;
  double constant = 0.0;

  Eigen::Index num_variables() const { return q.size(); }

  /// Throws DimensionMismatch on inconsistent shapes and NotPSD when P is not
  /// symmetric within 1e-10 or fails a Cholesky factorization after a 1e-10
  /// diagonal shift.
  void validate() const;

  double objective(const Eigen::VectorXd& x) const;
};

enum class QpStatus { Optimal, Infeasible, IterLimit };

std::string_view to_string(QpStatus status);

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y_eq;  // equality multipliers
  Eigen::VectorXd z_in;  // inequality multipliers, >= 0
  double objective = 0.0;
  QpStatus status = QpStatus::IterLimit;
  int iterations = 0;
  /// max of relative primal residual, relative dual residual and relative gap.
  double kkt_residual = 0.0;
  /// For Infeasible results: total constraint violation that a phase-one
  /// problem could not remove (zero when a Farkas certificate ended the solve).
  double infeasibility = 0.0;
};

inline constexpr double kDefaultQpTolerance = 1e-8;
inline constexpr int kDefaultQpMaxIterations = 200;

QpSolution solve_qp(const QuadraticProgram& qp, double tol = kDefaultQpTolerance,
                    int max_iter = kDefaultQpMaxIterations);

/// Convenience constructor from dense data; empty matrices mean "no rows".
QuadraticProgram make_qp(const Eigen::MatrixXd& P, const Eigen::VectorXd& q,
                         const Eigen::MatrixXd& A_eq, const Eigen::VectorXd& b_eq,
                         const Eigen::MatrixXd& A_in, const Eigen::VectorXd& b_in);

}  // namespace natproj
