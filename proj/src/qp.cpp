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

#include "natproj/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/SparseCholesky>

#include "natproj/error.hpp"

namespace natproj {

namespace {

using Eigen::Index;
using Eigen::VectorXd;

constexpr double kPrimalReg = 1e-9;
constexpr double kDualReg = 1e-9;
constexpr int kRefinementSteps = 3;

double inf_norm(const VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

// Factors [[P + G'DG + rI, A'], [A, -dI]] and solves it with iterative
// refinement against the unregularized matrix.
class KktSystem {
 public:
  KktSystem(const SparseMatrixd& P, const SparseMatrixd& A, const SparseMatrixd& G)
      : P_(P), A_(A), G_(G), Gt_(G.transpose()), n_(P.rows()), p_(A.rows()) {}

  bool factor(const VectorXd& d) {
    SparseMatrixd H = P_;
    if (G_.rows() > 0) H += SparseMatrixd(Gt_ * d.asDiagonal() * G_);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(H.nonZeros() + 2 * A_.nonZeros() + n_ + p_));
    for (Index k = 0; k < H.outerSize(); ++k)
      for (SparseMatrixd::InnerIterator it(H, k); it; ++it)
        trip.emplace_back(it.row(), it.col(), it.value());
    for (Index k = 0; k < A_.outerSize(); ++k)
      for (SparseMatrixd::InnerIterator it(A_, k); it; ++it) {
        trip.emplace_back(n_ + it.row(), it.col(), it.value());
        trip.emplace_back(it.col(), n_ + it.row(), it.value());
      }
    K0_.resize(n_ + p_, n_ + p_);
    K0_.setFromTriplets(trip.begin(), trip.end());
    for (Index i = 0; i < n_; ++i) trip.emplace_back(i, i, kPrimalReg);
    for (Index i = 0; i < p_; ++i) trip.emplace_back(n_ + i, n_ + i, -kDualReg);
    K_.resize(n_ + p_, n_ + p_);
    K_.setFromTriplets(trip.begin(), trip.end());
    if (!analyzed_ || K_.nonZeros() != pattern_nnz_) {
      ldlt_.analyzePattern(K_);
      analyzed_ = true;
      pattern_nnz_ = K_.nonZeros();
    }
    ldlt_.factorize(K_);
    return ldlt_.info() == Eigen::Success;
  }

  VectorXd solve(const VectorXd& rhs) const {
    VectorXd sol = ldlt_.solve(rhs);
    const double floor = 1e-15 * (1.0 + rhs.cwiseAbs().maxCoeff());
    for (int i = 0; i < kRefinementSteps; ++i) {
      const VectorXd r = rhs - K0_ * sol;
      if (r.cwiseAbs().maxCoeff() <= floor) break;
      sol += ldlt_.solve(r);
    }
    return sol;
  }

 private:
  const SparseMatrixd& P_;
  const SparseMatrixd& A_;
  const SparseMatrixd& G_;
  SparseMatrixd Gt_;
  Index n_, p_;
  SparseMatrixd K_, K0_;
  Eigen::SimplicialLDLT<SparseMatrixd, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  bool analyzed_ = false;
  Index pattern_nnz_ = 0;
};

double max_step(const VectorXd& v, const VectorXd& dv) {
  double alpha = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0) alpha = std::min(alpha, -v(i) / dv(i));
  return alpha;
}

struct Residuals {
  double primal = 0, dual = 0, gap = 0;
  double kkt() const { return std::max({primal, dual, gap}); }
};

QpSolution solve_phase_one(const QuadraticProgram& qp, double tol, int max_iter);

// Starts from the rows with z > s as equalities and refines the working set:
// the most violated inactive row joins, the most negative multiplier leaves.
// Degenerate optima (zero slack and zero multiplier) leave the interior-point
// iterate well inside the feasible set, and large multipliers on nearly
// parallel rows blur the initial guess. A certified KKT point replaces the
// iterate; otherwise a feasible point that is no worse does.
void polish(const QuadraticProgram& qp, const VectorXd& s, const VectorXd& z,
            double primal_scale, VectorXd& x) {
  const Index n = qp.num_variables();
  const Index p = qp.A_eq.rows();
  const Index m = s.size();
  std::vector<bool> in_set(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) in_set[static_cast<std::size_t>(i)] = z(i) > s(i);
  const SparseMatrixd Gt = qp.A_in.transpose();
  const double limit = 1e-11 * primal_scale;
  const double x_objective = qp.objective(x);
  constexpr int kMaxSwaps = 20;
  for (int swap = 0; swap <= kMaxSwaps; ++swap) {
    std::vector<Index> active;
    for (Index i = 0; i < m; ++i)
      if (in_set[static_cast<std::size_t>(i)]) active.push_back(i);
    std::vector<Eigen::Triplet<double>> trip;
    for (Index k = 0; k < qp.A_eq.outerSize(); ++k)
      for (SparseMatrixd::InnerIterator it(qp.A_eq, k); it; ++it)
        trip.emplace_back(it.row(), it.col(), it.value());
    VectorXd rhs(p + static_cast<Index>(active.size()));
    rhs.head(p) = qp.b_eq;
    for (std::size_t r = 0; r < active.size(); ++r) {
      const Index row = p + static_cast<Index>(r);
      for (SparseMatrixd::InnerIterator it(Gt, active[r]); it; ++it)
        trip.emplace_back(row, it.row(), it.value());
      rhs(row) = qp.b_in(active[r]);
    }
    SparseMatrixd A(rhs.size(), n);
    A.setFromTriplets(trip.begin(), trip.end());
    KktSystem kkt(qp.P, A, SparseMatrixd(0, n));
    if (!kkt.factor(VectorXd())) return;
    VectorXd full(n + rhs.size());
    full.head(n) = -qp.q;
    full.tail(rhs.size()) = rhs;
    const VectorXd sol = kkt.solve(full);
    if (!sol.allFinite()) return;
    const VectorXd cand = sol.head(n);
    if (p > 0 && inf_norm(qp.A_eq * cand - qp.b_eq) > limit) return;

    const VectorXd slack = qp.A_in * cand - qp.b_in;
    Index worst_row = -1;
    double worst_violation = limit;
    for (Index i = 0; i < m; ++i)
      if (!in_set[static_cast<std::size_t>(i)] && slack(i) > worst_violation) {
        worst_violation = slack(i);
        worst_row = i;
      }
    if (worst_row >= 0) {
      in_set[static_cast<std::size_t>(worst_row)] = true;
      continue;
    }
    const VectorXd y = sol.tail(static_cast<Index>(active.size()));
    const double dual_floor = -1e-9 * std::max(1.0, inf_norm(y));
    Index drop = -1;
    double most_negative = dual_floor;
    for (Index r = 0; r < y.size(); ++r)
      if (y(r) < most_negative) {
        most_negative = y(r);
        drop = r;
      }
    const bool feasible = m == 0 || slack.maxCoeff() <= limit;
    if (drop < 0) {
      if (feasible) x = cand;
      return;
    }
    if (feasible && qp.objective(cand) <= x_objective) x = cand;
    in_set[static_cast<std::size_t>(active[static_cast<std::size_t>(drop)])] = false;
  }
}

QpSolution interior_point(const QuadraticProgram& qp, double tol, int max_iter,
                          bool classify_failures) {
  const Index n = qp.num_variables();
  const Index p = qp.A_eq.rows();
  const Index m = qp.A_in.rows();
  const SparseMatrixd& P = qp.P;
  const SparseMatrixd& A = qp.A_eq;
  const SparseMatrixd& G = qp.A_in;
  const VectorXd& b = qp.b_eq;
  const VectorXd& h = qp.b_in;

  const double primal_scale = 1.0 + std::max(inf_norm(b), inf_norm(h));
  const double dual_scale = 1.0 + inf_norm(qp.q);

  KktSystem kkt(P, A, G);
  QpSolution sol;

  // Initial point from the least-squares problem with unit scaling.
  VectorXd x(n), y(p), z(m), s(m);
  {
    if (!kkt.factor(VectorXd::Ones(m)))
      throw Error(ErrorCode::NotPSD, "KKT factorization failed at the initial point");
    VectorXd rhs(n + p);
    rhs.head(n) = -qp.q;
    if (m > 0) rhs.head(n) += G.transpose() * h;
    rhs.tail(p) = b;
    const VectorXd xy = kkt.solve(rhs);
    x = xy.head(n);
    y = xy.tail(p);
    if (m > 0) {
      const VectorXd r = G * x - h;
      s = -r;
      z = r;
      const double ap = -s.minCoeff();
      if (ap >= 0) s.array() += 1.0 + ap;
      const double ad = -z.minCoeff();
      if (ad >= 0) z.array() += 1.0 + ad;
    }
  }

  double best_kkt = std::numeric_limits<double>::infinity();
  VectorXd best_x = x, best_y = y, best_z = z;
  std::vector<double> history;
  bool stalled = false;
  int iter = 0;
  for (; iter <= max_iter; ++iter) {
    const VectorXd rd = P * x + qp.q + A.transpose() * y + G.transpose() * z;
    const VectorXd rp_eq = A * x - b;
    const VectorXd rp_in = G * x + s - h;
    const double mu = m > 0 ? s.dot(z) / static_cast<double>(m) : 0.0;

    Residuals res;
    res.primal = std::max(inf_norm(rp_eq), inf_norm(rp_in)) / primal_scale;
    res.dual = inf_norm(rd) / dual_scale;
    const double obj = 0.5 * x.dot(P * x) + qp.q.dot(x);
    res.gap = m > 0 ? s.dot(z) / (1.0 + std::abs(obj)) : 0.0;
    sol.kkt_residual = res.kkt();
    if (res.kkt() <= tol) {
      sol.status = QpStatus::Optimal;
      break;
    }

    // Diverging multipliers along a Farkas direction.
    if (m + p > 0) {
      const double w = std::max(inf_norm(y), inf_norm(z));
      const double value = b.dot(y) + h.dot(z);
      if (w > 1e6 && value < -1e-6 * w) {
        const VectorXd ray = A.transpose() * y + G.transpose() * z;
        if (inf_norm(ray) <= 1e-9 * w) {
          sol.status = QpStatus::Infeasible;
          break;
        }
      }
    }

    history.push_back(res.kkt());
    if (res.kkt() < best_kkt) {
      best_kkt = res.kkt();
      best_x = x;
      best_y = y;
      best_z = z;
    }
    if (history.size() > 30 &&
        best_kkt > 0.5 * history[history.size() - 16]) {
      stalled = true;
      break;
    }
    if (iter == max_iter) break;

    const VectorXd d = m > 0 ? VectorXd((z.array() / s.array()).matrix()) : VectorXd();
    if (!kkt.factor(d)) {
      stalled = true;
      break;
    }

    auto direction = [&](const VectorXd& rc, VectorXd& dx, VectorXd& dy, VectorXd& dz,
                         VectorXd& ds) {
      VectorXd rhs(n + p);
      rhs.head(n) = -rd;
      if (m > 0) {
        const VectorXd t = (d.array() * rp_in.array() + rc.array() / s.array()).matrix();
        rhs.head(n) -= G.transpose() * t;
      }
      rhs.tail(p) = -rp_eq;
      const VectorXd sol_xy = kkt.solve(rhs);
      dx = sol_xy.head(n);
      dy = sol_xy.tail(p);
      if (m > 0) {
        const VectorXd gdx = G * dx;
        dz = (d.array() * (gdx + rp_in).array() + rc.array() / s.array()).matrix();
        ds = -rp_in - gdx;
      } else {
        dz.resize(0);
        ds.resize(0);
      }
    };

    VectorXd dx, dy, dz, ds;
    double alpha = 1.0;
    if (m > 0) {
      const VectorXd rc_aff = -(s.array() * z.array()).matrix();
      direction(rc_aff, dx, dy, dz, ds);
      const double ap = std::min(1.0, max_step(s, ds));
      const double ad = std::min(1.0, max_step(z, dz));
      const double mu_aff = (s + ap * ds).dot(z + ad * dz) / static_cast<double>(m);
      const double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3);
      const VectorXd rc = (-(s.array() * z.array()) - ds.array() * dz.array() +
                           sigma * mu)
                              .matrix();
      direction(rc, dx, dy, dz, ds);
      alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));
    } else {
      direction(VectorXd(), dx, dy, dz, ds);
    }
    if (!(alpha > 1e-12)) {
      stalled = true;
      break;
    }
    x += alpha * dx;
    y += alpha * dy;
    if (m > 0) {
      z += alpha * dz;
      s += alpha * ds;
    }
  }

  if (sol.status == QpStatus::IterLimit && best_kkt < sol.kkt_residual) {
    // Late iterations can lose accuracy; report the best point seen.
    x = best_x;
    y = best_y;
    z = best_z;
    sol.kkt_residual = best_kkt;
  }
  if (sol.status == QpStatus::Optimal && m > 0) polish(qp, s, z, primal_scale, x);
  sol.x = x;
  sol.y_eq = y;
  sol.z_in = z;
  sol.iterations = std::min(iter, max_iter);
  sol.objective = qp.objective(x);
  if (sol.status == QpStatus::IterLimit && classify_failures && (stalled || iter > 0)) {
    const QpSolution phase1 = solve_phase_one(qp, tol, max_iter);
    if (phase1.status == QpStatus::Optimal &&
        phase1.objective > std::max(1e-6, 100 * tol) * primal_scale) {
      sol.status = QpStatus::Infeasible;
      sol.infeasibility = phase1.objective;
    }
  }
  return sol;
}

// minimize sum(t) + 0.5 r |x|^2  s.t.  A x + t+ - t- = b,  G x - t <= h,  t >= 0.
QpSolution solve_phase_one(const QuadraticProgram& qp, double tol, int max_iter) {
  const Index n = qp.num_variables();
  const Index p = qp.A_eq.rows();
  const Index m = qp.A_in.rows();
  const Index nt = m + 2 * p;
  const Index total = n + nt;
  using T = Eigen::Triplet<double>;

  QuadraticProgram ph;
  std::vector<T> pt;
  for (Index i = 0; i < n; ++i) pt.emplace_back(i, i, 1e-8);
  ph.P.resize(total, total);
  ph.P.setFromTriplets(pt.begin(), pt.end());
  ph.q = VectorXd::Zero(total);
  ph.q.tail(nt).setOnes();

  std::vector<T> at;
  for (Index k = 0; k < qp.A_eq.outerSize(); ++k)
    for (SparseMatrixd::InnerIterator it(qp.A_eq, k); it; ++it)
      at.emplace_back(it.row(), it.col(), it.value());
  for (Index i = 0; i < p; ++i) {
    at.emplace_back(i, n + m + i, 1.0);
    at.emplace_back(i, n + m + p + i, -1.0);
  }
  ph.A_eq.resize(p, total);
  ph.A_eq.setFromTriplets(at.begin(), at.end());
  ph.b_eq = qp.b_eq;

  std::vector<T> gt;
  for (Index k = 0; k < qp.A_in.outerSize(); ++k)
    for (SparseMatrixd::InnerIterator it(qp.A_in, k); it; ++it)
      gt.emplace_back(it.row(), it.col(), it.value());
  for (Index i = 0; i < m; ++i) gt.emplace_back(i, n + i, -1.0);
  for (Index i = 0; i < nt; ++i) gt.emplace_back(m + i, n + i, -1.0);
  ph.A_in.resize(m + nt, total);
  ph.A_in.setFromTriplets(gt.begin(), gt.end());
  ph.b_in = VectorXd::Zero(m + nt);
  ph.b_in.head(m) = qp.b_in;

  QpSolution s = interior_point(ph, tol, std::max(max_iter, 100), false);
  s.objective = s.x.tail(nt).sum();
  return s;
}

}  // namespace

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal: return "Optimal";
    case QpStatus::Infeasible: return "Infeasible";
    case QpStatus::IterLimit: return "IterLimit";
  }
  return "Unknown";
}

void QuadraticProgram::validate() const {
  const Index n = q.size();
  if (P.rows() != n || P.cols() != n)
    throw Error(ErrorCode::DimensionMismatch, "P must be n x n with n = q.size()");
  if (A_eq.cols() != n || A_eq.rows() != b_eq.size())
    throw Error(ErrorCode::DimensionMismatch, "equality block has inconsistent shape");
  if (A_in.cols() != n || A_in.rows() != b_in.size())
    throw Error(ErrorCode::DimensionMismatch, "inequality block has inconsistent shape");
  const SparseMatrixd asym = P - SparseMatrixd(P.transpose());
  for (Index k = 0; k < asym.outerSize(); ++k)
    for (SparseMatrixd::InnerIterator it(asym, k); it; ++it)
      if (std::abs(it.value()) > 1e-10)
        throw Error(ErrorCode::NotPSD, "P is not symmetric");
  SparseMatrixd shifted = P;
  for (Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += 1e-10;
  Eigen::SimplicialLLT<SparseMatrixd> llt(shifted);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::NotPSD, "P is not positive semidefinite");
}

double QuadraticProgram::objective(const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(P * x) + q.dot(x) + constant;
}

QpSolution solve_qp(const QuadraticProgram& qp, double tol, int max_iter) {
  qp.validate();
  return interior_point(qp, tol, max_iter, true);
}

QuadraticProgram make_qp(const Eigen::MatrixXd& P, const Eigen::VectorXd& q,
                         const Eigen::MatrixXd& A_eq, const Eigen::VectorXd& b_eq,
                         const Eigen::MatrixXd& A_in, const Eigen::VectorXd& b_in) {
  const Index n = q.size();
  QuadraticProgram qp;
  qp.P = P.sparseView();
  qp.q = q;
  qp.A_eq = A_eq.size() ? SparseMatrixd(A_eq.sparseView()) : SparseMatrixd(0, n);
  qp.b_eq = b_eq;
  qp.A_in = A_in.size() ? SparseMatrixd(A_in.sparseView()) : SparseMatrixd(0, n);
  qp.b_in = b_in;
  return qp;
}

}  // namespace natproj
