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

#include "natproj/projector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>

#include "natproj/error.hpp"
#include "natproj/geometry.hpp"

namespace natproj {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

std::string_view to_string(BinaryMode mode) {
  return mode == BinaryMode::ExactlyOne ? "exactly_one" : "at_least_one";
}

BinaryMode binary_mode_from_string(std::string_view name) {
  if (name == "exactly_one") return BinaryMode::ExactlyOne;
  if (name == "at_least_one") return BinaryMode::AtLeastOne;
  throw Error(ErrorCode::ConfigError, "unknown binary mode '" + std::string(name) + "'");
}

std::string_view to_string(ProjectionStatus status) {
  switch (status) {
    case ProjectionStatus::Optimal: return "Optimal";
    case ProjectionStatus::GapReached: return "GapReached";
    case ProjectionStatus::Infeasible: return "Infeasible";
    case ProjectionStatus::Limit: return "Limit";
  }
  return "?";
}

void ProjectionConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); };
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) fail("gamma must be finite and >= 0");
  if (frame_skip < 1) fail("frame_skip must be >= 1");
  if (downsample < 1) fail("downsample must be >= 1");
  if (!big_m_auto && !(big_m > 0.0)) fail("fixed big-M must be > 0");
  if (!(mip_gap >= 0.0)) fail("mip_gap must be >= 0");
  if (node_limit < 1) fail("node_limit must be >= 1");
  if (!(time_limit > 0.0)) fail("time_limit must be > 0");
  if (!(qp_tolerance > 0.0)) fail("qp_tolerance must be > 0");
}

namespace {

bool same_dt(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

// Substitutes fixed values for some columns. Rows left without free columns
// are checked and dropped; returns nullopt when one of them is violated.
std::optional<QuadraticProgram> restrict_qp(const QuadraticProgram& qp,
                                            const std::vector<Index>& free_cols,
                                            const VectorXd& values /* full length */,
                                            const std::vector<bool>& is_free) {
  const Index n = qp.num_variables();
  std::vector<Index> new_index(n, -1);
  for (std::size_t i = 0; i < free_cols.size(); ++i) new_index[free_cols[i]] = static_cast<Index>(i);
  const Index nf = static_cast<Index>(free_cols.size());

  VectorXd fixed = values;
  for (Index j = 0; j < n; ++j)
    if (is_free[j]) fixed[j] = 0.0;

  QuadraticProgram out;
  const VectorXd Pv = qp.P * fixed;
  out.constant = qp.constant + qp.q.dot(fixed) + 0.5 * fixed.dot(Pv);
  out.q.resize(nf);
  for (Index i = 0; i < nf; ++i) out.q[i] = qp.q[free_cols[i]] + Pv[free_cols[i]];

  std::vector<Triplet> trip;
  for (Index k = 0; k < qp.P.outerSize(); ++k) {
    if (!is_free[k]) continue;
    for (SparseMatrixd::InnerIterator it(qp.P, k); it; ++it)
      if (is_free[it.row()]) trip.emplace_back(new_index[it.row()], new_index[k], it.value());
  }
  out.P.resize(nf, nf);
  out.P.setFromTriplets(trip.begin(), trip.end());

  auto restrict_rows = [&](const SparseMatrixd& A, const VectorXd& b, bool equality,
                           SparseMatrixd& A_out, VectorXd& b_out) {
    VectorXd rhs = b - A * fixed;
    std::vector<Index> free_count(A.rows(), 0);
    for (Index k = 0; k < A.outerSize(); ++k) {
      if (!is_free[k]) continue;
      for (SparseMatrixd::InnerIterator it(A, k); it; ++it)
        if (it.value() != 0.0) ++free_count[it.row()];
    }
    std::vector<Index> row_index(A.rows(), -1);
    Index rows = 0;
    for (Index r = 0; r < A.rows(); ++r) {
      if (free_count[r] > 0) {
        row_index[r] = rows++;
        continue;
      }
      const double scale = 1e-9 * (1.0 + std::abs(b[r]));
      if (equality ? std::abs(rhs[r]) > scale : rhs[r] < -scale) return false;
    }
    std::vector<Triplet> t;
    for (Index k = 0; k < A.outerSize(); ++k) {
      if (!is_free[k]) continue;
      for (SparseMatrixd::InnerIterator it(A, k); it; ++it)
        if (row_index[it.row()] >= 0) t.emplace_back(row_index[it.row()], new_index[k], it.value());
    }
    A_out.resize(rows, nf);
    A_out.setFromTriplets(t.begin(), t.end());
    b_out.resize(rows);
    for (Index r = 0; r < A.rows(); ++r)
      if (row_index[r] >= 0) b_out[row_index[r]] = rhs[r];
    return true;
  };
  if (!restrict_rows(qp.A_eq, qp.b_eq, true, out.A_eq, out.b_eq)) return std::nullopt;
  if (!restrict_rows(qp.A_in, qp.b_in, false, out.A_in, out.b_in)) return std::nullopt;
  return out;
}

// -1 free, 0 or 1 fixed.
using Fixing = std::vector<std::int8_t>;

// Closes a fixing under the per-frame sum rows. Returns false on conflict.
bool propagate(const MiqpModel& model, Fixing& fix) {
  for (const EnforcedFrame& f : model.frames) {
    if (f.binary_offset < 0) continue;
    const Index b0 = f.binary_offset - model.binary_begin();
    int ones = 0, zeros = 0;
    Index last_free = -1;
    for (int j = 0; j < f.k; ++j) {
      const std::int8_t v = fix[b0 + j];
      if (v == 1) ++ones;
      else if (v == 0) ++zeros;
      else last_free = b0 + j;
    }
    if (model.binary_mode == BinaryMode::ExactlyOne) {
      if (ones > 1) return false;
      if (ones == 1) {
        for (int j = 0; j < f.k; ++j)
          if (fix[b0 + j] < 0) fix[b0 + j] = 0;
        continue;
      }
    } else if (ones >= 1) {
      continue;
    }
    if (zeros == f.k) return false;
    if (zeros == f.k - 1) fix[last_free] = 1;
  }
  return true;
}

struct NodeSolve {
  bool feasible = false;
  double objective = 0.0;
  VectorXd x;  // full model vector
};

class NodeSolver {
 public:
  NodeSolver(const MiqpModel& model, const ProjectionConfig& cfg, long& qp_solves)
      : model_(model), cfg_(cfg), qp_solves_(qp_solves) {}

  NodeSolve solve(const Fixing& fix) const {
    const Index n = model_.relaxation.num_variables();
    const Index b0 = model_.binary_begin();
    std::vector<bool> is_free(n, true);
    VectorXd values = VectorXd::Zero(n);
    std::vector<Index> free_cols;
    for (Index j = 0; j < n; ++j) {
      if (j >= b0 && fix[j - b0] >= 0) {
        is_free[j] = false;
        values[j] = fix[j - b0];
      } else {
        free_cols.push_back(j);
      }
    }
    NodeSolve out;
    std::optional<QuadraticProgram> qp = restrict_qp(model_.relaxation, free_cols, values, is_free);
    if (!qp) return out;
    ++qp_solves_;
    const QpSolution sol = solve_qp(*qp, cfg_.qp_tolerance);
    const bool usable = sol.status == QpStatus::Optimal ||
                        (sol.status == QpStatus::IterLimit && sol.kkt_residual <= 1e-6);
    if (!usable) return out;
    out.feasible = true;
    out.objective = sol.objective;
    out.x = values;
    for (std::size_t i = 0; i < free_cols.size(); ++i) out.x[free_cols[i]] = sol.x[static_cast<Index>(i)];
    return out;
  }

 private:
  const MiqpModel& model_;
  const ProjectionConfig& cfg_;
  long& qp_solves_;
};

struct Node {
  Fixing fix;
  double bound;
  long id;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

struct Incumbent {
  bool valid = false;
  double objective = std::numeric_limits<double>::infinity();
  std::vector<int> assignment;
  VectorXd x;
};

std::vector<int> assignment_of(const MiqpModel& model, const Fixing& fix) {
  std::vector<int> a;
  a.reserve(model.frames.size());
  const Index b0 = model.binary_begin();
  for (const EnforcedFrame& f : model.frames) {
    int chosen = 0;
    if (f.binary_offset >= 0)
      for (int j = 0; j < f.k; ++j)
        if (fix[f.binary_offset - b0 + j] == 1) {
          chosen = j;
          break;
        }
    a.push_back(chosen);
  }
  return a;
}

Fixing fixing_of(const MiqpModel& model, const std::vector<int>& assignment) {
  Fixing fix(model.num_binaries, -1);
  const Index b0 = model.binary_begin();
  for (std::size_t i = 0; i < model.frames.size(); ++i) {
    const EnforcedFrame& f = model.frames[i];
    if (f.binary_offset < 0) continue;
    for (int j = 0; j < f.k; ++j) fix[f.binary_offset - b0 + j] = (j == assignment[i]) ? 1 : 0;
  }
  return fix;
}

// Per frame, the allowed polytope of least violation by the relaxed hull
// state. `contained` reports whether every pick holds its point within 1e-6.
std::vector<int> rounding_of(const MiqpModel& model, const Fixing& fix, const VectorXd& x,
                             bool& contained) {
  contained = true;
  std::vector<int> a;
  a.reserve(model.frames.size());
  const Index b0 = model.binary_begin();
  const Index n = model.dynamics.state_dim();
  for (const EnforcedFrame& f : model.frames) {
    if (f.binary_offset < 0) {
      a.push_back(0);
      continue;
    }
    const VectorXd y = model.hull_map.selector * x.segment(model.state_offset(f.t), n);
    const auto& polys = model.set.subsets[f.t].polytopes;
    int best = -1;
    double best_v = std::numeric_limits<double>::infinity();
    for (int j = 0; j < f.k; ++j) {
      const std::int8_t v = fix[f.binary_offset - b0 + j];
      if (v == 0) continue;
      const double viol = v == 1 ? -std::numeric_limits<double>::infinity() : max_violation(polys[j], y);
      if (viol < best_v) {
        best_v = viol;
        best = j;
      }
    }
    if (fix[f.binary_offset - b0 + best] != 1 && best_v > 1e-6) contained = false;
    a.push_back(best);
  }
  return a;
}

}  // namespace

MiqpModel build_model(const NaturalisticSet& nset, const LinearDynamics& dyn,
                      const Trajectory& auto_traj, const VectorXd& x_init,
                      const ProjectionConfig& cfg, const HullStateMap& map) {
  cfg.validate();
  if (!same_dt(auto_traj.dt, nset.dt))
    throw Error(ErrorCode::DtMismatch, "trajectory dt " + std::to_string(auto_traj.dt) +
                                           " differs from set dt " + std::to_string(nset.dt));
  if (!same_dt(dyn.dt, nset.dt * cfg.downsample))
    throw Error(ErrorCode::DtMismatch, "dynamics dt " + std::to_string(dyn.dt) +
                                           " differs from downsampled set dt " +
                                           std::to_string(nset.dt * cfg.downsample));
  const Index n = dyn.state_dim();
  const Index m = dyn.control_dim();
  if (x_init.size() != n || auto_traj.states.rows() != n || map.selector.cols() != n ||
      map.dim() != nset.hull_state_dim)
    throw Error(ErrorCode::DimensionMismatch, "state, hull map and set dimensions disagree");

  MiqpModel model;
  model.dynamics = dyn;
  model.hull_map = map;
  model.reference = downsample(auto_traj, cfg.downsample);
  model.set = downsample(nset, cfg.downsample);
  model.x_init = x_init;
  model.binary_mode = cfg.binary_mode;
  model.gamma = cfg.gamma;
  model.horizon = model.reference.horizon();
  const Index H = model.horizon;
  if (H < 1) throw Error(ErrorCode::HorizonZero, "downsampled trajectory has no transitions");

  const Index last = std::min(model.set.horizon(), H);
  for (Index t = cfg.frame_skip; t <= last; t += cfg.frame_skip) {
    EnforcedFrame f;
    f.t = t;
    f.k = static_cast<int>(model.set.subsets[t].polytopes.size());
    if (f.k == 0)
      throw Error(ErrorCode::DegenerateInput, "set has no polytope at frame " + std::to_string(t));
    model.frames.push_back(f);
  }
  if (model.frames.empty())
    throw Error(ErrorCode::EmptyEnforcementSet, "no frame among frame_skip multiples up to " +
                                                    std::to_string(last));

  const Index ny = map.dim();

  const Index n_cont = (H + 1) * n + H * m;
  Index n_bin = 0;
  for (EnforcedFrame& f : model.frames)
    if (f.k > 1) {
      f.binary_offset = n_cont + n_bin;
      n_bin += f.k;
    }
  model.num_binaries = n_bin;
  const Index nv = n_cont + n_bin;

  QuadraticProgram& qp = model.relaxation;
  std::vector<Triplet> pt;
  qp.q = VectorXd::Zero(nv);
  qp.constant = 0.0;
  for (Index t = 0; t <= H; ++t) {
    const VectorXd& xa = model.reference.states.col(t);
    for (Index i = 0; i < n; ++i) {
      pt.emplace_back(t * n + i, t * n + i, 2.0);
      qp.q[t * n + i] = -2.0 * xa[i];
    }
    qp.constant += xa.squaredNorm();
  }
  if (cfg.gamma > 0.0)
    for (Index k = 0; k < H * m; ++k) pt.emplace_back((H + 1) * n + k, (H + 1) * n + k, 2.0 * cfg.gamma);
  qp.P.resize(nv, nv);
  qp.P.setFromTriplets(pt.begin(), pt.end());

  // x_0 = x_init, x_{t+1} - A x_t - B u_t = 0.
  std::vector<Triplet> et;
  std::vector<double> eb;
  for (Index i = 0; i < n; ++i) {
    et.emplace_back(i, i, 1.0);
    eb.push_back(x_init[i]);
  }
  for (Index t = 0; t < H; ++t) {
    const Index r0 = n + t * n;
    for (Index i = 0; i < n; ++i) {
      et.emplace_back(r0 + i, (t + 1) * n + i, 1.0);
      for (Index j = 0; j < n; ++j)
        if (dyn.A(i, j) != 0.0) et.emplace_back(r0 + i, t * n + j, -dyn.A(i, j));
      for (Index j = 0; j < m; ++j)
        if (dyn.B(i, j) != 0.0) et.emplace_back(r0 + i, model.control_offset(t) + j, -dyn.B(i, j));
      eb.push_back(0.0);
    }
  }

  std::vector<Triplet> it;
  std::vector<double> ib;
  std::vector<double> bigm;
  auto add_in = [&](double rhs, double M) {
    ib.push_back(rhs);
    bigm.push_back(M);
  };
  for (EnforcedFrame& f : model.frames) {
    const auto& polys = model.set.subsets[f.t].polytopes;
    // Bounding box of the frame's polytopes: any feasible hull state at t
    // lies in one of them, so a row relaxed to the box maximum is inactive.
    VectorXd frame_lo = VectorXd::Constant(ny, std::numeric_limits<double>::infinity());
    VectorXd frame_hi = -frame_lo;
    for (const Polytope& p : polys) {
      frame_lo = frame_lo.cwiseMin(p.vertices.rowwise().minCoeff());
      frame_hi = frame_hi.cwiseMax(p.vertices.rowwise().maxCoeff());
    }
    for (int j = 0; j < f.k; ++j) {
      const Polytope& p = polys[j];
      const MatrixXd GC = p.G * map.selector;
      f.row_begin.push_back(static_cast<Index>(ib.size()));
      f.row_count.push_back(p.G.rows());
      for (Index r = 0; r < p.G.rows(); ++r) {
        const Index row = static_cast<Index>(ib.size());
        for (Index c = 0; c < n; ++c)
          if (GC(r, c) != 0.0) it.emplace_back(row, model.state_offset(f.t) + c, GC(r, c));
        if (f.k == 1) {
          add_in(p.h[r], 0.0);
          continue;
        }
        double M = cfg.big_m;
        if (cfg.big_m_auto) {
          // The largest value of a linear row over the box sits at a corner
          // picked coordinate-wise by the sign of the row.
          double worst = -p.h[r];
          for (Index d = 0; d < ny; ++d)
            worst += p.G(r, d) * (p.G(r, d) >= 0.0 ? frame_hi[d] : frame_lo[d]);
          M = std::max(1.0, 1.1 * worst);
        }
        it.emplace_back(row, f.binary_offset + j, M);
        add_in(p.h[r] + M, M);
      }
    }
    if (f.k > 1) {
      if (cfg.binary_mode == BinaryMode::ExactlyOne) {
        const Index row = static_cast<Index>(eb.size());
        for (int j = 0; j < f.k; ++j) et.emplace_back(row, f.binary_offset + j, 1.0);
        eb.push_back(1.0);
      } else {
        const Index row = static_cast<Index>(ib.size());
        for (int j = 0; j < f.k; ++j) it.emplace_back(row, f.binary_offset + j, -1.0);
        add_in(-1.0, 0.0);
      }
    }
  }
  // 0 <= s <= 1.
  for (Index b = n_cont; b < nv; ++b) {
    it.emplace_back(static_cast<Index>(ib.size()), b, 1.0);
    add_in(1.0, 0.0);
    it.emplace_back(static_cast<Index>(ib.size()), b, -1.0);
    add_in(0.0, 0.0);
  }
  model.has_bound_rows = n_bin > 0;

  qp.A_eq.resize(static_cast<Index>(eb.size()), nv);
  qp.A_eq.setFromTriplets(et.begin(), et.end());
  qp.b_eq = Eigen::Map<const VectorXd>(eb.data(), static_cast<Index>(eb.size()));
  qp.A_in.resize(static_cast<Index>(ib.size()), nv);
  qp.A_in.setFromTriplets(it.begin(), it.end());
  qp.b_in = Eigen::Map<const VectorXd>(ib.data(), static_cast<Index>(ib.size()));
  model.big_m = Eigen::Map<const VectorXd>(bigm.data(), static_cast<Index>(bigm.size()));
  return model;
}

QuadraticProgram fixed_assignment_qp(const MiqpModel& model, const std::vector<int>& assignment) {
  if (assignment.size() != model.frames.size())
    throw Error(ErrorCode::DimensionMismatch, "assignment length differs from enforced frames");
  const Fixing fix = fixing_of(model, assignment);
  const Index n = model.relaxation.num_variables();
  const Index b0 = model.binary_begin();
  std::vector<bool> is_free(n, true);
  VectorXd values = VectorXd::Zero(n);
  std::vector<Index> free_cols;
  for (Index j = 0; j < n; ++j) {
    if (j >= b0) {
      is_free[j] = false;
      values[j] = fix[j - b0];
    } else {
      free_cols.push_back(j);
    }
  }
  std::optional<QuadraticProgram> qp = restrict_qp(model.relaxation, free_cols, values, is_free);
  if (!qp) throw Error(ErrorCode::Infeasible, "assignment violates the binary sum rows");
  return *qp;
}

double projection_objective(const MiqpModel& model, const Trajectory& traj, const ControlSequence& u) {
  const Index len = std::min(traj.length(), model.reference.length());
  double obj = 0.0;
  for (Index t = 0; t < len; ++t) obj += (traj.states.col(t) - model.reference.states.col(t)).squaredNorm();
  return obj + model.gamma * u.controls.squaredNorm();
}

ProjectionResult solve(const MiqpModel& model, const ProjectionConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  ProjectionResult result;
  for (const EnforcedFrame& f : model.frames) result.enforced_frames.push_back(f.t);
  NodeSolver solver(model, cfg, result.qp_solves);
  const Index b0 = model.binary_begin();
  const double inf = std::numeric_limits<double>::infinity();

  Incumbent inc;
  auto gap_abs = [&] { return cfg.mip_gap * std::max(1.0, std::abs(inc.objective)); };
  auto offer = [&](const NodeSolve& s, const std::vector<int>& assignment) {
    if (!s.feasible) return;
    const double tie = 1e-9 * std::max(1.0, std::abs(inc.objective));
    const bool better = !inc.valid || s.objective < inc.objective - tie ||
                        (s.objective <= inc.objective + tie && assignment < inc.assignment);
    if (!better) return;
    inc.valid = true;
    inc.objective = s.objective;
    inc.assignment = assignment;
    inc.x = s.x;
  };

  // Nearest-cluster seed.
  if (model.num_binaries > 0) {
    std::vector<int> seed;
    for (const EnforcedFrame& f : model.frames) {
      const VectorXd y = model.hull_map.selector * model.reference.states.col(f.t);
      const auto& polys = model.set.subsets[f.t].polytopes;
      int best = 0;
      double best_d = inf;
      for (int j = 0; j < f.k; ++j) {
        const double d = distance(polys[j], y);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      seed.push_back(best);
    }
    offer(solver.solve(fixing_of(model, seed)), seed);
  }

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long next_id = 0;
  double dropped_bound = inf;  // least bound among pruned nodes
  bool root_infeasible = false;
  bool hit_limit = false;
  {
    Fixing root(model.num_binaries, -1);
    if (propagate(model, root)) open.push({std::move(root), -inf, next_id++});
  }

  while (!open.empty()) {
    if (inc.valid && open.top().bound >= inc.objective - gap_abs()) {
      dropped_bound = std::min(dropped_bound, open.top().bound);
      open.pop();
      continue;
    }
    if (result.nodes_explored >= cfg.node_limit || elapsed() >= cfg.time_limit) {
      hit_limit = true;
      break;
    }
    Node node = open.top();
    open.pop();
    const NodeSolve s = solver.solve(node.fix);
    ++result.nodes_explored;
    if (!s.feasible) {
      if (node.id == 0) root_infeasible = true;
      continue;
    }
    const double bound = std::max(node.bound, s.objective);
    if (inc.valid && bound >= inc.objective - gap_abs()) {
      dropped_bound = std::min(dropped_bound, bound);
      continue;
    }

    // Earliest frame holding a fractional binary, then its most fractional one.
    Index branch = -1;
    bool all_fixed = true;
    double worst_frac = 0.0;
    for (const EnforcedFrame& f : model.frames) {
      if (f.binary_offset < 0) continue;
      for (int j = 0; j < f.k; ++j) {
        const Index b = f.binary_offset - b0 + j;
        if (node.fix[b] >= 0) continue;
        all_fixed = false;
        const double v = s.x[f.binary_offset + j];
        const double frac = std::min(v, 1.0 - v);
        if (frac > 1e-6 && frac > worst_frac) {
          worst_frac = frac;
          branch = b;
        }
      }
      if (branch >= 0) break;
    }

    if (all_fixed) {
      offer(s, assignment_of(model, node.fix));
      continue;
    }
    if (branch >= 0) {
      // Fractional binaries often sit on frames whose hull state already lies
      // in some polytope; reassigning them costs nothing.
      bool contained = false;
      const std::vector<int> r = rounding_of(model, node.fix, s.x, contained);
      if (contained || node.id == 0) {
        const NodeSolve rs = solver.solve(fixing_of(model, r));
        offer(rs, r);
        if (rs.feasible && rs.objective - bound <= gap_abs()) {
          dropped_bound = std::min(dropped_bound, bound);
          continue;
        }
      }
    }
    if (branch < 0) {
      // Integral relaxation: round and solve the fixed-assignment QP.
      Fixing rounded = node.fix;
      for (Index b = 0; b < model.num_binaries; ++b)
        if (rounded[b] < 0) rounded[b] = s.x[b0 + b] >= 0.5 ? 1 : 0;
      NodeSolve fixed_solve;
      if (propagate(model, rounded)) fixed_solve = solver.solve(rounded);
      if (fixed_solve.feasible) offer(fixed_solve, assignment_of(model, rounded));
      if (fixed_solve.feasible && fixed_solve.objective - bound <= gap_abs()) {
        dropped_bound = std::min(dropped_bound, bound);
        continue;
      }
      // Rounding lost too much; keep branching on the least settled binary.
      for (Index b = 0; b < model.num_binaries; ++b)
        if (node.fix[b] < 0) {
          const double v = s.x[b0 + b];
          const double frac = std::min(v, 1.0 - v);
          if (branch < 0 || frac > worst_frac) {
            worst_frac = frac;
            branch = b;
          }
        }
    }
    for (std::int8_t value : {std::int8_t{1}, std::int8_t{0}}) {
      Fixing child = node.fix;
      child[branch] = value;
      if (propagate(model, child)) open.push({std::move(child), bound, next_id++});
    }
  }

  double bound = dropped_bound;
  while (!open.empty()) {
    bound = std::min(bound, open.top().bound);
    open.pop();
  }

  result.wall_time = elapsed();
  if (!inc.valid) {
    result.status = hit_limit ? ProjectionStatus::Limit : ProjectionStatus::Infeasible;
    result.bound = (hit_limit || root_infeasible) ? bound : inf;
    result.objective = inf;
    return result;
  }

  const Index m = model.dynamics.control_dim();
  const Index H = model.horizon;
  result.controls.controls.resize(m, H);
  for (Index t = 0; t < H; ++t) result.controls.controls.col(t) = inc.x.segment(model.control_offset(t), m);
  result.trajectory = rollout(model.dynamics, model.x_init, result.controls);
  result.trajectory.id = model.reference.id;
  result.trajectory.actor_class = model.reference.actor_class;
  result.has_solution = true;
  result.active_clusters = inc.assignment;
  result.binaries = inc.x.tail(model.num_binaries);
  result.objective = projection_objective(model, result.trajectory, result.controls);
  result.bound = std::min({bound, inc.objective, result.objective});
  const double gap = result.objective - result.bound;
  if (hit_limit)
    result.status = ProjectionStatus::Limit;
  else if (gap <= 1e-9 * std::max(1.0, std::abs(result.objective)))
    result.status = ProjectionStatus::Optimal;
  else
    result.status = ProjectionStatus::GapReached;
  return result;
}

ProjectionResult project(const NaturalisticSet& nset, const LinearDynamics& dyn,
                         const Trajectory& auto_traj, const ProjectionConfig& cfg,
                         const HullStateMap& map) {
  if (auto_traj.length() < 1) throw Error(ErrorCode::HorizonZero, "empty trajectory");
  const MiqpModel model = build_model(nset, dyn, auto_traj, auto_traj.states.col(0), cfg, map);
  return solve(model, cfg);
}

}  // namespace natproj
