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

#include "natproj/natset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "natproj/error.hpp"

namespace natproj {

namespace {

using Eigen::Index;

bool is_kmeans(ClusterAlgorithm a) {
  return a == ClusterAlgorithm::KMeans || a == ClusterAlgorithm::KMeansConstrained;
}

struct ClusterHull {
  std::size_t size;
  Eigen::VectorXd centroid;
  Polytope hull;
};

// Returns false when the frame violates the size condition.
bool build_subset(const Eigen::MatrixXd& hull_states, const ClustererConfig& config,
                  NaturalisticSubset& subset) {
  const Index m = hull_states.cols();
  if (m == 0) return false;
  if (is_kmeans(config.algorithm) && m < static_cast<Index>(config.k) * config.min_cluster_size)
    return false;
  const ClusterAssignment assignment = cluster(hull_states, config);
  if (assignment.k() == 0) return false;

  std::vector<ClusterHull> hulls;
  for (const auto& set : assignment.index_sets) {
    if (static_cast<int>(set.size()) < config.min_cluster_size) return false;
    Eigen::MatrixXd pts(hull_states.rows(), static_cast<Index>(set.size()));
    for (std::size_t i = 0; i < set.size(); ++i) pts.col(static_cast<Index>(i)) = hull_states.col(set[i]);
    hulls.push_back({set.size(), pts.rowwise().mean(), convex_hull(pts, config.min_cluster_size)});
  }
  std::stable_sort(hulls.begin(), hulls.end(), [](const ClusterHull& a, const ClusterHull& b) {
    if (a.size != b.size) return a.size > b.size;
    return std::lexicographical_compare(a.centroid.begin(), a.centroid.end(),
                                        b.centroid.begin(), b.centroid.end());
  });
  subset.polytopes.clear();
  for (auto& h : hulls) subset.polytopes.push_back(std::move(h.hull));
  subset.outlier_count = static_cast<Index>(assignment.noise_indices.size());
  return true;
}

}  // namespace

HullStateMap HullStateMap::position() {
  HullStateMap map;
  map.selector = Eigen::MatrixXd::Zero(2, 4);
  map.selector(0, 0) = 1;
  map.selector(1, 2) = 1;
  map.id = "position";
  return map;
}

HullStateMap hull_state_map_from_id(const std::string& id) {
  if (id == "position") return HullStateMap::position();
  throw Error(ErrorCode::ConfigError, "unknown hull state map '" + id + "'");
}

bool NaturalisticSubset::contains(const Eigen::VectorXd& y, double tol) const {
  return std::any_of(polytopes.begin(), polytopes.end(),
                     [&](const Polytope& p) { return natproj::contains(p, y, tol); });
}

Eigen::MatrixXd slice_dataset(const std::vector<Trajectory>& dataset, Index t) {
  if (t < 0) throw Error(ErrorCode::DimensionMismatch, "frame index must be non-negative");
  Index count = 0;
  const Index n = dataset.empty() ? 0 : dataset.front().states.rows();
  for (const auto& traj : dataset)
    if (traj.length() > t) ++count;
  Eigen::MatrixXd out(n, count);
  Index c = 0;
  for (const auto& traj : dataset)
    if (traj.length() > t) out.col(c++) = traj.states.col(t);
  return out;
}

GeneratedSet generate(const std::vector<Trajectory>& dataset, const HullStateMap& map,
                      const ClustererConfig& config, const std::string& generated_at) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "no trajectories to learn from");
  config.validate(map.dim());
  for (const auto& traj : dataset)
    if (traj.states.rows() != map.selector.cols())
      throw Error(ErrorCode::DimensionMismatch,
                  "trajectory '" + traj.id + "' does not match the hull state map");

  GeneratedSet out;
  out.set.dt = dataset.front().dt;
  out.set.hull_state_dim = map.dim();
  out.set.provenance.dataset_hash = dataset_hash(dataset);
  out.set.provenance.clusterer = config;
  out.set.provenance.hull_state_map = map.id;
  out.set.provenance.generated_at = generated_at;

  for (Index t = 0;; ++t) {
    const Eigen::MatrixXd slice = slice_dataset(dataset, t);
    if (slice.cols() == 0) break;
    NaturalisticSubset subset;
    subset.t = t;
    ClustererConfig frame_config = config;
    frame_config.seed = config.seed + static_cast<std::uint64_t>(t);
    if (!build_subset(map.apply(slice), frame_config, subset)) break;

    FrameMetrics fm;
    fm.t = t;
    fm.k = static_cast<int>(subset.polytopes.size());
    for (const auto& p : subset.polytopes) fm.total_area += area(p);
    fm.point_count = slice.cols();
    fm.outlier_count = subset.outlier_count;
    out.metrics.push_back(fm);
    out.set.subsets.push_back(std::move(subset));
  }
  if (out.set.subsets.empty())
    throw Error(ErrorCode::HorizonZero, "frame 0 does not satisfy the cluster size condition");
  return out;
}

std::vector<bool> membership(const NaturalisticSet& nset, const Trajectory& traj,
                             const HullStateMap& map, double tol) {
  if (std::abs(traj.dt - nset.dt) > 1e-9 * std::max(1.0, std::abs(nset.dt)))
    throw Error(ErrorCode::DtMismatch, "trajectory dt differs from the set dt");
  const Index frames = std::min(traj.length(), static_cast<Index>(nset.subsets.size()));
  std::vector<bool> out(static_cast<std::size_t>(std::max<Index>(frames, 0)));
  for (Index t = 0; t < frames; ++t)
    out[static_cast<std::size_t>(t)] =
        nset.subsets[static_cast<std::size_t>(t)].contains(map.selector * traj.states.col(t), tol);
  return out;
}

NaturalisticSet downsample(const NaturalisticSet& nset, int factor) {
  if (factor < 1) throw Error(ErrorCode::ConfigError, "downsample factor must be >= 1");
  NaturalisticSet out;
  out.dt = nset.dt * factor;
  out.hull_state_dim = nset.hull_state_dim;
  out.provenance = nset.provenance;
  for (std::size_t t = 0; t < nset.subsets.size(); t += static_cast<std::size_t>(factor)) {
    NaturalisticSubset s = nset.subsets[t];
    s.t = static_cast<Index>(out.subsets.size());
    out.subsets.push_back(std::move(s));
  }
  return out;
}

Trajectory downsample(const Trajectory& traj, int factor) {
  if (factor < 1) throw Error(ErrorCode::ConfigError, "downsample factor must be >= 1");
  Trajectory out;
  out.dt = traj.dt * factor;
  out.id = traj.id;
  out.actor_class = traj.actor_class;
  const Index keep = (traj.length() + factor - 1) / factor;
  out.states.resize(traj.states.rows(), keep);
  for (Index i = 0; i < keep; ++i) out.states.col(i) = traj.states.col(i * factor);
  return out;
}

std::string dataset_hash(const std::vector<Trajectory>& dataset) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& traj : dataset) {
    mix(traj.id.data(), traj.id.size());
    mix(&traj.dt, sizeof(double));
    for (Index i = 0; i < traj.states.size(); ++i) {
      const double v = traj.states.data()[i];
      mix(&v, sizeof(double));
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

SetMetrics metrics_of(const NaturalisticSet& nset) {
  SetMetrics out;
  for (const auto& s : nset.subsets) {
    FrameMetrics fm;
    fm.t = s.t;
    fm.k = static_cast<int>(s.polytopes.size());
    for (const auto& p : s.polytopes) fm.total_area += area(p);
    fm.outlier_count = s.outlier_count;
    out.push_back(fm);
  }
  return out;
}

}  // namespace natproj
