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

// Multimodal naturalistic sets: per frame, a union of convex polytopes learned
// by clustering the hull states of every trajectory visible at that frame.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "natproj/clustering.hpp"
#include "natproj/dynamics.hpp"
#include "natproj/geometry.hpp"

namespace natproj {

/// Linear selector y = S x from state to hull state.
struct HullStateMap {
  Eigen::MatrixXd selector;  // n_y x n
  std::string id;

  /// Planar position [p_x, p_y] from [p_x, v_x, p_y, v_y].
  static HullStateMap position();

  Eigen::Index dim() const { return selector.rows(); }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& states) const { return selector * states; }
};

HullStateMap hull_state_map_from_id(const std::string& id);

struct NaturalisticSubset {
  Eigen::Index t = 0;
  std::vector<Polytope> polytopes;
  Eigen::Index outlier_count = 0;

  /// True iff y lies in at least one polytope within `tol`.
  bool contains(const Eigen::VectorXd& y, double tol = 0.0) const;
};

struct Provenance {
  std::string dataset_hash;
  ClustererConfig clusterer;
  std::string hull_state_map = "position";
  std::string generated_at;
};

struct NaturalisticSet {
  std::vector<NaturalisticSubset> subsets;  // t = 0 .. H
  double dt = 0.0;
  Eigen::Index hull_state_dim = 2;
  Provenance provenance;

  Eigen::Index horizon() const { return static_cast<Eigen::Index>(subsets.size()) - 1; }
};

struct FrameMetrics {
  Eigen::Index t = 0;
  int k = 0;
  double total_area = 0.0;
  Eigen::Index point_count = 0;
  Eigen::Index outlier_count = 0;
};

using SetMetrics = std::vector<FrameMetrics>;

struct GeneratedSet {
  NaturalisticSet set;
  SetMetrics metrics;
};

/// States at frame t of every trajectory longer than t, in dataset order, as
/// the columns of an n x count matrix.
Eigen::MatrixXd slice_dataset(const std::vector<Trajectory>& dataset, Eigen::Index t);

/// Builds frames t = 0, 1, ... until the first frame whose slice cannot
/// support valid clusters: fewer than k * min_cluster_size points or a cluster
/// below min_cluster_size for the k-means variants, no cluster for the density
/// clusterer. Noise points are left out of the hulls.
GeneratedSet generate(const std::vector<Trajectory>& dataset, const HullStateMap& map,
                      const ClustererConfig& config, const std::string& generated_at = "");

/// Entry t is true iff map(x_t) lies in subset t; the list covers the frames
/// both the trajectory and the set define.
std::vector<bool> membership(const NaturalisticSet& nset, const Trajectory& traj,
                             const HullStateMap& map, double tol = 1e-9);

/// Keeps frames 0, factor, 2 factor, ... and scales dt by `factor`.
NaturalisticSet downsample(const NaturalisticSet& nset, int factor);
Trajectory downsample(const Trajectory& traj, int factor);

/// FNV-1a over ids and the bit patterns of every state entry.
std::string dataset_hash(const std::vector<Trajectory>& dataset);

/// Per-frame metrics recomputed from the set itself (point counts unknown, 0).
SetMetrics metrics_of(const NaturalisticSet& nset);

}  // namespace natproj
