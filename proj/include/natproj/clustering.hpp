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

// Per-timestep clustering of hull states. Points are the columns of an
// (n_y x m) matrix; all distances are Euclidean.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace natproj {

enum class ClusterAlgorithm { KMeans, KMeansConstrained, Density };

std::string_view to_string(ClusterAlgorithm algorithm);
ClusterAlgorithm cluster_algorithm_from_string(std::string_view name);

struct ClustererConfig {
  ClusterAlgorithm algorithm = ClusterAlgorithm::KMeansConstrained;
  int k = 1;
  int min_cluster_size = 3;
  double epsilon = 1.0;  // meters, density clusterer only
  std::uint64_t seed = 0;
  int max_iterations = 100;
  int n_init = 10;  // k-means restarts; the lowest objective wins

  /// Throws ConfigError unless k >= 1, min_cluster_size >= hull_dim + 1 and
  /// epsilon > 0.
  void validate(Eigen::Index hull_dim = 2) const;
};

struct ClusterAssignment {
  std::vector<std::vector<Eigen::Index>> index_sets;  // each sorted ascending
  std::vector<Eigen::Index> noise_indices;
  std::optional<Eigen::MatrixXd> centroids;  // n_y x k
  /// Within-cluster sum of squares after each centroid update (k-means only).
  std::vector<double> objective_trace;
  int iterations = 0;

  int k() const { return static_cast<int>(index_sets.size()); }
};

/// k-means++ seeding. Deterministic in `seed`.
Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& points, int k,
                                 std::uint64_t seed);

/// Lloyd's algorithm from k-means++ seeding. Empty clusters take the point
/// farthest from its centroid; distance ties go to the lowest cluster index.
/// Runs `n_init` seeded restarts (the first from `seed` itself) and keeps the
/// lowest within-cluster sum of squares, earliest restart on ties.
ClusterAssignment kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                         int max_iterations = 100, int n_init = 10);

/// k-means whose assignment step is an exact minimum-cost assignment subject to
/// every cluster holding at least `min_cluster_size` points. Restarts as in
/// kmeans.
ClusterAssignment kmeans_constrained(const Eigen::MatrixXd& points, int k,
                                     int min_cluster_size, std::uint64_t seed,
                                     int max_iterations = 100, int n_init = 10);

/// Connected components of the epsilon-neighborhood graph (|a - b| <= epsilon).
/// Components smaller than `min_cluster_size` become noise. Clusters are
/// ordered by size descending, then by smallest member index.
ClusterAssignment density_cluster(const Eigen::MatrixXd& points, int min_cluster_size,
                                  double epsilon, std::uint64_t seed = 0);

ClusterAssignment cluster(const Eigen::MatrixXd& points, const ClustererConfig& config);

/// Sum over clusters of squared distances to the cluster mean.
double within_cluster_ss(const Eigen::MatrixXd& points,
                         const std::vector<std::vector<Eigen::Index>>& index_sets);

}  // namespace natproj
