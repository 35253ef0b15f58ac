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

#include "natproj/clustering.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "natproj/error.hpp"

namespace natproj {

namespace {

using Eigen::Index;
using Labels = std::vector<int>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Platform-independent uniform draw in [0, 1).
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double sq_dist(const Eigen::MatrixXd& points, Index i, const Eigen::MatrixXd& centroids,
               int j) {
  return (points.col(i) - centroids.col(j)).squaredNorm();
}

Labels assign_nearest(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids) {
  Labels labels(static_cast<std::size_t>(points.cols()));
  for (Index i = 0; i < points.cols(); ++i) {
    int best = 0;
    double best_d = kInf;
    for (int j = 0; j < centroids.cols(); ++j) {
      const double d = sq_dist(points, i, centroids, j);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
  }
  return labels;
}

std::vector<int> cluster_sizes(const Labels& labels, int k) {
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  return sizes;
}

// Means of labeled points; centroids of empty clusters are left untouched.
void update_centroids(const Eigen::MatrixXd& points, const Labels& labels,
                      Eigen::MatrixXd& centroids) {
  const int k = static_cast<int>(centroids.cols());
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(points.rows(), k);
  const auto sizes = cluster_sizes(labels, k);
  for (Index i = 0; i < points.cols(); ++i)
    sums.col(labels[static_cast<std::size_t>(i)]) += points.col(i);
  for (int j = 0; j < k; ++j)
    if (sizes[static_cast<std::size_t>(j)] > 0)
      centroids.col(j) = sums.col(j) / sizes[static_cast<std::size_t>(j)];
}

double objective(const Eigen::MatrixXd& points, const Labels& labels,
                 const Eigen::MatrixXd& centroids) {
  double total = 0;
  for (Index i = 0; i < points.cols(); ++i)
    total += sq_dist(points, i, centroids, labels[static_cast<std::size_t>(i)]);
  return total;
}

void repair_empty(const Eigen::MatrixXd& points, Labels& labels,
                  Eigen::MatrixXd& centroids) {
  const int k = static_cast<int>(centroids.cols());
  auto sizes = cluster_sizes(labels, k);
  for (int j = 0; j < k; ++j) {
    if (sizes[static_cast<std::size_t>(j)] > 0) continue;
    Index far = -1;
    double far_d = -1;
    for (Index i = 0; i < points.cols(); ++i) {
      const int l = labels[static_cast<std::size_t>(i)];
      if (sizes[static_cast<std::size_t>(l)] < 2) continue;
      const double d = sq_dist(points, i, centroids, l);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far < 0) break;  // fewer points than clusters; unreachable given pre
    --sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
    labels[static_cast<std::size_t>(far)] = j;
    ++sizes[static_cast<std::size_t>(j)];
    centroids.col(j) = points.col(far);
  }
}

// Minimum-cost perfect assignment of n rows to n columns (shortest augmenting
// path with potentials). Returns the column assigned to each row.
std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(u);
  std::vector<int> p(static_cast<std::size_t>(n + 1), 0), way(p);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), kInf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

// Columns 0..k*min-1 are the mandatory slots (min per cluster); the remaining
// columns are free slots that send a point to its nearest centroid.
Labels assign_constrained(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                          int min_size) {
  const int n = static_cast<int>(points.cols());
  const int k = static_cast<int>(centroids.cols());
  const int mandatory = k * min_size;
  const Labels nearest = assign_nearest(points, centroids);
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      const double d = sq_dist(points, i, centroids, j);
      cost.row(i).segment(j * min_size, min_size).setConstant(d);
    }
    if (n > mandatory)
      cost.row(i).tail(n - mandatory).setConstant(
          sq_dist(points, i, centroids, nearest[static_cast<std::size_t>(i)]));
  }
  const auto slot = hungarian(cost);
  Labels labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int s = slot[static_cast<std::size_t>(i)];
    labels[static_cast<std::size_t>(i)] =
        s < mandatory ? s / min_size : nearest[static_cast<std::size_t>(i)];
  }
  return labels;
}

ClusterAssignment to_assignment(const Eigen::MatrixXd& points, const Labels& labels,
                                const Eigen::MatrixXd& centroids) {
  ClusterAssignment out;
  const int k = static_cast<int>(centroids.cols());
  out.index_sets.assign(static_cast<std::size_t>(k), {});
  for (Index i = 0; i < points.cols(); ++i)
    out.index_sets[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].push_back(i);
  out.centroids = centroids;
  return out;
}

}  // namespace

std::string_view to_string(ClusterAlgorithm algorithm) {
  switch (algorithm) {
    case ClusterAlgorithm::KMeans: return "kmeans";
    case ClusterAlgorithm::KMeansConstrained: return "kmeans_constrained";
    case ClusterAlgorithm::Density: return "density";
  }
  return "unknown";
}

ClusterAlgorithm cluster_algorithm_from_string(std::string_view name) {
  if (name == "kmeans") return ClusterAlgorithm::KMeans;
  if (name == "kmeans_constrained") return ClusterAlgorithm::KMeansConstrained;
  if (name == "density") return ClusterAlgorithm::Density;
  throw Error(ErrorCode::ConfigError, "unknown clustering algorithm '" +
                                          std::string(name) + "'");
}

void ClustererConfig::validate(Eigen::Index hull_dim) const {
  if (k < 1) throw Error(ErrorCode::ConfigError, "k must be at least 1");
  if (min_cluster_size < hull_dim + 1)
    throw Error(ErrorCode::ConfigError,
                "min_cluster_size must be at least " + std::to_string(hull_dim + 1));
  if (!(epsilon > 0)) throw Error(ErrorCode::ConfigError, "epsilon must be positive");
  if (max_iterations < 1)
    throw Error(ErrorCode::ConfigError, "max_iterations must be positive");
  if (n_init < 1) throw Error(ErrorCode::ConfigError, "n_init must be positive");
}

Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& points, int k,
                                 std::uint64_t seed) {
  const Index m = points.cols();
  if (k < 1 || m < k)
    throw Error(ErrorCode::TooFewPoints, "k-means needs at least k points");
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd centroids(points.rows(), k);
  std::vector<char> chosen(static_cast<std::size_t>(m), 0);
  Index first = static_cast<Index>(uniform01(rng) * static_cast<double>(m));
  first = std::min(first, m - 1);
  centroids.col(0) = points.col(first);
  chosen[static_cast<std::size_t>(first)] = 1;

  Eigen::VectorXd d2(m);
  for (Index i = 0; i < m; ++i) d2(i) = (points.col(i) - centroids.col(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index pick = -1;
    if (total > 0) {
      const double target = uniform01(rng) * total;
      double acc = 0;
      for (Index i = 0; i < m; ++i) {
        acc += d2(i);
        if (d2(i) > 0 && acc > target) {
          pick = i;
          break;
        }
      }
      if (pick < 0)
        for (Index i = m; i-- > 0;)
          if (d2(i) > 0) {
            pick = i;
            break;
          }
    } else {
      for (Index i = 0; i < m; ++i)
        if (!chosen[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
    }
    centroids.col(c) = points.col(pick);
    chosen[static_cast<std::size_t>(pick)] = 1;
    for (Index i = 0; i < m; ++i)
      d2(i) = std::min(d2(i), (points.col(i) - centroids.col(c)).squaredNorm());
  }
  return centroids;
}

namespace {

// Seed of restart r; restart 0 uses the configured seed itself.
std::uint64_t restart_seed(std::uint64_t seed, int r) {
  if (r == 0) return seed;
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(r);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Lowest final within-cluster sum of squares; ties keep the earliest restart.
template <class Run>
ClusterAssignment best_of(const Eigen::MatrixXd& points, std::uint64_t seed, int n_init, Run run) {
  ClusterAssignment best = run(restart_seed(seed, 0));
  double best_ss = within_cluster_ss(points, best.index_sets);
  for (int r = 1; r < n_init; ++r) {
    ClusterAssignment a = run(restart_seed(seed, r));
    const double ss = within_cluster_ss(points, a.index_sets);
    if (ss < best_ss) {
      best = std::move(a);
      best_ss = ss;
    }
  }
  return best;
}

ClusterAssignment kmeans_once(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                              int max_iterations) {
  Eigen::MatrixXd centroids = kmeans_plus_plus(points, k, seed);
  Labels labels = assign_nearest(points, centroids);
  std::vector<double> trace;
  int it = 0;
  for (; it < std::max(1, max_iterations); ++it) {
    repair_empty(points, labels, centroids);
    update_centroids(points, labels, centroids);
    trace.push_back(objective(points, labels, centroids));
    Labels next = assign_nearest(points, centroids);
    if (next == labels) break;
    labels = std::move(next);
  }
  repair_empty(points, labels, centroids);
  update_centroids(points, labels, centroids);
  auto out = to_assignment(points, labels, centroids);
  out.objective_trace = std::move(trace);
  out.iterations = std::min(it + 1, std::max(1, max_iterations));
  return out;
}

ClusterAssignment kmeans_constrained_once(const Eigen::MatrixXd& points, int k,
                                          int min_cluster_size, std::uint64_t seed,
                                          int max_iterations) {
  Eigen::MatrixXd centroids = kmeans_plus_plus(points, k, seed);
  Labels labels = assign_constrained(points, centroids, min_cluster_size);
  std::vector<double> trace;
  int it = 0;
  for (; it < std::max(1, max_iterations); ++it) {
    update_centroids(points, labels, centroids);
    trace.push_back(objective(points, labels, centroids));
    Labels next = assign_constrained(points, centroids, min_cluster_size);
    if (next == labels) break;
    labels = std::move(next);
  }
  update_centroids(points, labels, centroids);
  auto out = to_assignment(points, labels, centroids);
  out.objective_trace = std::move(trace);
  out.iterations = std::min(it + 1, std::max(1, max_iterations));
  return out;
}

}  // namespace

ClusterAssignment kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                         int max_iterations, int n_init) {
  if (k < 1 || points.cols() < k)
    throw Error(ErrorCode::TooFewPoints,
                "k-means needs at least k = " + std::to_string(k) + " points");
  return best_of(points, seed, std::max(1, n_init), [&](std::uint64_t s) {
    return kmeans_once(points, k, s, max_iterations);
  });
}

ClusterAssignment kmeans_constrained(const Eigen::MatrixXd& points, int k,
                                     int min_cluster_size, std::uint64_t seed,
                                     int max_iterations, int n_init) {
  if (k < 1 || min_cluster_size < 1 ||
      points.cols() < static_cast<Index>(k) * min_cluster_size)
    throw Error(ErrorCode::Infeasible,
                std::to_string(points.cols()) + " points cannot fill " +
                    std::to_string(k) + " clusters of at least " +
                    std::to_string(min_cluster_size));
  return best_of(points, seed, std::max(1, n_init), [&](std::uint64_t s) {
    return kmeans_constrained_once(points, k, min_cluster_size, s, max_iterations);
  });
}

ClusterAssignment density_cluster(const Eigen::MatrixXd& points, int min_cluster_size,
                                  double epsilon, std::uint64_t /*seed*/) {
  const Index m = points.cols();
  std::vector<Index> parent(static_cast<std::size_t>(m));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  const double eps2 = epsilon * epsilon;
  for (Index i = 0; i < m; ++i)
    for (Index j = i + 1; j < m; ++j)
      if ((points.col(i) - points.col(j)).squaredNorm() <= eps2) {
        const Index a = find(i), b = find(j);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
      }

  std::vector<std::vector<Index>> components(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) components[static_cast<std::size_t>(find(i))].push_back(i);

  ClusterAssignment out;
  for (auto& c : components) {
    if (c.empty()) continue;
    if (static_cast<int>(c.size()) < min_cluster_size)
      out.noise_indices.insert(out.noise_indices.end(), c.begin(), c.end());
    else
      out.index_sets.push_back(std::move(c));
  }
  std::sort(out.noise_indices.begin(), out.noise_indices.end());
  std::stable_sort(out.index_sets.begin(), out.index_sets.end(),
                   [](const auto& a, const auto& b) {
                     if (a.size() != b.size()) return a.size() > b.size();
                     return a.front() < b.front();
                   });
  Eigen::MatrixXd centroids(points.rows(), out.k());
  for (int j = 0; j < out.k(); ++j) {
    centroids.col(j).setZero();
    for (Index i : out.index_sets[static_cast<std::size_t>(j)]) centroids.col(j) += points.col(i);
    centroids.col(j) /= static_cast<double>(out.index_sets[static_cast<std::size_t>(j)].size());
  }
  out.centroids = std::move(centroids);
  return out;
}

ClusterAssignment cluster(const Eigen::MatrixXd& points, const ClustererConfig& config) {
  switch (config.algorithm) {
    case ClusterAlgorithm::KMeans:
      return kmeans(points, config.k, config.seed, config.max_iterations, config.n_init);
    case ClusterAlgorithm::KMeansConstrained:
      return kmeans_constrained(points, config.k, config.min_cluster_size, config.seed,
                                config.max_iterations, config.n_init);
    case ClusterAlgorithm::Density:
      return density_cluster(points, config.min_cluster_size, config.epsilon, config.seed);
  }
  throw Error(ErrorCode::ConfigError, "unknown clustering algorithm");
}

double within_cluster_ss(const Eigen::MatrixXd& points,
                         const std::vector<std::vector<Eigen::Index>>& index_sets) {
  double total = 0;
  for (const auto& set : index_sets) {
    if (set.empty()) continue;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(points.rows());
    for (Index i : set) mean += points.col(i);
    mean /= static_cast<double>(set.size());
    for (Index i : set) total += (points.col(i) - mean).squaredNorm();
  }
  return total;
}

}  // namespace natproj
