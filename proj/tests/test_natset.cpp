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

#include <random>
#include <set>

#include "doctest.h"
#include "natproj/error.hpp"
#include "natproj/ingest.hpp"
#include "natproj/io.hpp"
#include "natproj/natset.hpp"
#include "oracles.hpp"

using namespace natproj;
namespace nt = natproj::testing;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Trajectory line(double y0, double speed, Index length, const std::string& id) {
  Trajectory t;
  t.id = id;
  t.dt = 0.04;
  t.states.resize(4, length);
  for (Index k = 0; k < length; ++k) t.states.col(k) << speed * 0.04 * k, speed, y0, 0.0;
  return t;
}

std::vector<Trajectory> random_tracks(std::mt19937_64& rng, int count, Index length) {
  std::vector<Trajectory> out;
  for (int i = 0; i < count; ++i) {
    Trajectory t = line(nt::uniform(rng, -2, 2), nt::uniform(rng, 4, 9), length, std::to_string(i));
    for (Index k = 0; k < length; ++k) {
      t.states(0, k) += nt::uniform(rng, -0.5, 0.5);
      t.states(2, k) += nt::uniform(rng, -0.5, 0.5);
    }
    out.push_back(t);
  }
  return out;
}

ClustererConfig kmeans_config(ClusterAlgorithm algo, int k, int min_size, std::uint64_t seed = 3) {
  ClustererConfig c;
  c.algorithm = algo;
  c.k = k;
  c.min_cluster_size = min_size;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("slice_dataset keeps trajectories long enough, in order") {
  std::vector<Trajectory> d{line(0, 5, 6, "a"), line(1, 5, 5, "b"), line(2, 5, 7, "c")};
  CHECK(slice_dataset(d, 4).cols() == 3);

  std::vector<Trajectory> short_long{line(0, 5, 3, "a"), line(1, 5, 10, "b")};
  const MatrixXd s = slice_dataset(short_long, 5);
  REQUIRE(s.cols() == 1);
  CHECK(s.col(0) == short_long[1].states.col(5));
  CHECK(slice_dataset(short_long, 10).cols() == 0);
}

TEST_CASE("slice_dataset matches direct indexing on a seeded dataset") {
  std::mt19937_64 rng(5);
  std::vector<Trajectory> d;
  for (int i = 0; i < 12; ++i) {
    Trajectory t = line(i, 6, 5 + static_cast<Index>(rng() % 20), std::to_string(i));
    d.push_back(t);
  }
  for (Index t = 0; t < 26; ++t) {
    const MatrixXd s = slice_dataset(d, t);
    Index c = 0;
    for (const Trajectory& tr : d) {
      if (tr.length() <= t) continue;
      REQUIRE(c < s.cols());
      CHECK(s.col(c) == tr.states.col(t));
      ++c;
    }
    CHECK(c == s.cols());
  }
}

TEST_CASE("identical straight lines with k = 1 give one inflated polytope per frame") {
  std::vector<Trajectory> d;
  for (int i = 0; i < 6; ++i) d.push_back(line(0.0, 5.0, 20, std::to_string(i)));
  const GeneratedSet g = generate(d, HullStateMap::position(), kmeans_config(ClusterAlgorithm::KMeans, 1, 3));
  REQUIRE(g.set.horizon() == 19);
  for (const NaturalisticSubset& s : g.set.subsets) {
    REQUIRE(s.polytopes.size() == 1);
    CHECK(area(s.polytopes[0]) > 0.0);
    CHECK(area(s.polytopes[0]) < 1e-10);
    CHECK(s.contains(HullStateMap::position().selector * d[0].states.col(s.t), 1e-9));
  }
}

TEST_CASE("generate rejects empty datasets and unsatisfiable first frames") {
  CHECK_THROWS_AS(generate({}, HullStateMap::position(), ClustererConfig{}), Error);
  std::vector<Trajectory> two{line(0, 5, 4, "a"), line(1, 5, 4, "b")};
  try {
    generate(two, HullStateMap::position(), kmeans_config(ClusterAlgorithm::KMeansConstrained, 1, 3));
    FAIL("expected HorizonZero");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::HorizonZero);
  }
  try {
    generate({}, HullStateMap::position(), ClustererConfig{});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDataset);
  }
}

TEST_CASE("horizon ends at the first frame lacking k * min points") {
  std::mt19937_64 rng(9);
  std::vector<Trajectory> d = random_tracks(rng, 7, 30);
  d[0].states.conservativeResize(4, 12);
  // 7 tracks support k=2, min=3 until track 0 ends; then 6 remain, still enough.
  const GeneratedSet g = generate(d, HullStateMap::position(), kmeans_config(ClusterAlgorithm::KMeansConstrained, 2, 3));
  CHECK(g.set.horizon() == 29);
  d[1].states.conservativeResize(4, 20);
  // From frame 20 only 5 points are left, below 2 * 3.
  const GeneratedSet g2 = generate(d, HullStateMap::position(), kmeans_config(ClusterAlgorithm::KMeansConstrained, 2, 3));
  CHECK(g2.set.horizon() == 19);
}

TEST_CASE("fork branches fall in distinct polytopes after the split") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::Fork;
  spec.branches = 2;
  spec.split_frame = 50;
  spec.horizon = 150;
  spec.n_trajectories = 20;
  spec.seed = 4;
  const std::vector<Trajectory> d = synth_scenario(spec);
  const std::vector<int> modes = synth_modes(spec);
  const GeneratedSet g = generate(d, HullStateMap::position(), kmeans_config(ClusterAlgorithm::KMeansConstrained, 2, 3));
  REQUIRE(g.set.horizon() == 150);
  const HullStateMap map = HullStateMap::position();
  for (Index t = 110; t <= 150; t += 10) {
    const auto& polys = g.set.subsets[t].polytopes;
    REQUIRE(polys.size() == 2);
    // Each branch owns exactly one polytope and no point of the other.
    std::set<int> owners[2];
    for (std::size_t i = 0; i < d.size(); ++i) {
      const VectorXd y = map.selector * d[i].states.col(t);
      const bool in0 = contains(polys[0], y, 1e-9);
      const bool in1 = contains(polys[1], y, 1e-9);
      CHECK(in0 != in1);
      owners[modes[i]].insert(in0 ? 0 : 1);
    }
    CHECK(owners[0].size() == 1);
    CHECK(owners[1].size() == 1);
    CHECK(*owners[0].begin() != *owners[1].begin());
  }
}

TEST_CASE("training points lie in their frame's set and cluster hulls refine the k = 1 hull") {
  std::mt19937_64 rng(21);
  const std::vector<Trajectory> d = random_tracks(rng, 15, 25);
  const HullStateMap map = HullStateMap::position();
  const GeneratedSet one = generate(d, map, kmeans_config(ClusterAlgorithm::KMeans, 1, 3));
  for (ClusterAlgorithm algo : {ClusterAlgorithm::KMeans, ClusterAlgorithm::KMeansConstrained}) {
    const GeneratedSet multi = generate(d, map, kmeans_config(algo, 3, 3));
    const Index H = std::min(one.set.horizon(), multi.set.horizon());
    // Plain k-means may leave a cluster under the floor, which ends the horizon.
    if (algo == ClusterAlgorithm::KMeansConstrained) REQUIRE(H == 24);
    for (Index t = 0; t <= H; ++t) {
      const MatrixXd ys = map.apply(slice_dataset(d, t));
      for (Index i = 0; i < ys.cols(); ++i) CHECK(multi.set.subsets[t].contains(ys.col(i), 1e-9));
      const Polytope& hull1 = one.set.subsets[t].polytopes[0];
      double sum = 0.0;
      for (const Polytope& p : multi.set.subsets[t].polytopes) {
        sum += area(p);
        for (Index v = 0; v < p.vertices.cols(); ++v) CHECK(max_violation(hull1, p.vertices.col(v)) <= 1e-9);
      }
      CHECK(sum <= area(hull1) + 1e-9);
    }
  }
}

TEST_CASE("density sets skip noise and report consistent metrics") {
  std::mt19937_64 rng(2);
  std::vector<Trajectory> d = random_tracks(rng, 10, 15);
  Trajectory far = line(50.0, 5.0, 15, "far");
  d.push_back(far);
  ClustererConfig c;
  c.algorithm = ClusterAlgorithm::Density;
  c.min_cluster_size = 3;
  c.epsilon = 3.0;
  const GeneratedSet g = generate(d, HullStateMap::position(), c);
  REQUIRE(g.metrics.size() == g.set.subsets.size());
  for (std::size_t t = 0; t < g.metrics.size(); ++t) {
    const FrameMetrics& m = g.metrics[t];
    const NaturalisticSubset& s = g.set.subsets[t];
    CHECK(m.t == static_cast<Index>(t));
    CHECK(m.k == static_cast<int>(s.polytopes.size()));
    CHECK(m.point_count == slice_dataset(d, static_cast<Index>(t)).cols());
    CHECK(m.outlier_count == s.outlier_count);
    CHECK(s.outlier_count >= 1);
    CHECK(m.total_area >= 0.0);
    CHECK_FALSE(s.contains(HullStateMap::position().selector * far.states.col(static_cast<Index>(t)), 1e-9));
  }
}

TEST_CASE("membership: own trajectory inside, translated trajectory outside") {
  std::mt19937_64 rng(33);
  const std::vector<Trajectory> d = random_tracks(rng, 9, 20);
  const HullStateMap map = HullStateMap::position();
  const GeneratedSet g = generate(d, map, kmeans_config(ClusterAlgorithm::KMeansConstrained, 2, 3));
  for (const Trajectory& t : d) {
    const std::vector<bool> m = membership(g.set, t, map);
    CHECK(m.size() == static_cast<std::size_t>(g.set.horizon() + 1));
    for (bool b : m) CHECK(b);
  }
  Trajectory moved = d[0];
  moved.states.row(0).array() += 100.0;
  for (bool b : membership(g.set, moved, map)) CHECK_FALSE(b);

  Trajectory wrong_dt = d[0];
  wrong_dt.dt = 0.1;
  try {
    membership(g.set, wrong_dt, map);
    FAIL("expected DtMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DtMismatch);
  }
}

TEST_CASE("downsampling keeps every factor-th frame") {
  std::mt19937_64 rng(8);
  const std::vector<Trajectory> d = random_tracks(rng, 8, 21);
  const GeneratedSet g = generate(d, HullStateMap::position(), kmeans_config(ClusterAlgorithm::KMeansConstrained, 2, 3));
  const NaturalisticSet ds = downsample(g.set, 3);
  CHECK(ds.horizon() == 6);
  CHECK(ds.dt == doctest::Approx(0.12));
  for (Index t = 0; t <= ds.horizon(); ++t) {
    CHECK(ds.subsets[t].t == t);
    CHECK(ds.subsets[t].polytopes.size() == g.set.subsets[3 * t].polytopes.size());
    CHECK(ds.subsets[t].polytopes[0].h == g.set.subsets[3 * t].polytopes[0].h);
  }
  const Trajectory dt = downsample(d[0], 4);
  CHECK(dt.length() == 6);
  CHECK(dt.states.col(5) == d[0].states.col(20));
}

TEST_CASE("serialization round-trip preserves membership on a probe grid") {
  std::mt19937_64 rng(44);
  const std::vector<Trajectory> d = random_tracks(rng, 12, 10);
  const GeneratedSet g = generate(d, HullStateMap::position(), kmeans_config(ClusterAlgorithm::KMeansConstrained, 3, 3));
  const NaturalisticSet back = natset_from_json(Json::parse(to_json(g.set).dump()));
  REQUIRE(back.horizon() == g.set.horizon());
  CHECK(back.dt == g.set.dt);
  CHECK(back.hull_state_dim == 2);
  CHECK(back.provenance.dataset_hash == g.set.provenance.dataset_hash);
  CHECK(back.provenance.clusterer.k == 3);
  for (Index t = 0; t <= g.set.horizon(); ++t) {
    const MatrixXd ys = HullStateMap::position().apply(slice_dataset(d, t));
    const VectorXd lo = ys.rowwise().minCoeff().array() - 1.0;
    const VectorXd hi = ys.rowwise().maxCoeff().array() + 1.0;
    for (int a = 0; a < 10; ++a)
      for (int b = 0; b < 10; ++b) {
        const VectorXd y = (VectorXd(2) << lo[0] + (hi[0] - lo[0]) * a / 9.0, lo[1] + (hi[1] - lo[1]) * b / 9.0).finished();
        CHECK(back.subsets[t].contains(y, 1e-9) == g.set.subsets[t].contains(y, 1e-9));
      }
  }
  CHECK_THROWS_AS(natset_from_json(Json::parse(R"({"dt":0.04})")), Error);
}

TEST_CASE("same dataset, config and seed serialize to identical bytes") {
  for (ClusterAlgorithm algo : {ClusterAlgorithm::KMeans, ClusterAlgorithm::KMeansConstrained, ClusterAlgorithm::Density}) {
    std::string dumps[2];
    for (std::string& out : dumps) {
      std::mt19937_64 rng(71);
      const std::vector<Trajectory> d = random_tracks(rng, 14, 12);
      ClustererConfig c = kmeans_config(algo, 3, 3, 19);
      c.epsilon = 1.5;
      out = to_json(generate(d, HullStateMap::position(), c).set).dump(2);
    }
    CHECK(dumps[0] == dumps[1]);
  }
}
