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

#include <cmath>
#include <map>
#include <sstream>

#include "doctest.h"
#include "natproj/dynamics.hpp"
#include "natproj/error.hpp"
#include "natproj/ingest.hpp"

using namespace natproj;
using Eigen::Index;
using Eigen::Vector2d;

namespace {

const char* kHeader = "actor_id,frame,x,y,vx,vy,ax,ay,heading,class\n";

std::string two_actors() {
  std::ostringstream s;
  s << kHeader;
  for (int id = 1; id <= 2; ++id)
    for (int f = 0; f < 5; ++f)
      s << id << ',' << f + 10 << ',' << 0.5 * f << ',' << id << ",12.5,0,0,0,0,car\n";
  return s.str();
}

ErrorCode code_of(const std::string& csv) {
  std::istringstream in(csv);
  try {
    parse_csv(in);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::ConfigError;
}

std::string message_of(const std::string& csv) {
  std::istringstream in(csv);
  try {
    parse_csv(in);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

Trajectory straight(Vector2d p0, Vector2d v, Index length, const std::string& cls = "car") {
  Trajectory t;
  t.dt = kDatasetPeriod;
  t.actor_class = cls;
  t.states.resize(4, length);
  for (Index k = 0; k < length; ++k) {
    const Vector2d p = p0 + v * (kDatasetPeriod * k);
    t.states.col(k) << p.x(), v.x(), p.y(), v.y();
  }
  return t;
}

}  // namespace

TEST_CASE("two well-formed actors parse into two trajectories") {
  std::istringstream in(two_actors());
  const auto trajs = parse_csv(in);
  REQUIRE(trajs.size() == 2);
  for (const Trajectory& t : trajs) {
    CHECK(t.length() == 5);
    CHECK(t.dt == doctest::Approx(0.04));
    CHECK(t.actor_class == "car");
  }
  CHECK(trajs[0].id == "1");
  CHECK(trajs[1].states(0, 4) == 2.0);
  CHECK(trajs[1].states(1, 4) == 12.5);
  CHECK(trajs[1].states(2, 4) == 2.0);
  CHECK(trajs[1].states(3, 4) == 0.0);
}

TEST_CASE("a missing frame names the actor") {
  std::string csv = kHeader;
  for (int f : {0, 1, 2, 4}) csv += "1," + std::to_string(f) + ",0,0,0,0,0,0,0,car\n";
  CHECK(code_of(csv) == ErrorCode::NonContiguousFrames);
  CHECK(message_of(csv) == "NonContiguousFrames: 1");
}

TEST_CASE("malformed rows raise ParseError with their line number") {
  CHECK(code_of("") == ErrorCode::ParseError);
  CHECK(code_of("actor_id,frame,x,y\n") == ErrorCode::ParseError);
  const std::string base = std::string(kHeader) + "1,0,0,0,0,0,0,0,0,car\n";
  CHECK(message_of(base + "1,1,abc,0,0,0,0,0,0,car\n").find("line 3") != std::string::npos);
  CHECK(code_of(base + "1,1,0,0,0\n") == ErrorCode::ParseError);
  CHECK(code_of(base + "1,x,0,0,0,0,0,0,0,car\n") == ErrorCode::ParseError);
  CHECK(code_of(base + "1,1,nan,0,0,0,0,0,0,car\n") == ErrorCode::ParseError);
  CHECK(code_of(base + ",1,0,0,0,0,0,0,0,car\n") == ErrorCode::ParseError);
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), Error);
}

TEST_CASE("write_csv output reparses to identical trajectories") {
  std::vector<Trajectory> trajs;
  ScenarioSpec spec;
  spec.kind = ScenarioKind::CurvedRoad;
  spec.n_trajectories = 6;
  spec.horizon = 40;
  spec.seed = 3;
  for (Trajectory t : synth_scenario(spec)) trajs.push_back(t);
  trajs[2].actor_class = "bicycle";
  std::ostringstream out;
  write_csv(out, trajs);
  std::istringstream in(out.str());
  const auto back = parse_csv(in);
  REQUIRE(back.size() == trajs.size());
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    CHECK(back[i].id == trajs[i].id);
    CHECK(back[i].actor_class == trajs[i].actor_class);
    CHECK(back[i].states == trajs[i].states);
  }
  std::ostringstream again;
  write_csv(again, back);
  CHECK(again.str() == out.str());
}

TEST_CASE("region containment for circles and polygons") {
  const RegionSpec c = RegionSpec::circle(Vector2d(1, 1), 2.0);
  CHECK(c.contains(Vector2d(1, 1)));
  CHECK(c.contains(Vector2d(3, 1)));
  CHECK_FALSE(c.contains(Vector2d(3.01, 1)));
  Eigen::MatrixXd sq(2, 4);
  sq << 0, 2, 2, 0, 0, 0, 2, 2;
  const RegionSpec p = RegionSpec::polygon(sq);
  CHECK(p.contains(Vector2d(1, 1)));
  CHECK(p.contains(Vector2d(2, 1)));
  CHECK_FALSE(p.contains(Vector2d(2.5, 1)));
  CHECK_THROWS_AS(RegionSpec::circle(Vector2d(0, 0), 0.0), Error);
  Eigen::MatrixXd cw = sq.rowwise().reverse();
  CHECK_THROWS_AS(RegionSpec::polygon(cw), Error);
}

TEST_CASE("filter keeps trajectories starting in the start region") {
  FilterSpec spec;
  spec.start = RegionSpec::circle(Vector2d(0, 0), 3.0);
  const std::vector<Trajectory> trajs{straight({0, 0}, {5, 0}, 30), straight({20, 0}, {5, 0}, 30),
                                      straight({1, 1}, {0, 4}, 30)};
  const auto kept = filter_tasks(trajs, spec);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].states == trajs[0].states);
  CHECK(kept[1].states == trajs[2].states);
}

TEST_CASE("filter re-indexes from the first in-start frame and checks the end") {
  FilterSpec spec;
  spec.start = RegionSpec::circle(Vector2d(10, 0), 1.0);
  // Enters the start circle at x = 9, i.e. frame 45 at 5 m/s and 0.04 s.
  const Trajectory t = straight({0, 0}, {5, 0}, 100);
  auto kept = filter_tasks({t}, spec);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].length() == 55);
  CHECK(kept[0].states.col(0) == t.states.col(45));

  spec.end = RegionSpec::circle(Vector2d(19.8, 0), 0.5);
  CHECK(filter_tasks({t}, spec).size() == 1);
  spec.end = RegionSpec::circle(Vector2d(0, 10), 0.5);
  CHECK(filter_tasks({t}, spec).empty());
}

TEST_CASE("filter drops parked cars and non-car actors unless told otherwise") {
  FilterSpec spec;
  spec.start = RegionSpec::circle(Vector2d(0, 0), 3.0);
  const std::vector<Trajectory> trajs{straight({0, 0}, {0.2, 0}, 30), straight({0, 0}, {5, 0}, 30, "pedestrian"),
                                      straight({0, 0}, {5, 0}, 30)};
  CHECK(filter_tasks(trajs, spec).size() == 1);
  spec.moving_only = false;
  CHECK(filter_tasks(trajs, spec).size() == 3);
}

TEST_CASE("filtering a fork by branch end region recovers the branch labels") {
  ScenarioSpec spec;
  spec.n_trajectories = 30;
  spec.seed = 12;
  const auto trajs = synth_scenario(spec);
  const auto modes = synth_modes(spec);
  // Label oracle: mean final position of each branch.
  std::map<int, Vector2d> sum;
  std::map<int, int> count;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const auto last = trajs[i].states.col(trajs[i].length() - 1);
    sum[modes[i]] += Vector2d(last(0), last(2));
    ++count[modes[i]];
  }
  for (int b = 0; b < spec.branches; ++b) {
    FilterSpec f;
    f.start = RegionSpec::circle(Vector2d(trajs[0].states(0, 0), trajs[0].states(2, 0)), 10.0);
    f.end = RegionSpec::circle(sum[b] / count[b], 8.0);
    const auto kept = filter_tasks(trajs, f);
    std::size_t expected = 0;
    for (int m : modes) expected += (m == b);
    CHECK(kept.size() == expected);
    std::size_t j = 0;
    for (std::size_t i = 0; i < trajs.size() && j < kept.size(); ++i)
      if (modes[i] == b) CHECK(kept[j++].id == trajs[i].id);
  }
}

TEST_CASE("fork with 63 trajectories apportions branches within three of the proportions") {
  for (const std::vector<double>& props : {std::vector<double>{}, std::vector<double>{0.5, 0.3, 0.2}}) {
    ScenarioSpec spec;
    spec.seed = 11;
    spec.proportions = props;
    const auto trajs = synth_scenario(spec);
    REQUIRE(trajs.size() == 63);
    const auto modes = synth_modes(spec);
    for (int b = 0; b < 3; ++b) {
      int n = 0;
      for (int m : modes) n += (m == b);
      const double target = 63.0 * (props.empty() ? 1.0 / 3.0 : props[b]);
      CHECK(std::abs(n - target) <= 3.0);
    }
  }
}

TEST_CASE("synthetic scenarios validate their parameters") {
  ScenarioSpec spec;
  spec.n_trajectories = 5;
  CHECK_THROWS_AS(synth_scenario(spec), Error);
  spec.n_trajectories = 10;
  for (const std::vector<double>& bad :
       {std::vector<double>{0.5, 0.6, -0.1}, std::vector<double>{0.5, 0.4}, std::vector<double>{0.5, 0.2, 0.2}}) {
    spec.proportions = bad;
    try {
      synth_scenario(spec);
      FAIL("expected BadProportion");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadProportion);
    }
  }
}

TEST_CASE("noise-free scenarios repeat one trajectory per mode") {
  for (ScenarioKind kind : {ScenarioKind::Fork, ScenarioKind::CurvedRoad, ScenarioKind::StopGoLane}) {
    ScenarioSpec spec;
    spec.kind = kind;
    spec.noise_sigma = 0.0;
    spec.n_trajectories = 12;
    spec.seed = 5;
    const auto trajs = synth_scenario(spec);
    const auto modes = synth_modes(spec);
    std::map<int, std::size_t> first;
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      auto [it, fresh] = first.emplace(modes[i], i);
      if (!fresh) CHECK(trajs[i].states == trajs[it->second].states);
    }
    if (kind != ScenarioKind::CurvedRoad) CHECK(first.size() == 3);
  }
}

TEST_CASE("every synthetic trajectory is its own controls' rollout") {
  for (ScenarioKind kind : {ScenarioKind::Fork, ScenarioKind::CurvedRoad, ScenarioKind::StopGoLane}) {
    ScenarioSpec spec;
    spec.kind = kind;
    spec.n_trajectories = 9;
    spec.seed = 77;
    const LinearDynamics dyn = double_integrator(spec.dt, 1.0);
    for (const Trajectory& t : synth_scenario(spec)) {
      CHECK(t.length() == spec.horizon + 1);
      const ControlSequence u = recover_controls(dyn, t);
      const Trajectory r = rollout(dyn, t.states.col(0), u);
      CHECK((r.states - t.states).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("scenario generation is deterministic in the seed") {
  ScenarioSpec spec;
  spec.seed = 99;
  const auto a = synth_scenario(spec);
  const auto b = synth_scenario(spec);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].states == b[i].states);
  spec.seed = 100;
  CHECK(synth_scenario(spec)[0].states != a[0].states);
}
