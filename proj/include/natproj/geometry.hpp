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

// Planar convex polytopes in dual vertex / halfspace form.
//
// Points are passed as the columns of an Eigen matrix (n_y x m). Storage is
// dimension-generic, but hull construction is implemented for n_y = 2 only.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "natproj/error.hpp"

namespace natproj {

/// Half-width of the axis-aligned offsets used to give collinear or
/// coincident clusters a non-empty interior.
inline constexpr double kDegenerateInflation = 1e-6;

template <typename Scalar_>
struct ConvexPolytope {
  using Scalar = Scalar_;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix vertices;  // n_y x n_v, counter-clockwise, extreme points only
  Matrix G;         // n_f x n_y, unit-norm rows
  Vector h;         // n_f

  Eigen::Index dim() const { return vertices.rows(); }
  Eigen::Index num_vertices() const { return vertices.cols(); }
  Eigen::Index num_facets() const { return G.rows(); }
};

using Polytope = ConvexPolytope<double>;

namespace detail {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
Scalar cross(const Point2<Scalar>& o, const Point2<Scalar>& a,
             const Point2<Scalar>& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew's monotone chain. Returns strictly convex CCW vertices starting at the
// lexicographically smallest point. Collinear and duplicate points are dropped.
template <typename Scalar>
std::vector<Point2<Scalar>> monotone_chain(std::vector<Point2<Scalar>> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const auto& a, const auto& b) { return a == b; }),
            pts.end());
  if (pts.size() < 3) return pts;

  std::vector<Point2<Scalar>> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= Scalar(0)) --k;
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = pts.size() - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= Scalar(0))
      --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

template <typename Scalar>
std::vector<Point2<Scalar>> inflate_segment(const Point2<Scalar>& a,
                                            const Point2<Scalar>& b) {
  const Scalar eps = static_cast<Scalar>(kDegenerateInflation);
  std::vector<Point2<Scalar>> pts;
  for (const auto& e : {a, b}) {
    pts.push_back(e + Point2<Scalar>(eps, 0));
    pts.push_back(e - Point2<Scalar>(eps, 0));
    pts.push_back(e + Point2<Scalar>(0, eps));
    pts.push_back(e - Point2<Scalar>(0, eps));
  }
  return monotone_chain(std::move(pts));
}

// A hull is treated as degenerate when every vertex lies within half the
// inflation radius of the segment joining its two farthest vertices.
template <typename Scalar>
bool is_thin(const std::vector<Point2<Scalar>>& hull, std::size_t& ia,
             std::size_t& ib) {
  ia = 0;
  ib = 0;
  Scalar best = -1;
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j) {
      const Scalar d = (hull[i] - hull[j]).squaredNorm();
      if (d > best) {
        best = d;
        ia = i;
        ib = j;
      }
    }
  if (hull.size() < 3) return true;
  const Point2<Scalar> dir = hull[ib] - hull[ia];
  const Scalar len = dir.norm();
  Scalar width = 0;
  for (const auto& v : hull)
    width = std::max(width, std::abs(cross(hull[ia], hull[ib], v)) / len);
  return width < static_cast<Scalar>(kDegenerateInflation) / 2;
}

}  // namespace detail

/// Halfspace form of a CCW polygon: one unit-normal row per edge.
template <typename Derived>
std::pair<Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>,
          Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>>
to_halfspaces(const Eigen::MatrixBase<Derived>& vertices) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (vertices.rows() != 2)
    throw Error(ErrorCode::DimensionMismatch, "halfspace conversion is 2-D only");
  const Eigen::Index n = vertices.cols();
  if (n < 3) throw Error(ErrorCode::DegenerateInput, "need at least 3 vertices");

  Scalar twice_area = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = (i + 1) % n;
    twice_area += vertices(0, i) * vertices(1, j) - vertices(0, j) * vertices(1, i);
  }
  if (!(twice_area > Scalar(0)))
    throw Error(ErrorCode::DegenerateInput,
                "vertices are collinear or not counter-clockwise");

  Matrix G(n, 2);
  Vector h(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = (i + 1) % n;
    const Scalar dx = vertices(0, j) - vertices(0, i);
    const Scalar dy = vertices(1, j) - vertices(1, i);
    const Scalar len = std::hypot(dx, dy);
    if (!(len > Scalar(0)))
      throw Error(ErrorCode::DegenerateInput, "repeated vertex");
    G(i, 0) = dy / len;
    G(i, 1) = -dx / len;
    h(i) = G(i, 0) * vertices(0, i) + G(i, 1) * vertices(1, i);
  }
  return {std::move(G), std::move(h)};
}

/// Exact convex hull of the columns of `points`. Collinear or coincident
/// inputs are inflated by kDegenerateInflation so the result always has a
/// non-empty interior.
template <typename Derived>
ConvexPolytope<typename Derived::Scalar> convex_hull(
    const Eigen::MatrixBase<Derived>& points, Eigen::Index min_points = 3) {
  using Scalar = typename Derived::Scalar;
  using P2 = detail::Point2<Scalar>;
  if (points.rows() != 2)
    throw Error(ErrorCode::DimensionMismatch,
                "hull construction is implemented for 2-D hull states only");
  if (min_points < points.rows() + 1) min_points = points.rows() + 1;
  if (points.cols() < min_points)
    throw Error(ErrorCode::TooFewPoints,
                "need " + std::to_string(min_points) + " points, got " +
                    std::to_string(points.cols()));
  if (!points.allFinite())
    throw Error(ErrorCode::NonFinite, "hull input has a non-finite coordinate");

  std::vector<P2> pts;
  pts.reserve(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index i = 0; i < points.cols(); ++i) pts.emplace_back(points.col(i));

  auto hull = detail::monotone_chain(std::move(pts));
  std::size_t ia = 0, ib = 0;
  if (detail::is_thin(hull, ia, ib)) hull = detail::inflate_segment(hull[ia], hull[ib]);

  ConvexPolytope<Scalar> poly;
  poly.vertices.resize(2, static_cast<Eigen::Index>(hull.size()));
  for (std::size_t i = 0; i < hull.size(); ++i)
    poly.vertices.col(static_cast<Eigen::Index>(i)) = hull[i];
  std::tie(poly.G, poly.h) = to_halfspaces(poly.vertices);
  return poly;
}

/// True iff G x <= h + tol componentwise.
template <typename Scalar, typename Derived>
bool contains(const ConvexPolytope<Scalar>& p, const Eigen::MatrixBase<Derived>& x,
              Scalar tol = Scalar(0)) {
  if (x.size() != p.G.cols())
    throw Error(ErrorCode::DimensionMismatch, "point dimension does not match polytope");
  return ((p.G * x).array() <= (p.h.array() + tol)).all();
}

/// Largest halfspace violation max_i (G_i x - h_i); negative means strictly inside.
template <typename Scalar, typename Derived>
Scalar max_violation(const ConvexPolytope<Scalar>& p,
                     const Eigen::MatrixBase<Derived>& x) {
  return (p.G * x - p.h).maxCoeff();
}

/// Shoelace area of the vertex polygon.
template <typename Scalar>
Scalar area(const ConvexPolytope<Scalar>& p) {
  const Eigen::Index n = p.vertices.cols();
  if (n < 3) return Scalar(0);
  Scalar twice = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = (i + 1) % n;
    twice += p.vertices(0, i) * p.vertices(1, j) - p.vertices(0, j) * p.vertices(1, i);
  }
  return std::abs(twice) / 2;
}

/// Euclidean distance from x to the polygon; zero inside.
template <typename Scalar, typename Derived>
Scalar distance(const ConvexPolytope<Scalar>& p, const Eigen::MatrixBase<Derived>& x) {
  if (contains(p, x)) return Scalar(0);
  using P2 = detail::Point2<Scalar>;
  const P2 q = x;
  Scalar best = std::numeric_limits<Scalar>::infinity();
  const Eigen::Index n = p.vertices.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    const P2 a = p.vertices.col(i);
    const P2 b = p.vertices.col((i + 1) % n);
    const P2 ab = b - a;
    const Scalar t = std::clamp((q - a).dot(ab) / ab.squaredNorm(), Scalar(0), Scalar(1));
    best = std::min(best, (a + t * ab - q).norm());
  }
  return best;
}

}  // namespace natproj
