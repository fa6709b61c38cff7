#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "branchwave/errors.hpp"
#include "branchwave/geometry.hpp"

using namespace branchwave;

namespace {

ErrorKind kind_of_throw(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::Io;
}

// Two sheets: a geodesic either runs straight (when the crossing parity of
// the segment matches the sheet change) or bends once at a branch point,
// where the sheet can be switched freely.
double two_sheet_oracle(const SheetPoint& a, const SheetPoint& b) {
  const Vec2 p = a.planar(), q = b.planar();
  const Vec2 qm{-1.0, 0.0}, qp{1.0, 0.0};
  const double bent = std::min(distance(p, qm) + distance(qm, q), distance(p, qp) + distance(qp, q));
  const int parity = crossing_parity(p, q) % 2;
  const bool sheet_change = a.sheet != b.sheet;
  return parity == static_cast<int>(sheet_change) ? std::min(distance(p, q), bent) : bent;
}

SheetPoint random_point(std::mt19937_64& rng, int sheets) {
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  std::uniform_int_distribution<int> s(0, sheets - 1);
  SheetPoint p{u(rng), u(rng), s(rng)};
  if (std::abs(p.y) < 1e-6) p.y = 1e-3;
  return p;
}

}  // namespace

TEST_CASE("same planar point on both sheets is 2 sqrt(1 + y^2) apart") {
  const CoveringSpec cover;
  for (double y : {0.5, 1.0, 2.0}) {
    const double d = geodesic_distance({0.0, y, 0}, {0.0, y, 1}, cover);
    CHECK(d == doctest::Approx(2.0 * std::sqrt(1.0 + y * y)).epsilon(1e-14));
  }
}

TEST_CASE("two-sheet distances match the bend-at-a-branch-point oracle") {
  const CoveringSpec cover;
  std::mt19937_64 rng(7);
  for (int k = 0; k < 2000; ++k) {
    const SheetPoint a = random_point(rng, 2), b = random_point(rng, 2);
    CHECK(geodesic_distance(a, b, cover) == doctest::Approx(two_sheet_oracle(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("distance is symmetric and satisfies the triangle inequality") {
  for (int n : {2, 3, 4}) {
    CoveringSpec cover;
    cover.num_sheets = n;
    std::mt19937_64 rng(100 + n);
    for (int k = 0; k < 2000; ++k) {
      const SheetPoint a = random_point(rng, n), b = random_point(rng, n), c = random_point(rng, n);
      const double ab = geodesic_distance(a, b, cover);
      CHECK(std::abs(ab - geodesic_distance(b, a, cover)) <= 1e-12);
      CHECK(ab <= geodesic_distance(a, c, cover) + geodesic_distance(c, b, cover) + 1e-12);
      CHECK(ab >= distance(a.planar(), b.planar()) - 1e-12);
    }
  }
}

TEST_CASE("monodromy cycles through the sheets") {
  CoveringSpec cover;
  cover.num_sheets = 3;
  CHECK(cover.monodromy(0) == 1);
  CHECK(cover.monodromy(2) == 0);
  CHECK(cover.monodromy(0, -1) == 2);
  CHECK(cover.monodromy(1, 3) == 1);
}

TEST_CASE("crossing parity counts transversal passes over the open cut") {
  CHECK(crossing_parity({0.0, -1.0}, {0.0, 1.0}) == 1);
  CHECK(crossing_parity({2.0, -1.0}, {2.0, 1.0}) == 0);
  CHECK(signed_crossing({0.5, -1.0}, {0.5, 1.0}) == 1);
  CHECK(signed_crossing({0.5, 1.0}, {0.5, -1.0}) == -1);
}

TEST_CASE("invalid points and degenerate segments are rejected") {
  const CoveringSpec cover;
  CHECK(kind_of_throw([&] { validate_point({1.0, 0.0, 0}, cover); }) == ErrorKind::InvalidPoint);
  CHECK(kind_of_throw([&] { validate_point({0.0, 1.0, 2}, cover); }) == ErrorKind::InvalidPoint);
  CHECK(kind_of_throw([] { crossing_parity({-2.0, -1.0}, {0.0, 1.0}); }) ==
        ErrorKind::SegmentThroughBranchPoint);
}

TEST_CASE("points on the cut take the sheet of the limit from below") {
  const CoveringSpec cover;
  const SheetPoint p = canonicalize({0.3, 0.0, 1}, cover);
  CHECK(p.sheet == 1);
  CHECK(std::abs(p.y) <= kCutNudge);
}

TEST_CASE("grids avoid branch points and have the documented size") {
  CHECK(kind_of_throw([] { check_branch_point_avoidance(2.0 / 7.0); }) == ErrorKind::BranchPointOnGrid);
  CHECK_NOTHROW(check_branch_point_avoidance(1.0 / 16.0));

  const CoveringSpec cover;
  const double L = 5.0, h = 0.25;
  const BranchedGrid g = build_grid(cover, L, h);
  const auto per_side = static_cast<std::size_t>(2 * std::ceil(L / h));
  CHECK(g.size() == 2 * per_side * per_side);
  CHECK(kind_of_throw([&] { build_grid(cover, 3.0, h); }) == ErrorKind::ExtentTooSmall);
}

TEST_CASE("adjacency is symmetric and cut edges switch sheets") {
  const CoveringSpec cover;
  const BranchedGrid g = build_grid(cover, 5.0, 0.25);
  int cut_edges = 0;
  for (std::size_t id = 0; id < g.size(); ++id) {
    const auto& n = g.node(id);
    for (int d = 0; d < 4; ++d) {
      const std::int64_t m = n.nbr[d];
      if (m < 0) continue;
      const int back = d ^ 1;  // East<->West, North<->South
      CHECK(g.node(static_cast<std::size_t>(m)).nbr[back] == static_cast<std::int64_t>(id));
      if (g.node(static_cast<std::size_t>(m)).sheet != n.sheet) {
        ++cut_edges;
        CHECK(std::abs(n.x) < 1.0);
      }
    }
  }
  // Each sheet has 8 columns with |x| < 1 at h = 1/4; both directions are counted.
  CHECK(cut_edges == 2 * 2 * 8);

  std::ostringstream os;
  g.write_adjacency_csv(os);
  CHECK(os.str().find('\n') != std::string::npos);
}

TEST_CASE("decoupled grids keep every edge on its sheet") {
  const CoveringSpec cover;
  const BranchedGrid g = build_grid(cover, 5.0, 0.25, {CutMode::Decoupled, BoundaryKind::Dirichlet});
  for (const auto& n : g.nodes())
    for (auto m : n.nbr)
      if (m >= 0) CHECK(g.node(static_cast<std::size_t>(m)).sheet == n.sheet);
}
