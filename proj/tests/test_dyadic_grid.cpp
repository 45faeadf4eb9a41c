#include "doctest.h"
#include "dyadiclab/dyadic_grid.hpp"
#include "dyadiclab/errors.hpp"

#include <cmath>
#include <set>

using namespace dyadiclab;

static DyadicCube cube1(int level, std::int64_t m) {
  DyadicCube c;
  c.level = level;
  c.corner[0] = m;
  return c;
}

TEST_CASE("translation by finer scales only") {
  DyadicSystem sys(1, 0, 6);
  sys.set_omega(2, 0, 1);
  auto g = sys.translate(cube1(1, 0));
  CHECK(g.lo[0] == doctest::Approx(0.25));
  CHECK(g.hi[0] == doctest::Approx(0.75));

  DyadicSystem s3(1, 0, 6);
  s3.set_omega(3, 0, 1);
  auto h = s3.translate(cube1(2, 0));
  CHECK(h.lo[0] == doctest::Approx(0.125));
  CHECK(h.hi[0] == doctest::Approx(0.375));
  // omega_2 does not move a level-2 cube
  auto same = sys.translate(cube1(2, 1));
  CHECK(same.lo[0] == doctest::Approx(0.25));

  DyadicSystem zero(2, 1, 4);
  DyadicCube c;
  c.level = 2;
  c.corner = {1, -3, 0};
  auto z = zero.translate(c);
  CHECK(z.lo[0] == 0.25);
  CHECK(z.lo[1] == -0.75);
}

TEST_CASE("children, parents and common ancestors") {
  DyadicSystem sys(1, 0, 5);
  auto I = cube1(2, 0), J = cube1(2, 1);
  CHECK(sys.common_ancestor(I, J) == cube1(1, 0));
  CHECK(sys.common_ancestor(cube1(3, 1), cube1(1, 0)) == cube1(1, 0));

  DyadicSystem sq(2, 0, 3);
  DyadicCube root;
  auto ch = sq.children(root);
  REQUIRE(ch.size() == 4);
  std::set<std::pair<std::int64_t, std::int64_t>> corners;
  for (auto& c : ch) {
    CHECK(c.level == 1);
    corners.insert({c.corner[0], c.corner[1]});
    CHECK(sq.parent(c) == root);
  }
  CHECK(corners.size() == 4);
  CHECK_THROWS_AS(sys.parent(DyadicCube{}), RangeError);
  CHECK_THROWS_AS(sys.common_ancestor(cube1(0, 0), cube1(0, -1)), RangeError);
}

TEST_CASE("partition and translation consistency under random omega") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed, "grid-test");
    auto sys = DyadicSystem::random(2, 2, 5, rng);
    for (int level = -2; level < 5; ++level) {
      DyadicCube c = sys.locate(level, Coord{3, 7, 0});
      const Box b = sys.box(c);
      std::int64_t vol = 0;
      for (const auto& ch : sys.children(c)) {
        const Box cb = sys.box(ch);
        CHECK(b.contains(cb));
        CHECK(sys.parent(ch) == c);
        vol += cb.len * cb.len;
      }
      CHECK(vol == b.len * b.len);
    }
  }
}

TEST_CASE("out-of-ambient cubes raise") {
  DyadicSystem sys(1, 1, 4);
  CHECK_NOTHROW(sys.translate(cube1(-1, -1)));
  CHECK_THROWS_AS(sys.translate(cube1(-1, 1)), RangeError);
  CHECK_THROWS_AS(sys.translate(cube1(0, 2)), RangeError);
}

TEST_CASE("goodness examples") {
  DyadicSystem sys(1, 0, 6);
  GoodnessParams gp;
  gp.gamma = 0.5;
  gp.r = 2;
  CHECK_FALSE(is_good(sys, cube1(3, 0), gp));
  gp.r = 3;
  // [3/8,1/2) against [0,1): 3/8 > (1/8)^{1/2}
  CHECK(is_good(sys, cube1(3, 3), gp));
  gp.r = 2;
  gp.max_gap = 1 + 1;  // only K = [0,1/2)
  CHECK_FALSE(is_good(sys, cube1(2, 1), gp));
  // no ancestor far enough up: vacuously good
  gp.r = 5;
  gp.max_gap = 64;
  CHECK(is_good(sys, cube1(3, 0), gp));
}

TEST_CASE("goodness tie resolves as bad") {
  // d=1, gamma=1, r=1: need dist/l(K) > 1/2, never true; and with gamma -> rel = 2^{-s}
  DyadicSystem sys(1, 0, 4);
  GoodnessParams gp;
  gp.gamma = 1.0 - 1e-16;  // 2^{-s gamma} ~ 2^{-s}
  gp.r = 1;
  gp.max_gap = 1;
  // I = [1/4,1/2) in K = [0,1/2): dist = 0 -> bad; I=[1/8,1/4) in [0,1/4): dist 0
  CHECK_FALSE(is_good(sys, cube1(2, 1), gp));
}

TEST_CASE("analytic goodness bound") {
  CHECK(goodness_bound(0.5, 10, 1) == doctest::Approx(0.5));
  CHECK(goodness_bound(0.125, 3, 1) < 0.0);
}

// Oracle: probability from the closed-form relative positions a_s = (m - W) mod 2^s.
static double goodness_oracle(double gamma, int r, int G) {
  std::uint64_t good = 0;
  for (std::uint64_t W = 0; W < (1u << G); ++W) {
    bool ok = true;
    for (int s = r; s <= G && ok; ++s) {
      const std::int64_t a = static_cast<std::int64_t>((-static_cast<std::int64_t>(W)) & ((1 << s) - 1));
      const std::int64_t dist = std::min<std::int64_t>(a, (1 << s) - 1 - a);
      ok = static_cast<double>(dist) / (1 << s) > std::pow(2.0, -s * gamma) + 1e-12;
    }
    good += ok;
  }
  return static_cast<double>(good) / (1u << G);
}

TEST_CASE("goodness probability by enumeration") {
  GoodnessParams gp;
  gp.gamma = 0.5;
  gp.r = 3;
  gp.max_gap = 5;
  auto gpr = goodness_probability(gp, 1);
  CHECK(gpr.bits == 5);
  CHECK(gpr.total == 32);
  // frozen from goodness_oracle: gaps 3..5 are jointly unsatisfiable
  CHECK(gpr.good == 0);
  CHECK(gpr.probability == doctest::Approx(goodness_oracle(0.5, 3, 5)));

  gp.max_gap = 3;
  auto g3 = goodness_probability(gp, 1);
  CHECK(g3.good == 2);  // positions 3 and 4 of 8
  for (int level : {3, 5, 7, 9})
    for (std::int64_t m : {0, 3, 17}) {
      DyadicCube b = cube1(level, m);
      CHECK(goodness_probability(gp, 1, b).good == g3.good);
    }

  gp.r = 10;
  gp.max_gap = 14;
  auto g10 = goodness_probability(gp, 1);
  CHECK(g10.good == 14788);  // goodness_oracle(0.5, 10, 14) * 2^14
  CHECK(g10.probability >= g10.analytic_bound);
  CHECK(g10.analytic_bound == doctest::Approx(0.5));

  gp.max_gap = 64;
  CHECK_THROWS_AS(goodness_probability(gp, 1, cube1(40, 0), 24), ResourceError);
}

TEST_CASE("goodness factorizes against position") {
  GoodnessParams gp;
  gp.gamma = 0.5;
  gp.r = 3;
  gp.max_gap = 3;
  auto j = goodness_joint(gp, 1, cube1(6, 5), 3);
  CHECK(j.good == 2 * 8);
  CHECK(j.factorizes);
  CHECK(j.total == (1u << 6));
  auto j2 = goodness_joint(gp, 2, [] {
    DyadicCube c;
    c.level = 6;
    c.corner = {2, 9, 0};
    return c;
  }(), 2, 24);
  CHECK(j2.factorizes);
}

TEST_CASE("infeasible boundary exponent leaves no good cube") {
  // r*gamma < 1: every ancestor 3..8 generations up is too close
  GoodnessParams gp;
  gp.gamma = 0.125;
  gp.r = 3;
  gp.max_gap = 8;
  CHECK(goodness_probability(gp, 1).good == 0);
}
