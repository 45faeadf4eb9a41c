#include <cmath>
#include <sstream>

#include "doctest.h"
#include "dyadiclab/errors.hpp"
#include "dyadiclab/function_space.hpp"

using namespace dyadiclab;

namespace {

DyadicCube cube(int level, std::int64_t m0, std::int64_t m1 = 0) {
  DyadicCube c;
  c.level = level;
  c.corner = {m0, m1, 0};
  return c;
}

// f(x) = x sampled at cell midpoints, which integrates linear functions exactly
GridFunction identity_1d(int depth) {
  Mesh m = Mesh::unit(1, depth);
  GridFunction f(m, 1);
  const double h = std::ldexp(1.0, -depth);
  for (std::int64_t c = 0; c < m.cells(); ++c) f.v[static_cast<std::size_t>(c)] = (static_cast<double>(c) + 0.5) * h;
  return f;
}

// zero-extend b from its mesh into the mesh over `root`
GridFunction embed(const GridFunction& b, const DyadicCube& root) {
  Mesh big = Mesh::over_cube(b.mesh.d, root, b.mesh.level);
  GridFunction out(big, b.n);
  for (std::int64_t c = 0; c < b.mesh.cells(); ++c) {
    const auto idx = big.index_of(b.mesh.cell_coord(c));
    for (int k = 0; k < b.n; ++k) out.at(idx)[k] = b.at(c)[k];
  }
  return out;
}

}  // namespace

TEST_CASE("haar evaluation examples") {
  std::array<double, kMaxDim> x{};
  x[0] = 0.25;
  CHECK(haar_eval(1, cube(0, 0), 1, x) == 1.0);
  x[0] = 0.75;
  CHECK(haar_eval(1, cube(0, 0), 1, x) == -1.0);
  x[0] = 0.1;
  CHECK(haar_eval(1, cube(1, 0), 1, x) == doctest::Approx(std::sqrt(2.0)));
  CHECK(haar_eval(1, cube(1, 0), 0, x) == doctest::Approx(std::sqrt(2.0)));
  x = {0.25, 0.75, 0.0};
  CHECK(haar_eval(2, cube(0, 0, 0), 3, x) == -1.0);
  CHECK(haar_eval(2, cube(0, 0, 0), 1, x) == 1.0);
  CHECK(haar_eval(2, cube(0, 0, 0), 2, x) == -1.0);
}

TEST_CASE("haar functions are orthonormal on the mesh") {
  for (int d = 1; d <= 2; ++d) {
    const int depth = d == 1 ? 5 : 3;
    Mesh m = Mesh::unit(d, depth);
    std::vector<GridFunction> hs;
    for (int k = 0; k < depth; ++k) {
      const std::int64_t per = std::int64_t{1} << k;
      for (std::int64_t a = 0; a < per; ++a)
        for (std::int64_t b = 0; b < (d == 2 ? per : 1); ++b)
          for (unsigned eta = 1; eta < (1u << d); ++eta)
            hs.push_back(haar_function(m, standard_box(d, cube(k, a, b), depth), eta));
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < hs.size(); ++i)
      for (std::size_t j = 0; j < hs.size(); ++j)
        worst = std::max(worst, std::abs(pair(hs[i], hs[j]) - (i == j ? 1.0 : 0.0)));
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("haar coefficients against direct pairing") {
  Mesh m = Mesh::unit(1, 6);
  auto ind = GridFunction::indicator(m, standard_box(1, cube(1, 0), 6));
  auto hc = analyze(ind, 0);
  CHECK(hc.coeff(0, 0, 1)[0] == doctest::Approx(0.5));

  // closed form: int_0^{1/2} x - int_{1/2}^1 x = -1/4
  auto id = identity_1d(8);
  auto hx = analyze(id, 0);
  CHECK(hx.coeff(0, 0, 1)[0] == doctest::Approx(-0.25).epsilon(1e-14));

  GridFunction one(m, 1);
  for (double& v : one.v) v = 3.0;
  auto h1 = analyze(one, 0);
  for (const auto& lvl : h1.data)
    for (double v : lvl) CHECK(v == doctest::Approx(0.0));

  // every coefficient agrees with the pairing against an explicit Haar function
  Rng rng(11, "haar-pair", 0);
  for (int d = 1; d <= 3; ++d) {
    const int depth = d == 3 ? 2 : 3;
    Mesh md = Mesh::unit(d, depth);
    auto f = GridFunction::random(md, 1, rng);
    auto c = analyze(f, 0);
    double worst = 0.0;
    for (int k = 0; k < depth; ++k) {
      const std::int64_t cnt = static_cast<std::int64_t>(std::pow(2.0, k * d));
      for (std::int64_t t = 0; t < cnt; ++t) {
        const DyadicCube I = c.cube_at(k, t);
        CHECK(c.cube_index(I) == t);
        for (unsigned eta = 1; eta < (1u << d); ++eta) {
          auto h = haar_function(md, standard_box(d, I, depth), eta);
          worst = std::max(worst, std::abs(c.coeff(k, t, eta)[0] - pair(h, f)));
        }
      }
    }
    CHECK(worst <= 1e-13);
  }
}

TEST_CASE("analysis and synthesis are inverse") {
  Rng rng(5, "complete", 0);
  struct Case {
    int d, depth, kmin, n;
  };
  for (Case cs : {Case{1, 10, 0, 1}, Case{1, 10, 4, 3}, Case{2, 5, 0, 2}, Case{2, 5, 2, 1}, Case{3, 3, 0, 1}}) {
    Mesh m = Mesh::unit(cs.d, cs.depth);
    auto f = GridFunction::random(m, cs.n, rng);
    auto back = synthesize(analyze(f, cs.kmin));
    CHECK(linf_diff(f, back) <= 1e-12);

    // same reconstruction through the projections
    GridFunction sum = cond_expect(f, cs.kmin);
    if (cs.d == 1 && cs.depth == 10) continue;
    for (int k = cs.kmin; k < cs.depth; ++k) {
      const std::int64_t per = std::int64_t{1} << k;
      const std::int64_t cnt = static_cast<std::int64_t>(std::pow(static_cast<double>(per), cs.d));
      for (std::int64_t t = 0; t < cnt; ++t) {
        DyadicCube I;
        I.level = k;
        std::int64_t r = t;
        for (int a = 0; a < cs.d; ++a) {
          I.corner[a] = r % per;
          r /= per;
        }
        add_project_D(f, standard_box(cs.d, I, cs.depth), sum);
      }
    }
    CHECK(linf_diff(f, sum) <= 1e-12);
  }
}

TEST_CASE("analysis on a translated root") {
  Rng rng(9, "offset", 0);
  Mesh m = Mesh::over_cube(2, cube(2, 3, 1), 6);
  auto f = GridFunction::random(m, 1, rng);
  auto c = analyze(f, 2);
  CHECK(c.coarse.size() == 1);
  CHECK(c.coarse[0] == doctest::Approx(average(f, m.bounds())[0]));
  CHECK(linf_diff(f, synthesize(c)) <= 1e-12);
  const DyadicCube I = cube(4, 13, 5);
  auto h = haar_function(m, standard_box(2, I, 6), 2);
  CHECK(c.coeff(4, c.cube_index(I), 2)[0] == doctest::Approx(pair(h, f)));
  CHECK_THROWS_AS(analyze(f, 1), PreconditionError);
}

TEST_CASE("shifted haar projections") {
  Mesh m = Mesh::unit(1, 5);
  auto f = GridFunction::indicator(m, standard_box(1, cube(2, 0), 5));
  auto d1 = project_Di(f, cube(0, 0), 1);
  // hand value: 1_[0,1/4) - (1/2) 1_[0,1/2)
  auto expect = GridFunction::indicator(m, standard_box(1, cube(2, 0), 5)) -
                GridFunction::indicator(m, standard_box(1, cube(1, 0), 5), 0.5);
  CHECK(linf_diff(d1, expect) <= 1e-15);
  CHECK(linf_diff(project_Di(f, cube(0, 0), 0), project_D(f, cube(0, 0))) == 0.0);

  GridFunction c(m, 1);
  for (double& v : c.v) v = -2.5;
  for (int i = 0; i < 5; ++i) CHECK(lp_norm(project_Di(c, cube(0, 0), i), kInf) <= 1e-15);
  CHECK_THROWS_AS(project_Di(f, cube(0, 0), 5), DepthError);

  Rng rng(3, "DiDm", 0);
  for (int d = 1; d <= 2; ++d) {
    Mesh md = Mesh::unit(d, d == 1 ? 7 : 4);
    auto g = GridFunction::random(md, 2, rng);
    const int imax = md.level - 1;
    for (int i = 0; i <= imax; ++i) {
      auto di = project_Di(g, cube(0, 0, 0), i);
      CHECK(std::abs(integral(di, md.bounds())[0]) <= 1e-13);
      CHECK(linf_diff(project_Di(di, cube(0, 0, 0), i), di) <= 1e-12);
      for (int k = 0; k <= imax; ++k)
        if (k != i) CHECK(lp_norm(project_Di(di, cube(0, 0, 0), k), kInf) <= 1e-12);
    }
  }
}

TEST_CASE("projection telescoping on a subcube") {
  Rng rng(21, "telescope", 0);
  Mesh m = Mesh::unit(2, 5);
  const DyadicCube S = cube(1, 1, 0);
  const Box sb = standard_box(2, S, 5);
  auto f = GridFunction::random(m, 1, rng);
  GridFunction fs(m, 1);
  for_each_cell(m, sb, [&](std::int64_t c) { fs.v[static_cast<std::size_t>(c)] = f.v[static_cast<std::size_t>(c)]; });
  GridFunction sum(m, 1);
  for (int i = 0; i < 4; ++i) sum += project_Di(fs, S, i);
  auto expect = fs - GridFunction::indicator(m, sb, average(fs, sb)[0]);
  CHECK(linf_diff(sum, expect) <= 1e-12);
}

TEST_CASE("lp norms and pairing") {
  Mesh m = Mesh::unit(1, 4);
  auto one = GridFunction::indicator(m, m.bounds());
  for (double p : {1.0, 1.5, 2.0, 3.0, kInf}) CHECK(lp_norm(one, p, NormedSpace::scalar()) == doctest::Approx(1.0));
  auto h = haar_function(m, m.bounds(), 1);
  CHECK(lp_norm(h, 2.0, NormedSpace::scalar()) == doctest::Approx(1.0));

  GridFunction c(m, 2);
  for (double& v : c.v) v = 1.0;
  CHECK(lp_norm(c, 3.0, NormedSpace::lq(2, kInf)) == doctest::Approx(1.0));
  CHECK(lp_norm(c, 3.0, NormedSpace::lq(2, 1.0)) == doctest::Approx(2.0));

  // Hoelder with the dual norm on random pairs
  Rng rng(4, "holder", 0);
  for (int t = 0; t < 50; ++t) {
    const double p = 1.1 + 4.0 * rng.uniform();
    const double q = t % 3 == 0 ? kInf : 1.0 + 3.0 * rng.uniform();
    NormedSpace E = NormedSpace::lq(3, q), Es = NormedSpace::lq(3, conjugate(q));
    auto f = GridFunction::random(m, 3, rng), g = GridFunction::random(m, 3, rng);
    CHECK(std::abs(pair(g, f)) <= lp_norm(g, conjugate(p), Es) * lp_norm(f, p, E) * (1 + 1e-12));
    double e[3], s[3];
    for (int k = 0; k < 3; ++k) {
      e[k] = rng.uniform(-1, 1);
      s[k] = rng.uniform(-1, 1);
    }
    CHECK(std::abs(e[0] * s[0] + e[1] * s[1] + e[2] * s[2]) <= E.norm(e) * E.dual_norm(s) * (1 + 1e-12));
  }
}

TEST_CASE("bmo norm examples") {
  Mesh m = Mesh::unit(1, 6);
  GridFunction c(m, 1);
  for (double& v : c.v) v = 7.0;
  CHECK(bmo_norm(c, 2.0, NormedSpace::scalar(), 0) == doctest::Approx(0.0));

  auto h = haar_function(m, m.bounds(), 1);
  for (double p : {1.0, 2.0, 4.0}) CHECK(bmo_norm(h, p, NormedSpace::scalar(), 0) == doctest::Approx(1.0));

  auto half = GridFunction::indicator(m, standard_box(1, cube(1, 0), 6));
  CHECK(bmo_norm(half, 1.0, NormedSpace::scalar(), 0) == doctest::Approx(0.5));
}

TEST_CASE("bmo ancestors match an explicit zero extension") {
  Rng rng(8, "bmo-anc", 0);
  for (int d = 1; d <= 2; ++d) {
    const DyadicCube root = cube(2, 1, 2);
    Mesh m = Mesh::over_cube(d, root, 5);
    auto b = GridFunction::random(m, 2, rng);
    for (double p : {1.0, 2.0, 3.0}) {
      NormedSpace T = NormedSpace::lq(2, 1.5);
      const double analytic = bmo_norm(b, p, T, 2, 0);
      const double direct = bmo_norm(embed(b, cube(0, 0, 0)), p, T, 0);
      CHECK(analytic == doctest::Approx(direct).epsilon(1e-12));
      CHECK(bmo_norm(b, p, T, 2) <= analytic + 1e-15);
    }
  }
}

TEST_CASE("grid function serialization round trip") {
  Rng rng(13, "io", 0);
  Mesh m = Mesh::over_cube(2, cube(1, 1, 0), 4);
  auto f = GridFunction::random(m, 3, rng);
  {
    std::stringstream ss;
    write_csv(ss, f);
    auto g = read_csv(ss);
    CHECK(g.mesh == f.mesh);
    CHECK(g.n == 3);
    CHECK(linf_diff(f, g) == 0.0);
  }
  {
    std::stringstream ss;
    write_binary(ss, f);
    auto g = read_binary(ss);
    CHECK(g.mesh == f.mesh);
    CHECK(linf_diff(f, g) == 0.0);
  }
  std::stringstream bad("not a grid\n");
  CHECK_THROWS_AS(read_csv(bad), PreconditionError);
}
