#include <cmath>
#include <sstream>

#include "doctest.h"
#include "dyadiclab/errors.hpp"
#include "dyadiclab/representation.hpp"

using namespace dyadiclab;

namespace {

// midpoint rule for int_a^b int_c^d K(x - y); fine enough for bounded kernels
double midpoint_pair(const CzKernel& k, double a, double b, double c, double d, int pts) {
  const double hx = (b - a) / pts, hy = (d - c) / pts;
  double s = 0.0;
  for (int u = 0; u < pts; ++u)
    for (int v = 0; v < pts; ++v) s += k.profile(a + (u + 0.5) * hx - (c + (v + 0.5) * hy));
  return s * hx * hy;
}

GridFunction mean_zero(const Mesh& m, int n, Rng& rng) {
  auto f = GridFunction::random(m, n, rng);
  for (int c = 0; c < n; ++c) {
    double s = 0.0;
    for (std::int64_t x = 0; x < m.cells(); ++x) s += f.at(x)[c];
    s /= static_cast<double>(m.cells());
    for (std::int64_t x = 0; x < m.cells(); ++x) f.at(x)[c] -= s;
  }
  return f;
}

DiscreteOperator random_dense(const Mesh& m, int n, Rng& rng) {
  const std::int64_t N = m.cells();
  std::vector<double> w(static_cast<std::size_t>(N * N * n * n));
  for (double& x : w) x = rng.normal();
  return DiscreteOperator::from_matrix(m, n, std::move(w));
}

DyadicCube cube1(int level, std::int64_t c) {
  DyadicCube q;
  q.level = level;
  q.corner[0] = c;
  return q;
}

}  // namespace

TEST_CASE("closed-form interval pairs against quadrature") {
  const auto s = CzKernel::smooth_odd(0.3);
  const auto hc = CzKernel::hilbert(0.4);
  const double iv[][4] = {{0.0, 0.25, 0.1, 0.2}, {0.0, 0.5, 0.0, 0.5}, {0.1, 0.3, -0.2, 0.05}, {0.0, 0.1, 0.5, 0.9}};
  for (const auto& q : iv) {
    CHECK(s.interval_pair(q[0], q[1], q[2], q[3]) ==
          doctest::Approx(midpoint_pair(s, q[0], q[1], q[2], q[3], 1200)).epsilon(1e-5));
    // same interval: principal value vanishes for odd kernels
    CHECK(std::abs(s.interval_pair(q[0], q[1], q[0], q[1])) <= 1e-15);
  }
  // separated intervals, where the Hilbert integrand is smooth
  CHECK(hc.interval_pair(0.0, 0.1, 0.2, 0.3) == doctest::Approx(midpoint_pair(hc, 0.0, 0.1, 0.2, 0.3, 1500)).epsilon(1e-6));
  CHECK(hc.interval_pair(0.0, 0.1, 0.45, 0.9) == doctest::Approx(midpoint_pair(hc, 0.0, 0.1, 0.45, 0.9, 3000)).epsilon(1e-3));
  CHECK(CzKernel::zero().interval_pair(0, 1, 0, 1) == 0.0);
}

TEST_CASE("Hilbert matrix element of two separated intervals") {
  // I = [0, 1/8), J = [1/2, 1), oracle by direct quadrature of h_J(x) h_I(y) / (x - y)
  const auto H = CzKernel::hilbert();
  const Mesh m = Mesh::unit(1, 6);
  const auto T = DiscreteOperator::from_kernel(H, m, false);
  const double got = matrix_element(T, cube1(1, 1), 1, cube1(3, 0), 1)[0];
  const int pts = 2000;
  double s = 0.0;
  for (int u = 0; u < pts; ++u) {
    const double x = 0.5 + (u + 0.5) * 0.5 / pts;
    const double hJ = (x < 0.75 ? 1.0 : -1.0) / std::sqrt(0.5);
    for (int v = 0; v < pts; ++v) {
      const double y = (v + 0.5) * 0.125 / pts;
      const double hI = (y < 0.0625 ? 1.0 : -1.0) / std::sqrt(0.125);
      s += hJ * hI / (x - y);
    }
  }
  s *= (0.5 / pts) * (0.125 / pts);
  CHECK(got == doctest::Approx(s).epsilon(1e-6));
  // frozen from the quadrature above
  CHECK(got == doctest::Approx(-0.00699844).epsilon(1e-5));
}

TEST_CASE("zero and identity operators") {
  const Mesh m = Mesh::unit(1, 4);
  const auto Z = DiscreteOperator::from_kernel(CzKernel::zero(), m, false);
  const auto Id = DiscreteOperator::identity(m);
  for (int l = 0; l < 4; ++l)
    for (std::int64_t c = 0; c < (std::int64_t{1} << l); ++c) {
      CHECK(matrix_element(Z, cube1(l, c), 1, cube1(l, c), 1)[0] == 0.0);
      CHECK(matrix_element(Id, cube1(l, c), 1, cube1(l, c), 1)[0] == doctest::Approx(1.0).epsilon(1e-14));
      if (l > 0) CHECK(std::abs(matrix_element(Id, cube1(l - 1, c / 2), 1, cube1(l, c), 1)[0]) <= 1e-15);
    }
  auto wb = wbp_constants(Id, 0);
  CHECK(wb.max_abs == doctest::Approx(1.0));
  for (double v : wb.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));

  const Mesh m2 = Mesh::unit(2, 3);
  const auto Id2 = DiscreteOperator::identity(m2, 2);
  for (unsigned e = 1; e < 4; ++e)
    for (unsigned e2 = 1; e2 < 4; ++e2) {
      const auto E = matrix_element(Id2, DyadicCube{}, e, DyadicCube{}, e2);
      CHECK(E[0] == doctest::Approx(e == e2 ? 1.0 : 0.0));
      CHECK(E[1] == 0.0);
    }
}

TEST_CASE("matrix-free and dense routes agree") {
  Rng rng(11, "routes", 0);
  const Mesh m = Mesh::unit(1, 5);
  const auto k = CzKernel::smooth_odd(0.35).with_matrix(2, {1.0, 0.5, -0.25, 2.0});
  const auto free = DiscreteOperator::from_kernel(k, m, false, 0.3);
  const auto dense = DiscreteOperator::from_kernel(k, m, true, 0.3);
  auto f = GridFunction::random(m, 2, rng), g = GridFunction::random(m, 2, rng);
  CHECK(linf_diff(free.apply(f), dense.apply(f)) <= 1e-13);
  CHECK(free.bilinear(g, f) == doctest::Approx(dense.bilinear(g, f)).epsilon(1e-12));
  CHECK(linf_diff(free.apply_to_one(), dense.apply_to_one()) <= 1e-12);
  for (int t = 0; t < 20; ++t) {
    const int lJ = static_cast<int>(rng.integer(0, 4)), lI = static_cast<int>(rng.integer(0, 4));
    const auto J = cube1(lJ, rng.integer(0, (1 << lJ) - 1)), I = cube1(lI, rng.integer(0, (1 << lI) - 1));
    for (auto conv : {Convention::raw, Convention::extracted}) {
      const auto a = matrix_element(free, J, 1, I, 1, conv), b = matrix_element(dense, J, 1, I, 1, conv);
      for (int q = 0; q < 4; ++q) CHECK(a[q] == doctest::Approx(b[q]).epsilon(1e-11).scale(1.0));
    }
  }
  // adjoint: <g, T f> = <T* g, f>
  for (const auto* T : {&free, &dense}) {
    const auto A = T->adjoint();
    CHECK(T->bilinear(g, f) == doctest::Approx(A.bilinear(f, g)).epsilon(1e-12));
  }
  const auto R = random_dense(Mesh::unit(2, 2), 2, rng);
  auto f2 = GridFunction::random(R.mesh, 2, rng), g2 = GridFunction::random(R.mesh, 2, rng);
  CHECK(R.bilinear(g2, f2) == doctest::Approx(R.adjoint().bilinear(f2, g2)).epsilon(1e-12));
  // pair of cell indicators reproduces the dense block
  Box x{2, {1, 2, 0}, 1}, y{2, {3, 0, 0}, 1};
  const auto blk = R.pair(Step{{x, 1.0}}, Step{{y, 1.0}});
  const double* ref = R.block(R.mesh.index_of(x.lo), R.mesh.index_of(y.lo));
  for (int q = 0; q < 4; ++q) CHECK(blk[q] == ref[q]);
}

TEST_CASE("quadrature check") {
  const Mesh m = Mesh::unit(1, 10);
  const auto q = quadrature_check(CzKernel::hilbert(), m, cube1(2, 3), 1, cube1(3, 0), 1);
  CHECK_FALSE(q.under_resolved);
  CHECK(q.coarse == doctest::Approx(q.closed).epsilon(1e-5));
  CHECK(std::abs(q.fine - q.closed) < std::abs(q.coarse - q.closed));
  // adjacent Haar functions feel the excluded diagonal cells
  const auto adj = quadrature_check(CzKernel::hilbert(), Mesh::unit(1, 4), cube1(2, 1), 1, cube1(2, 2), 1);
  CHECK(adj.under_resolved);
  CHECK(std::abs(adj.fine - adj.closed) < std::abs(adj.coarse - adj.closed));
}

TEST_CASE("measured kernel constants stay below the declared ones") {
  for (const auto& k : {CzKernel::hilbert(), CzKernel::hilbert(0.5), CzKernel::smooth_odd(0.25), CzKernel::smooth_odd(2.0)}) {
    const auto c = measure_cz_constants(k, 20000, 3);
    CHECK(c.c0 <= k.c0 + 1e-9);
    CHECK(c.c_alpha <= k.c_alpha + 1e-9);
    CHECK(c.c0 > 0.5 * k.c0);
  }
  const auto z = measure_cz_constants(CzKernel::zero(), 100, 1);
  CHECK(z.c0 == 0.0);
  CHECK(CzKernel::hilbert(0.5).to_json().find("\"inf\"") != std::string::npos);
}

TEST_CASE("paraproduct extraction") {
  Rng rng(12, "extract", 0);
  SUBCASE("random dense operators, d = 1 and d = 2") {
    for (int d : {1, 2}) {
      const Mesh m = Mesh::unit(d, d == 1 ? 4 : 2);
      for (int t = 0; t < 3; ++t) {
        const auto T = random_dense(m, 1, rng);
        const auto f = mean_zero(m, 1, rng), g = mean_zero(m, 1, rng);
        const auto r = extraction_identity(T, g, f);
        CHECK(r.haar_raw == doctest::Approx(r.raw).epsilon(1e-10));
        CHECK(std::abs(r.residual) <= 1e-10 * (1.0 + std::abs(r.raw)));
      }
    }
  }
  SUBCASE("kernel operator, matrix-free and matrix valued") {
    const Mesh m = Mesh::unit(1, 5);
    const auto T = DiscreteOperator::from_kernel(
        CzKernel::hilbert(0.3).with_matrix(2, {0.0, 1.0, 2.0, 0.5}), m, false, 0.7);
    const auto f = mean_zero(m, 2, rng), g = mean_zero(m, 2, rng);
    const auto r = extraction_identity(T, g, f);
    CHECK(std::abs(r.residual) <= 1e-10);
    CHECK(std::abs(r.pi_t1) > 1e-6);
  }
  SUBCASE("identity: no paraproduct part") {
    const Mesh m = Mesh::unit(1, 4);
    const auto f = mean_zero(m, 1, rng), g = mean_zero(m, 1, rng);
    const auto r = extraction_identity(DiscreteOperator::identity(m), g, f);
    CHECK(r.raw == doctest::Approx(pair(g, f)));
    CHECK(std::abs(r.residual) <= 1e-10);
    CHECK(std::abs(r.pi_t1) <= 1e-12);
  }
  SUBCASE("T 1 = T* 1 = 0 leaves the elements untouched") {
    // w = c c^T with c orthogonal to constants
    const Mesh m = Mesh::unit(1, 3);
    const auto c = mean_zero(m, 1, rng);
    std::vector<double> w(64);
    for (int x = 0; x < 8; ++x)
      for (int y = 0; y < 8; ++y) w[x * 8 + y] = c.v[x] * c.v[y];
    const auto T = DiscreteOperator::from_matrix(m, 1, w);
    const auto f = mean_zero(m, 1, rng), g = mean_zero(m, 1, rng);
    const auto r = extraction_identity(T, g, f);
    CHECK(std::abs(r.pi_t1) <= 1e-13);
    CHECK(std::abs(r.pi_tstar1) <= 1e-13);
    CHECK(r.extracted == doctest::Approx(r.haar_raw).epsilon(1e-12));
    for (int l = 0; l < 2; ++l)
      CHECK(matrix_element(T, cube1(0, 0), 1, cube1(l + 1, 1), 1, Convention::extracted)[0] ==
            doctest::Approx(matrix_element(T, cube1(0, 0), 1, cube1(l + 1, 1), 1)[0]).epsilon(1e-12));
  }
  SUBCASE("coefficients are the Haar coefficients of the symbols") {
    const Mesh m = Mesh::unit(1, 4);
    const auto T = random_dense(m, 1, rng);
    const auto P = extract_paraproducts(T, 0, 3);
    const auto a = analyze(P.t1.b, 0), b = analyze(P.tstar1.b, 0);
    CHECK(P.coeffs.size() == 15);
    for (const auto& c : P.coeffs) {
      const auto idx = a.cube_index(c.cube);
      CHECK(c.t1[0] == doctest::Approx(a.coeff(c.cube.level, idx, 1)[0]).epsilon(1e-12));
      CHECK(c.tstar1[0] == doctest::Approx(b.coeff(c.cube.level, idx, 1)[0]).epsilon(1e-12));
    }
  }
}

TEST_CASE("shift coefficients") {
  Rng rng(13, "shift", 0);
  const int N = 6;
  const Mesh m = Mesh::unit(1, N);
  const auto sys = DyadicSystem::standard(1, 2, N);
  const auto T = DiscreteOperator::from_kernel(CzKernel::hilbert(), m, false);
  // in the standard grid only the two middle eighths of a cube are good
  GoodnessParams gp;
  gp.gamma = 0.5;
  gp.r = 3;
  gp.max_gap = 3;

  SUBCASE("i = j = 0 is one element times the sign pattern") {
    const auto K = cube1(2, 1);
    const auto tb = shift_coefficients(T, sys, K, 0, 0, gp);
    const double e = matrix_element(T, K, 1, K, 1)[0];
    CHECK(tb.res == 1);
    CHECK(tb.block(0, 0)[0] == doctest::Approx(e));
    CHECK(tb.block(1, 1)[0] == doctest::Approx(e));
    CHECK(tb.block(0, 1)[0] == doctest::Approx(-e));
    CHECK(tb.block(1, 0)[0] == doctest::Approx(-e));
  }
  SUBCASE("averaging operator reproduces the partial sum") {
    const auto f = GridFunction::random(m, 1, rng), g = GridFunction::random(m, 1, rng);
    int nonzero = 0;
    for (const auto& [i, j] : std::vector<std::pair<int, int>>{{0, 0}, {1, 0}, {0, 1}, {2, 1}, {1, 2}, {3, 0}, {2, 2}})
      for (const auto& K : {cube1(0, 0), cube1(1, 1), cube1(2, 2)}) {
        if (K.level + std::max(i, j) + 1 > N) continue;
        const auto tb = shift_coefficients(T, sys, K, i, j, gp);
        const auto Af = apply_averaging(K, tb, project_Di(f, K, i));
        const double viaTable = pair(g, project_Di(Af, K, j));
        const double direct = shift_partial_sum(T, sys, K, i, j, gp, g, f);
        CHECK(viaTable == doctest::Approx(direct).epsilon(1e-10).scale(1.0));
        if (std::abs(direct) > 1e-8) ++nonzero;
      }
    CHECK(nonzero > 5);
  }
  SUBCASE("(2, 1) table against a pair enumeration") {
    // pairs with I two levels down, J one level down, in different halves of K
    const auto K = cube1(1, 0);
    const auto tb = shift_coefficients(T, sys, K, 2, 1, gp, Convention::raw);
    CHECK(tb.res == 3);
    const Box Kb = sys.box(K);
    const double volK = 0.5;
    int hits = 0;
    for (std::int64_t jc = 0; jc < 2; ++jc)
      for (std::int64_t ic = 0; ic < 4; ++ic) {
        const auto J = cube1(2, jc), I = cube1(3, ic);
        const bool apart = (ic / 2) != jc;
        const bool good = is_good(sys, I, gp);
        const double e = matrix_element(T, J, 1, I, 1)[0] * volK / std::sqrt(0.25 * 0.125);
        // subcell of I's left half and of J's left half, eighths of K
        const std::int64_t xs = ic * 2 - Kb.lo[0] / 8, xps = jc * 4;
        const double want = (apart && good) ? e : 0.0;
        if (want != 0.0) ++hits;
        CHECK(tb.block(xps, xs)[0] == doctest::Approx(want).epsilon(1e-12).scale(1.0));
      }
    CHECK(hits > 0);
  }
  CHECK_THROWS_AS(shift_coefficients(T, sys, cube1(4, 0), 2, 1, gp), DepthError);
}

TEST_CASE("coefficient decay cases") {
  // in one dimension good cubes need r above about 2/gamma - 1
  const int N = 10;
  const Mesh m = Mesh::unit(1, N);
  Rng rng(15, "decay-grid", 0);
  const auto sys = DyadicSystem::random(1, 1, N, rng);
  GoodnessParams gp;
  gp.gamma = 0.5;
  gp.r = 4;
  DecayOptions o;
  o.i_min = 0;
  o.i_max = N - 1;
  o.k_max = 2;

  const auto Z = DiscreteOperator::from_kernel(CzKernel::zero(), m, false);
  CHECK_THROWS_AS(decay_check(Z, sys, DecayCase::far_disjoint, gp, o), InsufficientData);
  const auto eq = decay_check(Z, sys, DecayCase::equal, gp, o);
  CHECK(eq.pass);
  CHECK(eq.constant == 0.0);

  const auto H = DiscreteOperator::from_kernel(CzKernel::hilbert(), m, false);
  const auto far = decay_check(H, sys, DecayCase::far_disjoint, gp, o);
  CHECK(far.i.front() == 5);
  CHECK(far.target == doctest::Approx(0.0));
  CHECK(far.pass);
  const auto deep = decay_check(H, sys, DecayCase::deeply_nested, gp, o);
  CHECK(deep.target == doctest::Approx(-0.5));
  CHECK(deep.pass);
  for (auto c : {DecayCase::near_disjoint, DecayCase::shallowly_nested, DecayCase::equal}) {
    const auto b = decay_check(H, sys, c, gp, o);
    CHECK(b.pass);
    CHECK(b.i.back() <= gp.r);
  }

  o.exec = Exec::serial;
  const auto ser = decay_check(H, sys, DecayCase::far_disjoint, gp, o);
  CHECK(ser.max_magnitude == far.max_magnitude);
  CHECK(ser.pairs == far.pairs);

  // without goodness, adjacent equal cubes make the far case grow like 2^i
  o.require_good = false;
  const auto raw = decay_check(H, sys, DecayCase::far_disjoint, gp, o);
  CHECK(raw.slope > 0.5);
  CHECK_FALSE(raw.pass);

  GoodnessParams none;
  none.gamma = 0.125;
  none.r = 3;
  o.require_good = true;
  CHECK_THROWS_AS(decay_check(H, sys, DecayCase::far_disjoint, none, o), InsufficientData);
}

TEST_CASE("random-grid averaging identity") {
  Rng rng(14, "averaging", 0);
  const Mesh m = Mesh::unit(1, 4);
  const auto f = mean_zero(m, 1, rng), g = mean_zero(m, 1, rng);
  RepresentationConfig cfg;
  cfg.gp.gamma = 0.5;
  cfg.gp.r = 3;
  cfg.gp.max_gap = 3;
  cfg.m_top = 6;

  const auto Z = DiscreteOperator::from_kernel(CzKernel::zero(), m, false);
  const auto z = averaging_identity(Z, f, g, cfg);
  CHECK(z.lhs == 0.0);
  CHECK(z.rhs == 0.0);

  const auto T = DiscreteOperator::from_kernel(CzKernel::smooth_odd(0.5), m, false);
  const auto r = averaging_identity(T, f, g, cfg);
  CHECK(r.exhaustive);
  CHECK(r.grids == 1024);
  CHECK(r.pi_good == doctest::Approx(0.25));
  CHECK(r.lhs == doctest::Approx(T.bilinear(g, f)));
  CHECK(r.full_sum_omega0 == doctest::Approx(r.lhs).epsilon(1e-10));
  CHECK(r.relative <= 1e-2);

  auto mc = cfg;
  mc.exhaustive_bits = 4;
  mc.mc_samples = 2000;
  const auto s = averaging_identity(T, f, g, mc);
  CHECK_FALSE(s.exhaustive);
  CHECK(s.std_error > 0.0);
  CHECK(std::abs(s.rhs - r.rhs) <= 4.0 * s.std_error);
  mc.exec = Exec::serial;
  CHECK(averaging_identity(T, f, g, mc).rhs == s.rhs);

  GoodnessParams bad;
  bad.gamma = 0.125;
  bad.r = 3;
  bad.max_gap = 3;
  cfg.gp = bad;
  CHECK_THROWS_AS(averaging_identity(T, f, g, cfg), PreconditionError);
}

TEST_CASE("weak boundedness and coefficient output") {
  const Mesh m = Mesh::unit(1, 5);
  const auto T = DiscreteOperator::from_kernel(CzKernel::smooth_odd(0.4), m, false);
  const auto w = wbp_constants(T, 0);
  CHECK(w.values.size() == 63);
  CHECK(w.max_abs <= 1e-15);
  const auto D = DiscreteOperator::from_kernel(CzKernel::hilbert(0.5), m, false, 2.0);
  CHECK(wbp_constants(D, 0).max_abs == doctest::Approx(2.0));
  const auto M = DiscreteOperator::from_kernel(CzKernel::hilbert().with_matrix(2, {1, 0, 0, 3}), m, false, 1.0);
  CHECK(wbp_constants(M, 2).rbound == doctest::Approx(3.0).epsilon(1e-6));

  std::ostringstream os;
  write_coefficients_csv(os, 2, {{1, 0, DyadicCube{2, {1, 3, 0}}, {0.5}}});
  CHECK(os.str() == "i,j,K_level,K_corner,magnitude\n1,0,2,1;3,0.5\n");
  std::ostringstream om;
  write_coefficients_csv(om, 1, {{0, 0, DyadicCube{}, {1, 2, 3, 4}}});
  CHECK(om.str().rfind("i,j,K_level,K_corner,a_0_0,a_0_1,a_1_0,a_1_1\n", 0) == 0);
}
