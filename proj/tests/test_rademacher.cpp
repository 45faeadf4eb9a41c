#include <cmath>

#include "doctest.h"
#include "dyadiclab/errors.hpp"
#include "dyadiclab/rademacher.hpp"

using namespace dyadiclab;

namespace {

// all 2^N sign patterns, no symmetry reduction
double brute_pnorm(const std::vector<Vec>& el, double p, const NormedSpace& E) {
  const int N = static_cast<int>(el.size());
  double s = 0.0;
  for (int mask = 0; mask < (1 << N); ++mask) {
    Vec acc(static_cast<std::size_t>(E.n), 0.0);
    for (int k = 0; k < N; ++k)
      for (int c = 0; c < E.n; ++c) acc[static_cast<std::size_t>(c)] += ((mask >> k) & 1 ? -1.0 : 1.0) * el[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
    s += std::pow(E.norm(acc.data()), p);
  }
  return std::pow(s / (1 << N), 1.0 / p);
}

double power_iteration_norm(const Eigen::MatrixXd& T) {
  Eigen::MatrixXd G = T.transpose() * T;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(T.cols());
  double lam = 0.0;
  for (int it = 0; it < 2000; ++it) {
    Eigen::VectorXd y = G * x;
    lam = y.norm();
    if (lam == 0.0) return 0.0;
    x = y / lam;
  }
  return std::sqrt(lam);
}

std::vector<Vec> random_elems(Rng& rng, int N, int n) {
  std::vector<Vec> el(static_cast<std::size_t>(N), Vec(static_cast<std::size_t>(n)));
  for (auto& e : el)
    for (double& x : e) x = rng.normal();
  return el;
}

Eigen::MatrixXd random_matrix(Rng& rng, int n) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("rademacher p-norm examples") {
  auto R = NormedSpace::scalar();
  CHECK(rademacher_pnorm({{1.0}, {1.0}}, 2.0, R, SignEnsemble::all()).value == doctest::Approx(std::sqrt(2.0)));
  CHECK(rademacher_pnorm({{1.0, 0.0}, {0.0, 1.0}}, 2.0, NormedSpace::lq(2, kInf), SignEnsemble::all()).value ==
        doctest::Approx(1.0));
  CHECK(rademacher_pnorm({{1.0}, {1.0}}, 4.0, R, SignEnsemble::all()).value == doctest::Approx(std::pow(8.0, 0.25)));

  std::vector<Vec> big(21, Vec{1.0});
  CHECK_THROWS_AS(rademacher_pnorm(big, 2.0, R, SignEnsemble::all()), ResourceError);
  CHECK_THROWS_AS(rademacher_pnorm({}, 2.0, R, SignEnsemble::all()), PreconditionError);
}

TEST_CASE("exhaustive averages against brute enumeration") {
  Rng rng(1, "brute", 0);
  for (int t = 0; t < 20; ++t) {
    const int N = 1 + t % 10, n = 1 + t % 3;
    const double q = (t % 4 == 0) ? kInf : 1.0 + 2.0 * rng.uniform();
    const double p = 1.0 + 4.0 * rng.uniform();
    NormedSpace E = NormedSpace::lq(n, q);
    auto el = random_elems(rng, N, n);
    const double a = rademacher_pnorm(el, p, E, SignEnsemble::all(), Exec::serial).value;
    CHECK(a == doctest::Approx(brute_pnorm(el, p, E)).epsilon(1e-12));
    CHECK(a == rademacher_pnorm(el, p, E, SignEnsemble::all(), Exec::parallel).value);
  }
}

TEST_CASE("Monte Carlo agrees with exhaustive within three standard errors") {
  Rng rng(2, "mc-consistency", 0);
  for (int N : {3, 6, 9, 12}) {
    NormedSpace E = NormedSpace::lq(2, 1.5);
    auto el = random_elems(rng, N, 2);
    const double exact = rademacher_pnorm(el, 3.0, E, SignEnsemble::all()).value;
    const auto mc = rademacher_pnorm(el, 3.0, E, SignEnsemble::monte_carlo(20000, 77 + N));
    CHECK(mc.std_error > 0.0);
    CHECK(std::abs(mc.value - exact) <= 3.0 * mc.std_error);
    const auto mc2 = rademacher_pnorm(el, 3.0, E, SignEnsemble::monte_carlo(20000, 77 + N), Exec::serial);
    CHECK(mc2.value == mc.value);
  }
}

TEST_CASE("R-bound witnesses") {
  Rng rng(3, "witness", 0);
  NormedSpace E = NormedSpace::lq(3, 1.5);
  OperatorFamily id;
  id.ops.push_back(Eigen::MatrixXd::Identity(3, 3));
  OperatorFamily sc;
  sc.ops.push_back(-2.5 * Eigen::MatrixXd::Identity(3, 3));
  Assignment a;
  for (auto& e : random_elems(rng, 5, 3)) a.emplace_back(0, e);
  CHECK(rbound_witness(id, a, 3.0, E) == doctest::Approx(1.0));
  CHECK(rbound_witness(sc, a, 3.0, E) == doctest::Approx(2.5));

  // scalar family {1, 1/2} in R, p = 2: ratio^2 = sum t_n^2 x_n^2 / sum x_n^2
  auto half = OperatorFamily::scalars({1.0, 0.5});
  Assignment only_first{{0, {1.0}}, {0, {2.0}}};
  CHECK(rbound_witness(half, only_first, 2.0, NormedSpace::scalar()) == doctest::Approx(1.0));
  Assignment mixed{{0, {1.0}}, {1, {2.0}}};
  CHECK(rbound_witness(half, mixed, 2.0, NormedSpace::scalar()) == doctest::Approx(std::sqrt(2.0 / 5.0)));
  for (int t = 0; t < 20; ++t) {
    Assignment m;
    for (int k = 0; k < 4; ++k) m.push_back({static_cast<int>(rng.integer(0, 1)), {rng.normal()}});
    m[0].first = 1;
    CHECK(rbound_witness(half, m, 2.0, NormedSpace::scalar()) < 1.0);
  }

  Assignment zero{{0, {0.0, 0.0, 0.0}}};
  CHECK_THROWS_AS(rbound_witness(id, zero, 2.0, E), DegenerateInput);
}

TEST_CASE("R-bound probe") {
  Rng rng(4, "probe", 0);
  NormedSpace H = NormedSpace::lq(3, 2.0);
  for (int t = 0; t < 5; ++t) {
    OperatorFamily one;
    one.ops.push_back(random_matrix(rng, 3));
    CHECK(rbound_probe(one, 2.0, H, 10, 5) >= power_iteration_norm(one.ops[0]) * (1 - 1e-9));
  }
  OperatorFamily z;
  z.ops.push_back(Eigen::MatrixXd::Zero(2, 2));
  CHECK(rbound_probe(z, 2.0, NormedSpace::lq(2, 3.0), 12, 1) == 0.0);

  auto sc = OperatorFamily::scalars({0.3, -1.7, 0.9});
  CHECK(rbound_probe(sc, 3.0, NormedSpace::scalar(), 40, 2) == doctest::Approx(1.7));

  OperatorFamily fam;
  for (int k = 0; k < 3; ++k) fam.ops.push_back(random_matrix(rng, 2));
  NormedSpace E = NormedSpace::lq(2, 3.0);
  double prev = 0.0;
  for (int b : {1, 5, 20, 60}) {
    const double v = rbound_probe(fam, 1.5, E, b, 9);
    CHECK(v >= prev);
    CHECK(v == rbound_probe(fam, 1.5, E, b, 9));
    prev = v;
  }
  CHECK_THROWS_AS(rbound_probe(fam, 2.0, E, 0, 1), PreconditionError);
}

TEST_CASE("Kahane contraction on small scalar families") {
  // witness ratios never exceed max |t| for any p and any norm
  Rng rng(5, "kahane", 0);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> ts{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    double mx = 0.0;
    for (double x : ts) mx = std::max(mx, std::abs(x));
    OperatorFamily fam;
    for (double x : ts) fam.ops.push_back(x * Eigen::MatrixXd::Identity(2, 2));
    Assignment a;
    for (int k = 0; k < 6; ++k) a.push_back({static_cast<int>(rng.integer(0, 2)), {rng.normal(), rng.normal()}});
    const double p = 1.0 + 3.0 * rng.uniform();
    CHECK(rbound_witness(fam, a, p, NormedSpace::lq(2, 1.0 + 3.0 * rng.uniform())) <= mx * (1 + 1e-12));
  }
}

TEST_CASE("Stein inequality checks") {
  Rng rng(6, "stein", 0);
  Mesh m = Mesh::unit(1, 6);
  auto f = GridFunction::random(m, 1, rng);
  auto single = stein_check({f}, {3}, 2.5, NormedSpace::scalar(), 1.0);
  CHECK(single.ratio <= 1.0 + 1e-12);

  auto pc = cond_expect(GridFunction::random(m, 1, rng), 2);
  auto pc2 = cond_expect(GridFunction::random(m, 1, rng), 3);
  auto eq = stein_check({pc, pc2}, {2, 3}, 3.0, NormedSpace::scalar(), 2.0);
  CHECK(eq.lhs == doctest::Approx(eq.rhs).epsilon(1e-12));

  for (int t = 0; t < 25; ++t) {
    const int l0 = static_cast<int>(rng.integer(0, 3));
    const int l1 = l0 + static_cast<int>(rng.integer(0, 2));
    auto a = GridFunction::random(m, 1, rng), b = GridFunction::random(m, 1, rng);
    auto r2 = stein_check({a, b}, {l0, l1}, 2.0, NormedSpace::scalar(), beta_real(2.0));
    CHECK(r2.pass);
    auto r3 = stein_check({a, b, a}, {l0, l1, l1 + 1}, 3.0, NormedSpace::scalar(), beta_real(3.0));
    CHECK(r3.pass);
  }
  CHECK_THROWS_AS(stein_check({f, f}, {3, 2}, 2.0, NormedSpace::scalar(), 1.0), PreconditionError);
}

TEST_CASE("UMD probe") {
  CHECK(umd_probe(NormedSpace::lq(3, 1.0), 3.0, 1, 5, 1).ratio == doctest::Approx(1.0));
  const auto r2 = umd_probe(NormedSpace::scalar(), 2.0, 6, 20, 2);
  CHECK(r2.ratio == doctest::Approx(1.0).epsilon(1e-12));
  const auto r4 = umd_probe(NormedSpace::scalar(), 4.0, 6, 40, 3);
  CHECK(r4.ratio >= 1.0);
  CHECK(r4.ratio <= 3.0);
  CHECK(r4.best_signs.size() == 6);
  CHECK(umd_probe(NormedSpace::scalar(), 4.0, 6, 40, 3, Exec::serial).ratio == r4.ratio);
  CHECK_THROWS_AS(umd_probe(NormedSpace::scalar(), 2.0, 11, 1, 1), PreconditionError);
}

TEST_CASE("averaging preserves R-bounds") {
  // configurations where the pointwise probe is exact: scalar multiples of
  // the identity in any norm, and matrices on l^2 with p = 2
  Rng rng(7, "averaging", 0);
  int checked = 0;
  for (int t = 0; t < 120; ++t) {
    const bool scalar = t % 2 == 0;
    const int n = scalar ? 1 + t % 3 : 2 + t % 2;
    const int S = 1 + static_cast<int>(rng.integer(0, 2)), X = 2 + static_cast<int>(rng.integer(0, 3));
    NormedSpace E = scalar ? NormedSpace::lq(n, 1.0 + 3.0 * rng.uniform()) : NormedSpace::lq(n, 2.0);
    const double p = scalar ? 1.0 + 3.0 * rng.uniform() : 2.0;
    std::vector<double> w(static_cast<std::size_t>(X));
    double tot = 0.0;
    for (double& x : w) tot += (x = rng.uniform(0.1, 1.0));
    for (double& x : w) x /= tot;
    std::vector<std::vector<Eigen::MatrixXd>> L(static_cast<std::size_t>(S));
    std::vector<std::vector<double>> lam(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s)
      for (int x = 0; x < X; ++x) {
        L[static_cast<std::size_t>(s)].push_back(scalar ? rng.normal() * Eigen::MatrixXd::Identity(n, n)
                                                        : random_matrix(rng, n));
        lam[static_cast<std::size_t>(s)].push_back(rng.uniform(-1, 1));
      }
    auto r = averaging_check(L, lam, w, p, E, 30, 100 + static_cast<std::uint64_t>(t));
    CHECK(r.pass);
    ++checked;
  }
  CHECK(checked >= 100);
}

TEST_CASE("triangle inequality for R-bounds") {
  Rng rng(8, "triangle", 0);
  for (int t = 0; t < 100; ++t) {
    const bool scalar = t % 2 == 0;
    const int n = 2;
    OperatorFamily M, L;
    for (int k = 0; k < 2; ++k) {
      M.ops.push_back(scalar ? rng.normal() * Eigen::MatrixXd::Identity(n, n) : random_matrix(rng, n));
      L.ops.push_back(scalar ? rng.normal() * Eigen::MatrixXd::Identity(n, n) : random_matrix(rng, n));
    }
    NormedSpace E = scalar ? NormedSpace::lq(n, 1.0 + 3.0 * rng.uniform()) : NormedSpace::lq(n, 2.0);
    const double p = scalar ? 1.0 + 3.0 * rng.uniform() : 2.0;
    CHECK(triangle_check(M, L, p, E, 30, static_cast<std::uint64_t>(t)).pass);
  }
}
