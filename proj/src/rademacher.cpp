#include "dyadiclab/rademacher.hpp"

#include <cmath>

#include "dyadiclab/errors.hpp"
#include "dyadiclab/rng.hpp"

namespace dyadiclab {

namespace {

double pnorm_pow(const double* v, const NormedSpace& E, double p) { return std::pow(E.norm(v), p); }

}  // namespace

Estimate rademacher_pnorm(const std::vector<Vec>& elems, double p, const NormedSpace& E,
                          const SignEnsemble& ens, Exec ex) {
  const int N = static_cast<int>(elems.size());
  if (N < 1) throw PreconditionError("empty element list");
  const int n = E.n;
  Estimate out;
  if (ens.exhaustive) {
    if (N > kExhaustiveSignCap) throw ResourceError("exhaustive sign enumeration beyond 20 elements");
    // eps_0 = +1 by the symmetry eps -> -eps
    const std::int64_t patterns = std::int64_t{1} << (N - 1);
    const double s = ordered_sum(
        patterns,
        [&](std::int64_t mask) {
          double buf[16];
          std::vector<double> big;
          double* acc = buf;
          if (n > 16) {
            big.assign(static_cast<std::size_t>(n), 0.0);
            acc = big.data();
          }
          for (int c = 0; c < n; ++c) acc[c] = elems[0][static_cast<std::size_t>(c)];
          for (int k = 1; k < N; ++k) {
            const double e = ((mask >> (k - 1)) & 1) ? -1.0 : 1.0;
            for (int c = 0; c < n; ++c) acc[c] += e * elems[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
          }
          return pnorm_pow(acc, E, p);
        },
        ex);
    out.value = std::pow(s / static_cast<double>(patterns), 1.0 / p);
    return out;
  }
  const std::uint64_t T = ens.trials;
  if (T < 2) throw PreconditionError("Monte Carlo needs at least two trials");
  std::vector<double> vals(T);
  auto trial = [&](std::int64_t t) {
    Rng rng(ens.seed, "rademacher", static_cast<std::uint64_t>(t));
    std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < N; ++k) {
      const double e = rng.sign();
      for (int c = 0; c < n; ++c) acc[static_cast<std::size_t>(c)] += e * elems[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
    }
    vals[static_cast<std::size_t>(t)] = pnorm_pow(acc.data(), E, p);
  };
  if (ex == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(T); ++t) trial(t);
  } else {
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(T); ++t) trial(t);
  }
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(T);
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= static_cast<double>(T - 1);
  const double se_m = std::sqrt(var / static_cast<double>(T));
  out.value = std::pow(mean, 1.0 / p);
  out.std_error = mean > 0 ? out.value / (p * mean) * se_m : 0.0;
  return out;
}

OperatorFamily OperatorFamily::scalars(const std::vector<double>& t) {
  OperatorFamily f;
  for (double x : t) {
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = x;
    f.ops.push_back(m);
  }
  return f;
}

double rbound_witness(const OperatorFamily& fam, const Assignment& asg, double p, const NormedSpace& E,
                      const SignEnsemble& ens) {
  if (asg.empty()) throw PreconditionError("empty assignment");
  std::vector<Vec> in, out;
  for (const auto& [k, e] : asg) {
    in.push_back(e);
    Eigen::Map<const Eigen::VectorXd> ev(e.data(), static_cast<Eigen::Index>(e.size()));
    Eigen::VectorXd te = fam.ops.at(static_cast<std::size_t>(k)) * ev;
    out.emplace_back(te.data(), te.data() + te.size());
  }
  const double den = rademacher_pnorm(in, p, E, ens, Exec::serial).value;
  if (!(den > 0.0)) throw DegenerateInput("zero Rademacher norm of the input");
  return rademacher_pnorm(out, p, E, ens, Exec::serial).value / den;
}

double operator_norm(const Eigen::MatrixXd& T, const NormedSpace& E, int budget, std::uint64_t seed) {
  if (T.size() == 0) return 0.0;
  if (!E.custom && (E.q == 2.0 || E.n == 1)) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(T);
    return svd.singularValues()(0);
  }
  const int n = static_cast<int>(T.cols());
  double best = 0.0;
  for (int t = 0; t < budget; ++t) {
    Rng rng(seed, "operator-norm", static_cast<std::uint64_t>(t));
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.normal();
    if (t < n) x = Eigen::VectorXd::Unit(n, t);
    auto ratio = [&](const Eigen::VectorXd& v) {
      const double den = E.norm(v.data());
      if (!(den > 0)) return 0.0;
      Eigen::VectorXd tv = T * v;
      return E.norm(tv.data()) / den;
    };
    double cur = ratio(x);
    double step = 0.5;
    for (int it = 0; it < 60; ++it) {
      Eigen::VectorXd y = x;
      const int i = static_cast<int>(rng.integer(0, n - 1));
      y(i) += step * rng.normal();
      const double r = ratio(y);
      if (r > cur) {
        cur = r;
        x = y;
      } else if (it % 10 == 9) {
        step *= 0.5;
      }
    }
    best = std::max(best, cur);
  }
  return best;
}

double rbound_probe(const OperatorFamily& fam, double p, const NormedSpace& E, int budget, std::uint64_t seed) {
  if (budget < 1) throw PreconditionError("probe budget must be positive");
  const int nops = static_cast<int>(fam.ops.size());
  if (nops == 0) return 0.0;
  const int n = fam.dim();
  std::vector<double> vals(static_cast<std::size_t>(budget), 0.0);
  for (int t = 0; t < budget; ++t) {
    if (t < nops) {
      vals[static_cast<std::size_t>(t)] = operator_norm(fam.ops[static_cast<std::size_t>(t)], E, 8, seed + static_cast<std::uint64_t>(t));
      continue;
    }
    Rng rng(seed, "rbound-probe", static_cast<std::uint64_t>(t));
    const int N = 2 + t % 7;
    Assignment asg;
    for (int k = 0; k < N; ++k) {
      Vec e(static_cast<std::size_t>(n));
      for (double& x : e) x = rng.normal();
      asg.emplace_back(static_cast<int>(rng.integer(0, nops - 1)), e);
    }
    try {
      vals[static_cast<std::size_t>(t)] = rbound_witness(fam, asg, p, E);
    } catch (const DegenerateInput&) {
      vals[static_cast<std::size_t>(t)] = 0.0;
    }
  }
  double best = 0.0;
  for (double v : vals) best = std::max(best, v);
  return best;
}

SteinResult stein_check(const std::vector<GridFunction>& fs, const std::vector<int>& levels, double p,
                        const NormedSpace& E, double beta_ref) {
  const int K = static_cast<int>(fs.size());
  if (K < 1 || static_cast<int>(levels.size()) != K) throw PreconditionError("one level per function");
  if (K > kExhaustiveSignCap) throw ResourceError("too many functions for exhaustive signs");
  for (int k = 1; k < K; ++k)
    if (levels[static_cast<std::size_t>(k)] < levels[static_cast<std::size_t>(k - 1)])
      throw PreconditionError("conditioning levels must form a filtration");
  std::vector<GridFunction> gs;
  for (int k = 0; k < K; ++k) gs.push_back(cond_expect(fs[static_cast<std::size_t>(k)], levels[static_cast<std::size_t>(k)]));
  const std::int64_t patterns = std::int64_t{1} << (K - 1);
  auto side = [&](const std::vector<GridFunction>& hs) {
    const double s = ordered_sum(patterns, [&](std::int64_t mask) {
      GridFunction acc = hs[0];
      for (int k = 1; k < K; ++k) {
        const double e = ((mask >> (k - 1)) & 1) ? -1.0 : 1.0;
        const auto& h = hs[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += e * h.v[i];
      }
      return std::pow(lp_norm(acc, p, E), p);
    });
    return std::pow(s / static_cast<double>(patterns), 1.0 / p);
  };
  SteinResult r;
  r.lhs = side(gs);
  r.rhs = side(fs);
  if (!(r.rhs > 0.0)) throw DegenerateInput("zero right-hand side");
  r.ratio = r.lhs / r.rhs;
  r.pass = r.ratio <= beta_ref + 1e-12;
  return r;
}

UmdProbe umd_probe(const NormedSpace& E, double p, int depth, int samples, std::uint64_t seed, Exec ex) {
  if (depth < 1 || depth > 10) throw PreconditionError("martingale depth must be 1..10");
  const Mesh m = Mesh::unit(1, depth);
  const int n = E.n;
  const std::int64_t cells = m.cells();
  UmdProbe best;
  best.ratio = 0.0;
  for (int s = 0; s < samples; ++s) {
    Rng rng(seed, "umd-probe", static_cast<std::uint64_t>(s));
    // d[k][cell][c]
    std::vector<std::vector<double>> d(static_cast<std::size_t>(depth),
                                       std::vector<double>(static_cast<std::size_t>(cells * n), 0.0));
    for (int k = 0; k < depth; ++k) {
      const std::int64_t cubes = std::int64_t{1} << k;
      const std::int64_t len = cells / cubes;
      const double scale = std::ldexp(1.0, static_cast<int>(rng.integer(-3, 3)));
      for (std::int64_t q = 0; q < cubes; ++q) {
        std::vector<double> c(static_cast<std::size_t>(n));
        for (double& x : c) x = scale * rng.normal();
        for (std::int64_t x = 0; x < len; ++x) {
          const double sg = x < len / 2 ? 1.0 : -1.0;
          for (int j = 0; j < n; ++j)
            d[static_cast<std::size_t>(k)][static_cast<std::size_t>((q * len + x) * n + j)] = sg * c[static_cast<std::size_t>(j)];
        }
      }
    }
    auto norm_for = [&](std::int64_t mask) {
      std::vector<double> acc(static_cast<std::size_t>(cells * n), 0.0);
      for (int k = 0; k < depth; ++k) {
        const double e = (k > 0 && ((mask >> (k - 1)) & 1)) ? -1.0 : 1.0;
        const auto& dk = d[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += e * dk[i];
      }
      double sum = 0.0;
      for (std::int64_t c = 0; c < cells; ++c) sum += std::pow(E.norm(acc.data() + c * n), p);
      return std::pow(sum / static_cast<double>(cells), 1.0 / p);
    };
    const double base = norm_for(0);
    if (!(base > 0.0)) continue;
    const std::int64_t patterns = std::int64_t{1} << (depth - 1);
    std::vector<double> r(static_cast<std::size_t>(patterns));
    if (ex == Exec::parallel) {
#pragma omp parallel for schedule(static)
      for (std::int64_t mk = 0; mk < patterns; ++mk) r[static_cast<std::size_t>(mk)] = norm_for(mk) / base;
    } else {
      for (std::int64_t mk = 0; mk < patterns; ++mk) r[static_cast<std::size_t>(mk)] = norm_for(mk) / base;
    }
    for (std::int64_t mk = 0; mk < patterns; ++mk) {
      if (r[static_cast<std::size_t>(mk)] > best.ratio) {
        best.ratio = r[static_cast<std::size_t>(mk)];
        best.best_signs.assign(static_cast<std::size_t>(depth), 1);
        for (int k = 1; k < depth; ++k)
          if ((mk >> (k - 1)) & 1) best.best_signs[static_cast<std::size_t>(k)] = -1;
      }
    }
  }
  return best;
}

CalculusResult averaging_check(const std::vector<std::vector<Eigen::MatrixXd>>& pointwise,
                               const std::vector<std::vector<double>>& lambda,
                               const std::vector<double>& cell_weight, double p, const NormedSpace& E,
                               int budget, std::uint64_t seed) {
  OperatorFamily all, avg;
  for (std::size_t s = 0; s < pointwise.size(); ++s) {
    double mass = 0.0;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(pointwise[s][0].rows(), pointwise[s][0].cols());
    for (std::size_t x = 0; x < pointwise[s].size(); ++x) {
      all.ops.push_back(pointwise[s][x]);
      a += lambda[s][x] * cell_weight[x] * pointwise[s][x];
      mass += std::abs(lambda[s][x]) * cell_weight[x];
    }
    if (mass > 1.0 + 1e-12) throw PreconditionError("averaging weights exceed unit mass");
    avg.ops.push_back(a);
  }
  CalculusResult r;
  r.witness = rbound_probe(avg, p, E, budget, seed);
  r.bound = rbound_probe(all, p, E, budget, seed + 1);
  r.pass = r.witness <= r.bound * (1.0 + 1e-12) + 1e-15;
  return r;
}

CalculusResult triangle_check(const OperatorFamily& M, const OperatorFamily& L, double p, const NormedSpace& E,
                              int budget, std::uint64_t seed) {
  OperatorFamily sum;
  for (const auto& a : M.ops)
    for (const auto& b : L.ops) sum.ops.push_back(a + b);
  CalculusResult r;
  r.witness = rbound_probe(sum, p, E, budget, seed);
  r.bound = rbound_probe(M, p, E, budget, seed + 1) + rbound_probe(L, p, E, budget, seed + 2);
  r.pass = r.witness <= r.bound * (1.0 + 1e-12) + 1e-15;
  return r;
}

}  // namespace dyadiclab
