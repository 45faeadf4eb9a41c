#include "dyadiclab/decoupling.hpp"

#include <bit>
#include <cmath>
#include <functional>

#include "dyadiclab/errors.hpp"

namespace dyadiclab {

namespace {

constexpr std::int64_t kProductCap = 1000000;

// pre-order build; returns the atom id
int grow(AtomHierarchy& h, int level, int parent, std::vector<std::int64_t> corner,
         const std::function<int(int)>& fanout, const std::function<double()>& weight) {
  const int id = static_cast<int>(h.atoms.size());
  h.atoms.push_back({});
  h.atoms.back().level = level;
  h.atoms.back().parent = parent;
  h.atoms.back().corner = corner;
  h.atoms.back().lo = h.cells();
  if (level == h.depth) {
    const double w = weight();
    h.cell_mu.push_back(w);
    h.atoms[static_cast<std::size_t>(id)].mu = w;
  } else {
    const int m = fanout(level);
    for (int k = 0; k < m; ++k) {
      auto c = corner;
      c.push_back(k);
      const int ch = grow(h, level + 1, id, c, fanout, weight);
      h.atoms[static_cast<std::size_t>(ch)].pos = k;
      h.atoms[static_cast<std::size_t>(id)].children.push_back(ch);
      h.atoms[static_cast<std::size_t>(id)].mu += h.atoms[static_cast<std::size_t>(ch)].mu;
    }
  }
  h.atoms[static_cast<std::size_t>(id)].hi = h.cells();
  return id;
}

double phi_hash(std::uint64_t seed, std::uint64_t t, std::uint64_t atom, const std::vector<double>& hist) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(seed);
  mix(t);
  mix(atom);
  for (double x : hist) mix(std::bit_cast<std::uint64_t>(x + 0.0));
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

}  // namespace

void AtomHierarchy::rebuild_chain() {
  const int L = depth + 1;
  chain.assign(static_cast<std::size_t>(cells() * L), -1);
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    const Atom& at = atoms[a];
    for (std::int64_t c = at.lo; c < at.hi; ++c) chain[static_cast<std::size_t>(c * L + at.level)] = static_cast<int>(a);
  }
}

int AtomHierarchy::atom_of(std::int64_t c, int level) const {
  if (c < 0 || c >= cells() || level < 0 || level > depth) throw RangeError("cell or level outside the hierarchy");
  return chain[static_cast<std::size_t>(c * (depth + 1) + level)];
}

std::vector<int> AtomHierarchy::atoms_at(int level) const {
  std::vector<int> out;
  for (std::size_t a = 0; a < atoms.size(); ++a)
    if (atoms[a].level == level) out.push_back(static_cast<int>(a));
  return out;
}

AtomHierarchy AtomHierarchy::random(Rng& rng, int depth, int max_children) {
  if (depth < 1 || max_children < 2) throw PreconditionError("hierarchy needs depth >= 1 and >= 2 children");
  AtomHierarchy h;
  h.depth = depth;
  grow(h, 0, -1, {}, [&](int) { return static_cast<int>(rng.integer(2, max_children)); },
       [&] { return static_cast<double>(rng.integer(1, 8)) / 8.0; });
  h.rebuild_chain();
  return h;
}

AtomHierarchy AtomHierarchy::dyadic(int depth) {
  AtomHierarchy h;
  h.depth = depth;
  const double w = std::ldexp(1.0, -depth);
  grow(h, 0, -1, {}, [](int) { return 2; }, [w] { return w; });
  h.rebuild_chain();
  return h;
}

std::vector<double> AdaptedFamily::sum() const {
  const int L = h->depth + 1;
  std::vector<double> s(static_cast<std::size_t>(h->cells() * n), 0.0);
  for (std::int64_t c = 0; c < h->cells(); ++c)
    for (int l = 0; l < h->depth; ++l) {
      const int K = h->chain[static_cast<std::size_t>(c * L + l)];
      if (f[static_cast<std::size_t>(K)].empty()) continue;
      const int pos = h->atoms[static_cast<std::size_t>(h->chain[static_cast<std::size_t>(c * L + l + 1)])].pos;
      const double* v = value(K, pos);
      for (int k = 0; k < n; ++k) s[static_cast<std::size_t>(c * n + k)] += v[k];
    }
  return s;
}

AdaptedFamily random_adapted_family(const AtomHierarchy& h, int n, Rng& rng, double density) {
  AdaptedFamily fam;
  fam.h = &h;
  fam.n = n;
  fam.f.resize(h.atoms.size());
  for (std::size_t a = 0; a < h.atoms.size(); ++a) {
    const Atom& K = h.atoms[a];
    if (K.children.empty() || rng.uniform() >= density) continue;
    const double scale = std::ldexp(1.0, static_cast<int>(rng.integer(-2, 2)));
    auto& v = fam.f[a];
    v.resize(K.children.size() * static_cast<std::size_t>(n));
    for (double& x : v) x = scale * rng.normal();
    for (int k = 0; k < n; ++k) {
      double mean = 0.0;
      for (std::size_t c = 0; c < K.children.size(); ++c)
        mean += h.atoms[static_cast<std::size_t>(K.children[c])].mu * v[c * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)];
      mean /= K.mu;
      for (std::size_t c = 0; c < K.children.size(); ++c) v[c * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)] -= mean;
    }
  }
  return fam;
}

double family_lp(const AdaptedFamily& fam, double p, const NormedSpace& E) {
  const auto s = fam.sum();
  double t = 0.0;
  for (std::int64_t c = 0; c < fam.h->cells(); ++c)
    t += fam.h->cell_mu[static_cast<std::size_t>(c)] * std::pow(E.norm(s.data() + c * fam.n), p);
  return std::pow(t, 1.0 / p);
}

Estimate decoupled_pnorm(const AdaptedFamily& fam, double p, const NormedSpace& E, const SignEnsemble& ens,
                         Exec ex) {
  const AtomHierarchy& h = *fam.h;
  const int L = h.depth + 1;
  const int n = fam.n;
  auto active = [&](std::int64_t c) {
    std::vector<int> ks;
    for (int l = 0; l < h.depth; ++l) {
      const int K = h.chain[static_cast<std::size_t>(c * L + l)];
      if (!fam.f[static_cast<std::size_t>(K)].empty()) ks.push_back(K);
    }
    return ks;
  };
  Estimate out;
  if (ens.exhaustive) {
    for (std::int64_t c = 0; c < h.cells(); ++c) {
      const auto ks = active(c);
      std::int64_t cnt = ks.empty() ? 1 : std::int64_t{1} << (ks.size() - 1);
      for (int K : ks) cnt *= static_cast<std::int64_t>(h.atoms[static_cast<std::size_t>(K)].children.size());
      if (cnt > kProductCap) throw ResourceError("decoupled enumeration beyond the cap");
    }
    const double s = ordered_sum(
        h.cells(),
        [&](std::int64_t c) {
          const auto ks = active(c);
          if (ks.empty()) return 0.0;
          const int t = static_cast<int>(ks.size());
          std::vector<int> y(static_cast<std::size_t>(t), 0);
          std::vector<double> acc(static_cast<std::size_t>(n));
          double e = 0.0;
          for (;;) {
            double w = 1.0;
            for (int q = 0; q < t; ++q) {
              const Atom& K = h.atoms[static_cast<std::size_t>(ks[static_cast<std::size_t>(q)])];
              w *= h.atoms[static_cast<std::size_t>(K.children[static_cast<std::size_t>(y[static_cast<std::size_t>(q)])])].mu / K.mu;
            }
            double es = 0.0;
            for (std::int64_t mask = 0; mask < (std::int64_t{1} << (t - 1)); ++mask) {
              std::fill(acc.begin(), acc.end(), 0.0);
              for (int q = 0; q < t; ++q) {
                const double sg = (q > 0 && ((mask >> (q - 1)) & 1)) ? -1.0 : 1.0;
                const double* v = fam.value(ks[static_cast<std::size_t>(q)], y[static_cast<std::size_t>(q)]);
                for (int k = 0; k < n; ++k) acc[static_cast<std::size_t>(k)] += sg * v[k];
              }
              es += std::pow(E.norm(acc.data()), p);
            }
            e += w * es / static_cast<double>(std::int64_t{1} << (t - 1));
            int q = 0;
            for (; q < t; ++q) {
              const auto m = static_cast<int>(h.atoms[static_cast<std::size_t>(ks[static_cast<std::size_t>(q)])].children.size());
              if (++y[static_cast<std::size_t>(q)] < m) break;
              y[static_cast<std::size_t>(q)] = 0;
            }
            if (q == t) break;
          }
          return h.cell_mu[static_cast<std::size_t>(c)] * e;
        },
        ex);
    out.value = std::pow(s, 1.0 / p);
    return out;
  }
  // sampled (x, eps, y); x drawn proportionally to mu
  const std::uint64_t T = ens.trials;
  if (T < 2) throw PreconditionError("Monte Carlo needs at least two trials");
  double total = 0.0;
  std::vector<double> cdf;
  for (double w : h.cell_mu) cdf.push_back(total += w);
  std::vector<double> vals(T);
  auto trial = [&](std::int64_t t) {
    Rng rng(ens.seed, "decoupled", static_cast<std::uint64_t>(t));
    const double u = rng.uniform(0.0, total);
    std::int64_t c = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    if (c >= h.cells()) c = h.cells() - 1;
    std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
    for (int K : active(c)) {
      const Atom& A = h.atoms[static_cast<std::size_t>(K)];
      double r = rng.uniform(0.0, A.mu), run = 0.0;
      int pos = 0;
      for (; pos + 1 < static_cast<int>(A.children.size()); ++pos) {
        run += h.atoms[static_cast<std::size_t>(A.children[static_cast<std::size_t>(pos)])].mu;
        if (r < run) break;
      }
      const double sg = rng.sign();
      const double* v = fam.value(K, pos);
      for (int k = 0; k < n; ++k) acc[static_cast<std::size_t>(k)] += sg * v[k];
    }
    vals[static_cast<std::size_t>(t)] = total * std::pow(E.norm(acc.data()), p);
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
  out.value = std::pow(mean, 1.0 / p);
  out.std_error = mean > 0 ? out.value / (p * mean) * std::sqrt(var / static_cast<double>(T)) : 0.0;
  return out;
}

UVTables construct_uv(const AdaptedFamily& fam) {
  const AtomHierarchy& h = *fam.h;
  const int n = fam.n;
  UVTables uv;
  uv.n = n;
  uv.per_atom.resize(h.atoms.size());
  for (std::size_t a = 0; a < h.atoms.size(); ++a) {
    if (fam.f[a].empty()) continue;
    const Atom& K = h.atoms[a];
    const int m = static_cast<int>(K.children.size());
    for (int k = 0; k < n; ++k) {
      double s = 0.0, scale = 0.0;
      for (int c = 0; c < m; ++c) {
        const double w = h.atoms[static_cast<std::size_t>(K.children[static_cast<std::size_t>(c)])].mu;
        s += w * fam.value(static_cast<int>(a), c)[k];
        scale += w * std::abs(fam.value(static_cast<int>(a), c)[k]);
      }
      if (std::abs(s) > 1e-12 * (1.0 + scale)) throw PreconditionError("f_K does not integrate to zero");
    }
    UVTable t;
    t.m = m;
    t.u.assign(static_cast<std::size_t>(m * m * n), 0.0);
    t.v.assign(static_cast<std::size_t>(m * m * n), 0.0);
    for (int A = 0; A < m; ++A)
      for (int B = 0; B < m; ++B)
        for (int k = 0; k < n; ++k) {
          const double x = fam.value(static_cast<int>(a), A)[k], y = fam.value(static_cast<int>(a), B)[k];
          const std::size_t idx = static_cast<std::size_t>((A * m + B) * n + k);
          // (x + y) is symmetric bit for bit, so u(A,B) == u(B,A) exactly
          t.u[idx] = 0.5 * (x + y);
          t.v[idx] = 0.5 * (x - y);
        }
    uv.per_atom[a] = std::move(t);
  }
  return uv;
}

double MdsReport::worst() const { return std::max(std::max(local_mean, local_odd), std::max(filtration, recovery)); }

MdsReport check_mds(const AdaptedFamily& fam, const UVTables& uv, int test_functions, std::uint64_t seed) {
  const AtomHierarchy& h = *fam.h;
  const int n = fam.n;
  const int L = h.depth + 1;
  MdsReport r;
  auto child_mu = [&](const Atom& K, int c) { return h.atoms[static_cast<std::size_t>(K.children[static_cast<std::size_t>(c)])].mu; };

  for (std::size_t a = 0; a < h.atoms.size(); ++a) {
    const UVTable& t = uv.per_atom[a];
    if (t.m == 0) continue;
    const Atom& K = h.atoms[a];
    const int m = t.m;
    for (int A = 0; A < m; ++A)
      for (int B = 0; B < m; ++B)
        for (int k = 0; k < n; ++k) {
          const std::size_t idx = static_cast<std::size_t>((A * m + B) * n + k);
          r.recovery = std::max(r.recovery, std::abs(t.u[idx] + t.v[idx] - fam.value(static_cast<int>(a), A)[k]));
          r.recovery = std::max(r.recovery, std::abs(t.u[idx] - t.v[idx] - fam.value(static_cast<int>(a), B)[k]));
        }
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int A = 0; A < m; ++A)
        for (int B = 0; B < m; ++B) s += t.u[static_cast<std::size_t>((A * m + B) * n + k)] * child_mu(K, A) * child_mu(K, B) / K.mu;
      r.local_mean = std::max(r.local_mean, std::abs(s));
    }
    for (int q = 0; q < test_functions; ++q) {
      std::vector<double> s(static_cast<std::size_t>(n), 0.0);
      for (int A = 0; A < m; ++A)
        for (int B = 0; B < m; ++B) {
          const std::size_t base = static_cast<std::size_t>((A * m + B) * n);
          std::vector<double> uval(t.u.begin() + static_cast<std::ptrdiff_t>(base), t.u.begin() + static_cast<std::ptrdiff_t>(base) + n);
          const double ph = phi_hash(seed, static_cast<std::uint64_t>(q), 0, uval);
          for (int k = 0; k < n; ++k) s[static_cast<std::size_t>(k)] += t.v[base + static_cast<std::size_t>(k)] * ph * child_mu(K, A) * child_mu(K, B) / K.mu;
        }
      for (double x : s) r.local_odd = std::max(r.local_odd, std::abs(x));
    }
  }

  // full filtration: E[u_l | u-history, level-l atoms] and E[v_l | history incl. u_l, level-l atoms]
  for (int l = 0; l < h.depth; ++l) {
    for (int q = 0; q < test_functions; ++q) {
      std::vector<double> Iu(static_cast<std::size_t>(n), 0.0), Iv(static_cast<std::size_t>(n), 0.0);
      for (std::int64_t c = 0; c < h.cells(); ++c) {
        std::vector<int> chainK(static_cast<std::size_t>(l + 1)), xpos(static_cast<std::size_t>(l + 1));
        for (int j = 0; j <= l; ++j) {
          chainK[static_cast<std::size_t>(j)] = h.chain[static_cast<std::size_t>(c * L + j)];
          xpos[static_cast<std::size_t>(j)] = h.atoms[static_cast<std::size_t>(h.chain[static_cast<std::size_t>(c * L + j + 1)])].pos;
        }
        std::vector<int> y(static_cast<std::size_t>(l + 1), 0);
        for (;;) {
          double w = h.cell_mu[static_cast<std::size_t>(c)];
          std::vector<double> hist;
          std::vector<double> ul(static_cast<std::size_t>(n), 0.0), vl(static_cast<std::size_t>(n), 0.0);
          for (int j = 0; j <= l; ++j) {
            const int K = chainK[static_cast<std::size_t>(j)];
            const Atom& A = h.atoms[static_cast<std::size_t>(K)];
            w *= child_mu(A, y[static_cast<std::size_t>(j)]) / A.mu;
            const UVTable& t = uv.per_atom[static_cast<std::size_t>(K)];
            for (int k = 0; k < n; ++k) {
              double uu = 0.0, vv = 0.0;
              if (t.m > 0) {
                const std::size_t idx = static_cast<std::size_t>((xpos[static_cast<std::size_t>(j)] * t.m + y[static_cast<std::size_t>(j)]) * n + k);
                uu = t.u[idx];
                vv = t.v[idx];
              }
              if (j < l) {
                hist.push_back(uu);
                hist.push_back(vv);
              } else {
                ul[static_cast<std::size_t>(k)] = uu;
                vl[static_cast<std::size_t>(k)] = vv;
              }
            }
          }
          const auto atom_l = static_cast<std::uint64_t>(chainK[static_cast<std::size_t>(l)]);
          const double phu = phi_hash(seed, static_cast<std::uint64_t>(q), atom_l, hist);
          for (double x : ul) hist.push_back(x);
          const double phv = phi_hash(seed ^ 0x9e3779b97f4a7c15ull, static_cast<std::uint64_t>(q), atom_l, hist);
          for (int k = 0; k < n; ++k) {
            Iu[static_cast<std::size_t>(k)] += w * ul[static_cast<std::size_t>(k)] * phu;
            Iv[static_cast<std::size_t>(k)] += w * vl[static_cast<std::size_t>(k)] * phv;
          }
          int j = 0;
          for (; j <= l; ++j) {
            const auto m = static_cast<int>(h.atoms[static_cast<std::size_t>(chainK[static_cast<std::size_t>(j)])].children.size());
            if (++y[static_cast<std::size_t>(j)] < m) break;
            y[static_cast<std::size_t>(j)] = 0;
          }
          if (j > l) break;
        }
      }
      for (int k = 0; k < n; ++k)
        r.filtration = std::max(r.filtration, std::max(std::abs(Iu[static_cast<std::size_t>(k)]), std::abs(Iv[static_cast<std::size_t>(k)])));
    }
  }
  return r;
}

DecouplingResult decoupling_check(const AdaptedFamily& fam, double p, const NormedSpace& E) {
  DecouplingResult r;
  r.norm = family_lp(fam, p, E);
  r.decoupled = decoupled_pnorm(fam, p, E).value;
  r.beta = beta_real(p);
  const double slack = 1.0 + 1e-12;
  r.pass = r.decoupled <= r.beta * r.norm * slack + 1e-300 && r.norm <= r.beta * r.decoupled * slack + 1e-300;
  return r;
}

FiniteFactor random_factor(Rng& rng, int points, int n) {
  FiniteFactor f;
  double tot = 0.0;
  for (int i = 0; i < points; ++i) {
    f.prob.push_back(static_cast<double>(rng.integer(1, 8)));
    tot += f.prob.back();
    f.block.push_back(static_cast<int>(rng.integer(0, points - 1)));
  }
  for (double& p : f.prob) p /= tot;
  f.f.resize(static_cast<std::size_t>(points * n));
  for (double& x : f.f) x = rng.normal();
  return f;
}

CondExpResult condexp_sum_check(const std::vector<FiniteFactor>& factors, double p, const NormedSpace& E) {
  const int n = E.n;
  std::int64_t total = 1;
  for (const auto& F : factors) {
    total *= static_cast<std::int64_t>(F.prob.size());
    if (total > kProductCap) throw ResourceError("product space beyond the cap");
  }
  // conditional expectations on each factor
  std::vector<std::vector<double>> ce;
  for (const auto& F : factors) {
    const std::size_t m = F.prob.size();
    if (F.block.size() != m || F.f.size() != m * static_cast<std::size_t>(n)) throw PreconditionError("malformed factor");
    std::vector<double> g(F.f.size(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      double w = 0.0;
      std::vector<double> s(static_cast<std::size_t>(n), 0.0);
      for (std::size_t j = 0; j < m; ++j)
        if (F.block[j] == F.block[i]) {
          w += F.prob[j];
          for (int k = 0; k < n; ++k) s[static_cast<std::size_t>(k)] += F.prob[j] * F.f[j * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)];
        }
      for (int k = 0; k < n; ++k) g[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)] = w > 0 ? s[static_cast<std::size_t>(k)] / w : 0.0;
    }
    ce.push_back(std::move(g));
  }
  double L = 0.0, R = 0.0;
  std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
  for (std::int64_t t = 0; t < total; ++t) {
    std::int64_t r = t;
    double w = 1.0;
    std::fill(a.begin(), a.end(), 0.0);
    std::fill(b.begin(), b.end(), 0.0);
    for (std::size_t q = 0; q < factors.size(); ++q) {
      const auto m = static_cast<std::int64_t>(factors[q].prob.size());
      const auto i = static_cast<std::size_t>(r % m);
      r /= m;
      w *= factors[q].prob[i];
      for (int k = 0; k < n; ++k) {
        a[static_cast<std::size_t>(k)] += ce[q][i * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(k)] += factors[q].f[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)];
      }
    }
    L += w * std::pow(E.norm(a.data()), p);
    R += w * std::pow(E.norm(b.data()), p);
  }
  CondExpResult out;
  out.lhs = std::pow(L, 1.0 / p);
  out.rhs = std::pow(R, 1.0 / p);
  out.ratio = out.rhs > 0 ? out.lhs / out.rhs : 0.0;
  return out;
}

}  // namespace dyadiclab
