#include "dyadiclab/shift_paraproduct.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "dyadiclab/errors.hpp"
#include "dyadiclab/rng.hpp"
#include "json.hpp"

namespace dyadiclab {

namespace {

std::int64_t ipow2(int e) { return std::int64_t{1} << e; }

std::uint64_t cube_key(const DyadicCube& c) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(c.level)));
  for (auto x : c.corner) mix(static_cast<std::uint64_t>(x));
  return h;
}

// averages of f over the 2^{res d} subcubes of K (box in mesh units)
std::vector<double> gather(const GridFunction& f, const Box& K, int res) {
  const int d = f.mesh.d;
  const std::int64_t sub_side = ipow2(res);
  const std::int64_t sub_len = K.len >> res;
  const std::int64_t s = ipow2(res * d);
  std::vector<double> F(static_cast<std::size_t>(s * f.n), 0.0);
  for_each_cell(f.mesh, K, [&](std::int64_t c) {
    const Coord x = f.mesh.cell_coord(c);
    std::int64_t idx = 0;
    for (int a = d - 1; a >= 0; --a) idx = idx * sub_side + (x[a] - K.lo[a]) / sub_len;
    const double* v = f.at(c);
    for (int k = 0; k < f.n; ++k) F[static_cast<std::size_t>(idx * f.n + k)] += v[k];
  });
  double per = 1.0;
  for (int a = 0; a < d; ++a) per *= static_cast<double>(sub_len);
  for (double& v : F) v /= per;
  return F;
}

void scatter_add(GridFunction& out, const Box& K, int res, const std::vector<double>& H) {
  const int d = out.mesh.d;
  const std::int64_t sub_side = ipow2(res);
  const std::int64_t sub_len = K.len >> res;
  for_each_cell(out.mesh, K, [&](std::int64_t c) {
    const Coord x = out.mesh.cell_coord(c);
    std::int64_t idx = 0;
    for (int a = d - 1; a >= 0; --a) idx = idx * sub_side + (x[a] - K.lo[a]) / sub_len;
    double* o = out.at(c);
    for (int k = 0; k < out.n; ++k) o[k] += H[static_cast<std::size_t>(idx * out.n + k)];
  });
}

// D^i_K on a local subcell array (res levels below K)
std::vector<double> local_D(const std::vector<double>& F, int d, int res, int i, int n) {
  const std::int64_t side = ipow2(res);
  const std::int64_t s = ipow2(res * d);
  const std::int64_t Iside = side >> i;  // subcells per axis of one I
  const std::int64_t half = Iside / 2;
  std::vector<double> G(F.size(), 0.0);
  std::vector<double> avgI(static_cast<std::size_t>(n)), avgC(static_cast<std::size_t>(n * (1 << d)));
  const std::int64_t nI = ipow2(i * d);
  const std::int64_t perI = ipow2(i);
  for (std::int64_t t = 0; t < nI; ++t) {
    Coord lo{};
    std::int64_t r = t;
    for (int a = 0; a < d; ++a) {
      lo[a] = (r % perI) * Iside;
      r /= perI;
    }
    std::fill(avgI.begin(), avgI.end(), 0.0);
    std::fill(avgC.begin(), avgC.end(), 0.0);
    const std::int64_t cnt = ipow2((res - i) * d);
    for (std::int64_t u = 0; u < cnt; ++u) {
      Coord x{};
      std::int64_t q = u;
      unsigned e = 0;
      for (int a = 0; a < d; ++a) {
        const std::int64_t off = q % Iside;
        q /= Iside;
        x[a] = lo[a] + off;
        if (off >= half) e |= 1u << a;
      }
      std::int64_t idx = 0;
      for (int a = d - 1; a >= 0; --a) idx = idx * side + x[a];
      for (int k = 0; k < n; ++k) {
        const double v = F[static_cast<std::size_t>(idx * n + k)];
        avgI[static_cast<std::size_t>(k)] += v;
        avgC[static_cast<std::size_t>(e * n + k)] += v;
      }
    }
    const double nc = static_cast<double>(cnt);
    const double nch = nc / (1 << d);
    for (std::int64_t u = 0; u < cnt; ++u) {
      Coord x{};
      std::int64_t q = u;
      unsigned e = 0;
      for (int a = 0; a < d; ++a) {
        const std::int64_t off = q % Iside;
        q /= Iside;
        x[a] = lo[a] + off;
        if (off >= half) e |= 1u << a;
      }
      std::int64_t idx = 0;
      for (int a = d - 1; a >= 0; --a) idx = idx * side + x[a];
      for (int k = 0; k < n; ++k)
        G[static_cast<std::size_t>(idx * n + k)] =
            avgC[static_cast<std::size_t>(e * n + k)] / nch - avgI[static_cast<std::size_t>(k)] / nc;
    }
  }
  (void)s;
  return G;
}

// (1/s) sum_{x'} a(x,x') g(x'), optionally with the transposed kernel
std::vector<double> local_apply(const KernelTable& a, const std::vector<double>& g, bool transpose) {
  const std::int64_t s = a.subcells();
  const int n = a.n;
  std::vector<double> h(static_cast<std::size_t>(s * n), 0.0);
  for (std::int64_t x = 0; x < s; ++x) {
    double* hx = h.data() + x * n;
    for (std::int64_t xp = 0; xp < s; ++xp) {
      const double* gx = g.data() + xp * n;
      const double* blk = transpose ? a.block(xp, x) : a.block(x, xp);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) hx[r] += (transpose ? blk[c * n + r] : blk[r * n + c]) * gx[c];
    }
  }
  const double inv = 1.0 / static_cast<double>(s);
  for (double& v : h) v *= inv;
  return h;
}

std::vector<DyadicCube> cubes_in_root(const DyadicCube& root, int d, int k) {
  std::vector<DyadicCube> out;
  const std::int64_t per = ipow2(k - root.level);
  const std::int64_t count = ipow2((k - root.level) * d);
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t t = 0; t < count; ++t) {
    DyadicCube c;
    c.level = k;
    std::int64_t r = t;
    for (int a = 0; a < d; ++a) {
      c.corner[a] = root.corner[a] * per + r % per;
      r /= per;
    }
    out.push_back(c);
  }
  return out;
}

GridFunction shift_impl(const ShiftSpec& s, const GridFunction& f, Exec ex, bool adjoint) {
  const auto [k0, k1] = shift_levels(s, f.mesh);
  const int res = s.resolution();
  const int i_in = adjoint ? s.j : s.i;
  const int j_out = adjoint ? s.i : s.j;
  GridFunction out(f.mesh, f.n);
  for (int k = k0; k <= k1; ++k) {
    const auto Ks = cubes_in_root(s.root, s.d, k);
    const std::int64_t nk = static_cast<std::int64_t>(Ks.size());
    auto term = [&](std::int64_t t) {
      const DyadicCube& K = Ks[static_cast<std::size_t>(t)];
      const Box Kb = standard_box(f.mesh.d, K, f.mesh.level);
      const KernelTable a = shift_kernel(s, K);
      const auto F = gather(f, Kb, res);
      const auto G = local_D(F, s.d, res, i_in, f.n);
      const auto H = local_apply(a, G, adjoint);
      const auto O = local_D(H, s.d, res, j_out, f.n);
      scatter_add(out, Kb, res, O);  // cubes of one level are disjoint
    };
    if (ex == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
      for (std::int64_t t = 0; t < nk; ++t) term(t);
    } else {
      for (std::int64_t t = 0; t < nk; ++t) term(t);
    }
  }
  return out;
}

}  // namespace

double KernelTable::max_abs() const {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

std::pair<int, int> shift_levels(const ShiftSpec& s, const Mesh& m) {
  const int res = s.resolution();
  int k0 = s.root.level, k1 = m.level - res;
  if (s.kmax >= s.kmin) {
    k0 = s.kmin;
    k1 = s.kmax;
  }
  if (k0 < s.root.level) throw RangeError("shift level above the root cube");
  if (k1 + res > m.level || k1 < k0) throw DepthError("shift complexity exceeds the mesh depth");
  return {k0, k1};
}

KernelTable shift_kernel(const ShiftSpec& s, const DyadicCube& K) {
  auto it = s.tables.find(K);
  if (it != s.tables.end()) return it->second;
  KernelTable t;
  t.d = s.d;
  t.res = s.resolution();
  t.n = s.n;
  const std::int64_t sc = t.subcells();
  t.a.assign(static_cast<std::size_t>(sc * sc * s.n * s.n), 0.0);
  Rng rng(s.kernel_seed, "shift-kernel", cube_key(K));
  if (s.n == 1) {
    for (double& v : t.a) v = s.sign_kernel ? s.r_cap * rng.sign() : rng.uniform(-s.r_cap, s.r_cap);
    return t;
  }
  for (double& v : t.a) v = rng.uniform(-1.0, 1.0);
  // every block rescaled to l^2 operator norm <= r_cap
  double worst = 0.0;
  for (std::int64_t x = 0; x < sc; ++x)
    for (std::int64_t xp = 0; xp < sc; ++xp) {
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> B(t.block(x, xp), s.n, s.n);
      worst = std::max(worst, Eigen::JacobiSVD<Eigen::MatrixXd>(B).singularValues()(0));
    }
  if (worst > 0) {
    const double scale = s.r_cap / worst;
    for (double& v : t.a) v *= scale;
  }
  return t;
}

GridFunction apply_averaging(const DyadicCube& K, const KernelTable& a, const GridFunction& f) {
  const Box Kb = standard_box(f.mesh.d, K, f.mesh.level);
  if ((Kb.len >> a.res) < 1) throw DepthError("kernel finer than the mesh");
  GridFunction out(f.mesh, f.n);
  const auto F = gather(f, Kb, a.res);
  scatter_add(out, Kb, a.res, local_apply(a, F, false));
  return out;
}

GridFunction apply_shift(const ShiftSpec& s, const GridFunction& f, Exec ex) { return shift_impl(s, f, ex, false); }

GridFunction apply_shift_adjoint(const ShiftSpec& s, const GridFunction& g, Exec ex) {
  return shift_impl(s, g, ex, true);
}

GridFunction apply_shift_reference(const ShiftSpec& s, const GridFunction& f) {
  const auto [k0, k1] = shift_levels(s, f.mesh);
  GridFunction out(f.mesh, f.n);
  for (int k = k0; k <= k1; ++k)
    for (const auto& K : cubes_in_root(s.root, s.d, k)) {
      const auto a = shift_kernel(s, K);
      out += project_Di(apply_averaging(K, a, project_Di(f, K, s.i)), K, s.j);
    }
  return out;
}

std::vector<std::vector<DyadicCube>> mod_L_partition(const std::vector<DyadicCube>& cubes, int L) {
  if (L < 1) throw PreconditionError("L must be positive");
  std::vector<std::vector<DyadicCube>> out(static_cast<std::size_t>(L));
  for (const auto& c : cubes) out[static_cast<std::size_t>(((c.level % L) + L) % L)].push_back(c);
  return out;
}

namespace {

struct Pyramid {
  int kmin = 0, N = 0, d = 1, n = 1;
  Mesh mesh;
  std::vector<std::vector<double>> avg;  // level k - kmin

  Pyramid(const GridFunction& f, int k0) : kmin(k0), N(f.mesh.level), d(f.mesh.d), n(f.n), mesh(f.mesh) {
    avg.resize(static_cast<std::size_t>(N - kmin + 1));
    avg.back() = f.v;
    for (int k = N - 1; k >= kmin; --k) {
      const std::int64_t cpa = mesh.side >> (N - k);
      std::int64_t count = 1;
      for (int a = 0; a < d; ++a) count *= cpa;
      auto& cur = avg[static_cast<std::size_t>(k - kmin)];
      const auto& fine = avg[static_cast<std::size_t>(k + 1 - kmin)];
      cur.assign(static_cast<std::size_t>(count * n), 0.0);
      for (std::int64_t t = 0; t < count; ++t) {
        std::int64_t r = t;
        Coord q{};
        for (int a = 0; a < d; ++a) {
          q[a] = r % cpa;
          r /= cpa;
        }
        for (unsigned e = 0; e < (1u << d); ++e) {
          std::int64_t idx = 0;
          for (int a = d - 1; a >= 0; --a) idx = idx * (2 * cpa) + 2 * q[a] + ((e >> a) & 1u);
          for (int c = 0; c < n; ++c)
            cur[static_cast<std::size_t>(t * n + c)] += fine[static_cast<std::size_t>(idx * n + c)] / (1 << d);
        }
      }
    }
  }

  const double* at(int k, const Coord& rel_cell) const {
    const int sh = N - k;
    const std::int64_t cpa = mesh.side >> sh;
    std::int64_t idx = 0;
    for (int a = d - 1; a >= 0; --a) idx = idx * cpa + (rel_cell[a] >> sh);
    return avg[static_cast<std::size_t>(k - kmin)].data() + idx * n;
  }
};

}  // namespace

GridFunction apply_paraproduct(const ParaproductSpec& s, const GridFunction& f, Exec ex) {
  const int N = f.mesh.level;
  const int k1 = s.kmax >= s.kmin ? s.kmax : N - 1;
  if (k1 > N - 1) throw DepthError("paraproduct level below the mesh");
  const int nb = s.b.n;
  const int n = f.n;
  if (nb != 1 && nb != n * n) throw PreconditionError("symbol must be scalar or n x n");
  if (s.kmin > N || (f.mesh.side >> (N - s.kmin)) == 0) throw RangeError("paraproduct level above the mesh root");
  if (!(s.b.mesh == f.mesh)) throw PreconditionError("symbol and input on different meshes");
  const Pyramid B(s.b, s.kmin), F(f, s.kmin);
  GridFunction out(f.mesh, n);
  const std::int64_t cells = f.mesh.cells();
  auto cell = [&](std::int64_t c) {
    Coord rel{};
    std::int64_t r = c;
    for (int a = 0; a < f.mesh.d; ++a) {
      rel[a] = r % f.mesh.side;
      r /= f.mesh.side;
    }
    double* o = out.at(c);
    for (int k = s.kmin; k <= k1; ++k) {
      const double* bk = B.at(k, rel);
      const double* bk1 = B.at(k + 1, rel);
      const double* fk = F.at(k, rel);
      if (nb == 1) {
        const double db = bk1[0] - bk[0];
        for (int q = 0; q < n; ++q) o[q] += db * fk[q];
      } else {
        for (int row = 0; row < n; ++row)
          for (int col = 0; col < n; ++col) o[row] += (bk1[row * n + col] - bk[row * n + col]) * fk[col];
      }
    }
  };
  if (ex == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < cells; ++c) cell(c);
  } else {
    for (std::int64_t c = 0; c < cells; ++c) cell(c);
  }
  return out;
}

GridFunction apply_paraproduct_reference(const ParaproductSpec& s, const GridFunction& f) {
  const int N = f.mesh.level;
  const int k1 = s.kmax >= s.kmin ? s.kmax : N - 1;
  const int n = f.n;
  const int nb = s.b.n;
  GridFunction out(f.mesh, n);
  const Mesh& m = f.mesh;
  for (int k = s.kmin; k <= k1; ++k) {
    const std::int64_t len = ipow2(N - k);
    const std::int64_t cpa = m.side / len;
    std::int64_t count = 1;
    for (int a = 0; a < m.d; ++a) count *= cpa;
    for (std::int64_t t = 0; t < count; ++t) {
      Box Q;
      Q.d = m.d;
      Q.len = len;
      std::int64_t r = t;
      for (int a = 0; a < m.d; ++a) {
        Q.lo[a] = m.origin[a] + (r % cpa) * len;
        r /= cpa;
      }
      const GridFunction Db = project_D(s.b, Q);
      const auto fq = average(f, Q);
      for_each_cell(m, Q, [&](std::int64_t c) {
        const double* db = Db.at(c);
        double* o = out.at(c);
        for (int row = 0; row < n; ++row) {
          if (nb == 1) {
            o[row] += db[0] * fq[static_cast<std::size_t>(row)];
          } else {
            for (int col = 0; col < n; ++col) o[row] += db[row * n + col] * fq[static_cast<std::size_t>(col)];
          }
        }
      });
    }
  }
  return out;
}

RatioResult operator_ratio(const LinearOp& op, const std::vector<GridFunction>& samples, double p,
                           const NormedSpace& E) {
  RatioResult r;
  bool any = false;
  for (std::size_t t = 0; t < samples.size(); ++t) {
    const double den = lp_norm(samples[t], p, E);
    if (!(den > 0.0)) {
      r.ratios.push_back(0.0);
      continue;
    }
    any = true;
    const double v = lp_norm(op(samples[t]), p, E) / den;
    r.ratios.push_back(v);
    if (v > r.max_ratio) {
      r.max_ratio = v;
      r.argmax = t;
    }
  }
  if (!any) throw DegenerateInput("all samples vanish");
  return r;
}

using nlohmann::json;

namespace {

json cube_json(const DyadicCube& c, int d) {
  json corner = json::array();
  for (int a = 0; a < d; ++a) corner.push_back(c.corner[a]);
  return json{{"level", c.level}, {"corner", corner}};
}

DyadicCube cube_from(const json& j) {
  DyadicCube c;
  c.level = j.at("level").get<int>();
  const auto& cr = j.at("corner");
  for (std::size_t a = 0; a < cr.size() && a < kMaxDim; ++a) c.corner[a] = cr[a].get<std::int64_t>();
  return c;
}

json mesh_json(const Mesh& m) {
  json o = json::array();
  for (int a = 0; a < m.d; ++a) o.push_back(m.origin[a]);
  return json{{"d", m.d}, {"level", m.level}, {"side", m.side}, {"origin", o}};
}

Mesh mesh_from(const json& j) {
  Mesh m;
  m.d = j.at("d").get<int>();
  m.level = j.at("level").get<int>();
  m.side = j.at("side").get<std::int64_t>();
  const auto& o = j.at("origin");
  for (std::size_t a = 0; a < o.size() && a < kMaxDim; ++a) m.origin[a] = o[a].get<std::int64_t>();
  return m;
}

}  // namespace

std::string shift_spec_to_json(const ShiftSpec& s) {
  json j;
  j["i"] = s.i;
  j["j"] = s.j;
  j["d"] = s.d;
  j["root"] = cube_json(s.root, s.d);
  j["levels"] = {s.kmin, s.kmax};
  j["space"] = {{"n", s.n}};
  if (s.tables.empty()) {
    j["kernel"] = {{"seed", s.kernel_seed}, {"r_cap", s.r_cap}, {"sign", s.sign_kernel}};
  } else {
    json tabs = json::array();
    for (const auto& [K, t] : s.tables) {
      json e = cube_json(K, s.d);
      e["res"] = t.res;
      e["a"] = t.a;
      tabs.push_back(e);
    }
    j["kernel"] = {{"r_cap", s.r_cap}, {"tables", tabs}};
  }
  return j.dump(2);
}

ShiftSpec shift_spec_from_json(const std::string& text) {
  const json j = json::parse(text);
  ShiftSpec s;
  s.i = j.at("i").get<int>();
  s.j = j.at("j").get<int>();
  s.d = j.value("d", 1);
  if (j.contains("root")) s.root = cube_from(j.at("root"));
  if (j.contains("levels")) {
    s.kmin = j.at("levels")[0].get<int>();
    s.kmax = j.at("levels")[1].get<int>();
  }
  if (j.contains("space")) s.n = j.at("space").value("n", 1);
  const auto& k = j.at("kernel");
  s.r_cap = k.value("r_cap", 1.0);
  if (k.contains("tables")) {
    for (const auto& e : k.at("tables")) {
      KernelTable t;
      t.d = s.d;
      t.n = s.n;
      t.res = e.at("res").get<int>();
      t.a = e.at("a").get<std::vector<double>>();
      s.tables[cube_from(e)] = t;
    }
  } else {
    s.kernel_seed = k.value("seed", std::uint64_t{0});
    s.sign_kernel = k.value("sign", false);
  }
  return s;
}

std::string paraproduct_spec_to_json(const ParaproductSpec& s) {
  json j;
  j["levels"] = {s.kmin, s.kmax};
  j["space"] = {{"n", s.n}};
  j["b"] = {{"mesh", mesh_json(s.b.mesh)}, {"components", s.b.n}, {"values", s.b.v}};
  return j.dump(2);
}

ParaproductSpec paraproduct_spec_from_json(const std::string& text) {
  const json j = json::parse(text);
  ParaproductSpec s;
  s.kmin = j.at("levels")[0].get<int>();
  s.kmax = j.at("levels")[1].get<int>();
  s.n = j.at("space").value("n", 1);
  const auto& b = j.at("b");
  s.b = GridFunction(mesh_from(b.at("mesh")), b.at("components").get<int>());
  s.b.v = b.at("values").get<std::vector<double>>();
  return s;
}

}  // namespace dyadiclab
