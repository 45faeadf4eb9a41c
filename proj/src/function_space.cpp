#include "dyadiclab/function_space.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "dyadiclab/errors.hpp"

namespace dyadiclab {

namespace {

std::int64_t pow2(int e) {
  if (e < 0 || e > 62) throw DepthError("dyadic exponent out of range");
  return std::int64_t{1} << e;
}

int log2_exact(std::int64_t v) {
  int e = 0;
  while ((std::int64_t{1} << e) < v) ++e;
  if ((std::int64_t{1} << e) != v) throw PreconditionError("mesh side is not a power of two");
  return e;
}

double lq_norm(const double* v, int n, double q) {
  if (q == kInf) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) m = std::max(m, std::abs(v[i]));
    return m;
  }
  if (n == 1) return std::abs(v[0]);
  if (q == 2.0) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += v[i] * v[i];
    return std::sqrt(s);
  }
  if (q == 1.0) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::abs(v[i]);
    return s;
  }
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::pow(std::abs(v[i]), q);
  return std::pow(s, 1.0 / q);
}

}  // namespace

double NormedSpace::norm(const double* v) const {
  if (custom) return custom(v);
  return lq_norm(v, n, q);
}

double NormedSpace::dual_norm(const double* v) const {
  if (custom) throw PreconditionError("dual norm of a user norm table is not available");
  return lq_norm(v, n, conjugate(q));
}

std::string NormedSpace::describe() const {
  if (custom) return "custom^" + std::to_string(n);
  std::ostringstream os;
  if (n == 1) return "R";
  os << "l" << (q == kInf ? std::string("inf") : std::to_string(q)) << "^" << n;
  return os.str();
}

Mesh Mesh::over_cube(int d, const DyadicCube& root, int depth) {
  if (depth < root.level) throw DepthError("mesh depth above the root level");
  Mesh m;
  m.d = d;
  m.level = depth;
  m.side = pow2(depth - root.level);
  for (int a = 0; a < d; ++a) m.origin[a] = root.corner[a] * m.side;
  return m;
}

std::int64_t Mesh::cells() const {
  std::int64_t c = 1;
  for (int a = 0; a < d; ++a) c *= side;
  return c;
}

double Mesh::cell_volume() const { return std::ldexp(1.0, -level * d); }

Box Mesh::bounds() const {
  Box b;
  b.d = d;
  b.lo = origin;
  b.len = side;
  return b;
}

Coord Mesh::cell_coord(std::int64_t idx) const {
  Coord c{};
  for (int a = 0; a < d; ++a) {
    c[a] = origin[a] + idx % side;
    idx /= side;
  }
  return c;
}

std::int64_t Mesh::index_of(const Coord& abs_cell) const {
  std::int64_t idx = 0;
  for (int a = d - 1; a >= 0; --a) idx = idx * side + (abs_cell[a] - origin[a]);
  return idx;
}

bool Mesh::operator==(const Mesh& o) const {
  return d == o.d && level == o.level && side == o.side && origin == o.origin;
}

Box standard_box(int d, const DyadicCube& c, int unit_level) {
  Box b;
  b.d = d;
  b.len = pow2(unit_level - c.level);
  for (int a = 0; a < d; ++a) b.lo[a] = c.corner[a] * b.len;
  return b;
}

GridFunction& GridFunction::operator+=(const GridFunction& o) {
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
  return *this;
}
GridFunction& GridFunction::operator-=(const GridFunction& o) {
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= o.v[i];
  return *this;
}
GridFunction& GridFunction::operator*=(double s) {
  for (double& x : v) x *= s;
  return *this;
}
GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(double s, GridFunction a) { return a *= s; }

Box GridFunction::support() const {
  Box b;
  b.d = mesh.d;
  b.len = 0;
  Coord lo{}, hi{};
  bool any = false;
  for (std::int64_t c = 0; c < mesh.cells(); ++c) {
    bool nz = false;
    for (int k = 0; k < n; ++k) nz = nz || at(c)[k] != 0.0;
    if (!nz) continue;
    const Coord x = mesh.cell_coord(c);
    for (int a = 0; a < mesh.d; ++a) {
      lo[a] = any ? std::min(lo[a], x[a]) : x[a];
      hi[a] = any ? std::max(hi[a], x[a]) : x[a];
    }
    any = true;
  }
  if (!any) return b;
  b.lo = lo;
  for (int a = 0; a < mesh.d; ++a) b.len = std::max(b.len, hi[a] - lo[a] + 1);
  return b;
}

GridFunction GridFunction::random(const Mesh& m, int comps, Rng& rng) {
  GridFunction f(m, comps);
  for (double& x : f.v) x = rng.uniform(-1.0, 1.0);
  return f;
}

GridFunction GridFunction::indicator(const Mesh& m, const Box& b, double value) {
  GridFunction f(m, 1);
  for_each_cell(m, b, [&](std::int64_t c) { f.v[static_cast<std::size_t>(c)] = value; });
  return f;
}

double haar_eval(int d, const DyadicCube& I, unsigned eta, const std::array<double, kMaxDim>& x) {
  const double side = std::ldexp(1.0, -I.level);
  double val = std::pow(side, -0.5 * d);
  for (int a = 0; a < d; ++a) {
    const double lo = static_cast<double>(I.corner[a]) * side;
    if (x[a] < lo || x[a] >= lo + side) return 0.0;
    if ((eta >> a) & 1u) val *= (x[a] < lo + 0.5 * side) ? 1.0 : -1.0;
  }
  return val;
}

GridFunction haar_function(const Mesh& m, const Box& I, unsigned eta) {
  GridFunction h(m, 1);
  const double vol = std::pow(static_cast<double>(I.len) * std::ldexp(1.0, -m.level), m.d);
  const double amp = 1.0 / std::sqrt(vol);
  const std::int64_t half = I.len / 2;
  for_each_cell(m, I, [&](std::int64_t c) {
    const Coord x = m.cell_coord(c);
    unsigned e = 0;
    for (int a = 0; a < m.d; ++a)
      if (x[a] - I.lo[a] >= half) e |= 1u << a;
    h.v[static_cast<std::size_t>(c)] = amp * haar_sign(eta, e);
  });
  return h;
}

std::vector<double> integral(const GridFunction& f, const Box& b) {
  std::vector<double> s(static_cast<std::size_t>(f.n), 0.0);
  for_each_cell(f.mesh, b, [&](std::int64_t c) {
    const double* x = f.at(c);
    for (int k = 0; k < f.n; ++k) s[static_cast<std::size_t>(k)] += x[k];
  });
  const double vol = f.mesh.cell_volume();
  for (double& x : s) x *= vol;
  return s;
}

std::vector<double> average(const GridFunction& f, const Box& b) {
  std::vector<double> s(static_cast<std::size_t>(f.n), 0.0);
  for_each_cell(f.mesh, b, [&](std::int64_t c) {
    const double* x = f.at(c);
    for (int k = 0; k < f.n; ++k) s[static_cast<std::size_t>(k)] += x[k];
  });
  double cnt = 1.0;
  for (int a = 0; a < f.mesh.d; ++a) cnt *= static_cast<double>(b.len);
  for (double& x : s) x /= cnt;
  return s;
}

std::vector<double> average(const GridFunction& f, const DyadicCube& I) {
  return average(f, standard_box(f.mesh.d, I, f.mesh.level));
}

std::int64_t HaarCoefficients::cubes_per_axis(int level) const { return mesh.side >> (mesh.level - level); }

std::int64_t HaarCoefficients::cube_index(const DyadicCube& c) const {
  const std::int64_t cpa = cubes_per_axis(c.level);
  const std::int64_t scale = std::int64_t{1} << (mesh.level - c.level);
  std::int64_t idx = 0;
  for (int a = mesh.d - 1; a >= 0; --a) idx = idx * cpa + (c.corner[a] - mesh.origin[a] / scale);
  return idx;
}

DyadicCube HaarCoefficients::cube_at(int level, std::int64_t idx) const {
  const std::int64_t cpa = cubes_per_axis(level);
  const std::int64_t scale = std::int64_t{1} << (mesh.level - level);
  DyadicCube c;
  c.level = level;
  for (int a = 0; a < mesh.d; ++a) {
    c.corner[a] = mesh.origin[a] / scale + idx % cpa;
    idx /= cpa;
  }
  return c;
}

const double* HaarCoefficients::coeff(int level, std::int64_t cube, unsigned eta) const {
  const int ne = (1 << mesh.d) - 1;
  return data[static_cast<std::size_t>(level - kmin)].data() + (cube * ne + (eta - 1)) * n;
}

double* HaarCoefficients::coeff(int level, std::int64_t cube, unsigned eta) {
  const int ne = (1 << mesh.d) - 1;
  return data[static_cast<std::size_t>(level - kmin)].data() + (cube * ne + (eta - 1)) * n;
}

namespace {

// child of (multi-index) parent cube p at level k+1, number e
std::int64_t child_index(std::int64_t p, unsigned e, int d, std::int64_t cpa_parent) {
  const std::int64_t cpa = 2 * cpa_parent;
  std::int64_t idx = 0, mul = 1, rest = p;
  for (int a = 0; a < d; ++a) {
    const std::int64_t pa = rest % cpa_parent;
    rest /= cpa_parent;
    idx += (2 * pa + ((e >> a) & 1u)) * mul;
    mul *= cpa;
  }
  return idx;
}

std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

HaarCoefficients analyze(const GridFunction& f, int kmin) {
  const Mesh& m = f.mesh;
  const int N = m.level;
  if (kmin > N) throw DepthError("coarsest level below the mesh");
  const std::int64_t step = pow2(N - kmin);
  for (int a = 0; a < m.d; ++a)
    if (m.origin[a] % step != 0 || m.side % step != 0)
      throw PreconditionError("mesh is not a union of level-kmin cubes");
  HaarCoefficients hc;
  hc.mesh = m;
  hc.n = f.n;
  hc.kmin = kmin;
  hc.kmax = N - 1;
  const int d = m.d;
  const unsigned nchild = 1u << d;
  const int ne = static_cast<int>(nchild) - 1;
  hc.data.resize(static_cast<std::size_t>(std::max(0, N - kmin)));
  std::vector<double> fine = f.v;
  for (int k = N - 1; k >= kmin; --k) {
    const std::int64_t cpa = m.side >> (N - k);
    const std::int64_t ncubes = ipow(cpa, d);
    std::vector<double> coarse(static_cast<std::size_t>(ncubes * f.n), 0.0);
    auto& out = hc.data[static_cast<std::size_t>(k - kmin)];
    out.assign(static_cast<std::size_t>(ncubes * ne * f.n), 0.0);
    // |I|^{1/2} 2^{-d}
    const double w = std::ldexp(1.0, -k * d) > 0 ? std::sqrt(std::ldexp(1.0, -k * d)) / nchild : 0.0;
    for (std::int64_t p = 0; p < ncubes; ++p) {
      for (unsigned e = 0; e < nchild; ++e) {
        const std::int64_t ch = child_index(p, e, d, cpa);
        const double* cv = fine.data() + ch * f.n;
        for (int c = 0; c < f.n; ++c) coarse[static_cast<std::size_t>(p * f.n + c)] += cv[c] / nchild;
        for (unsigned eta = 1; eta < nchild; ++eta) {
          double* o = out.data() + (p * ne + (eta - 1)) * f.n;
          const int s = haar_sign(eta, e);
          for (int c = 0; c < f.n; ++c) o[c] += s * w * cv[c];
        }
      }
    }
    fine.swap(coarse);
  }
  hc.coarse = fine;
  return hc;
}

GridFunction synthesize(const HaarCoefficients& hc) {
  const Mesh& m = hc.mesh;
  const int N = m.level;
  const int d = m.d;
  const unsigned nchild = 1u << d;
  const int ne = static_cast<int>(nchild) - 1;
  std::vector<double> cur = hc.coarse;
  for (int k = hc.kmin; k < N; ++k) {
    const std::int64_t cpa = m.side >> (N - k);
    const std::int64_t ncubes = ipow(cpa, d);
    std::vector<double> next(static_cast<std::size_t>(ncubes * nchild * hc.n), 0.0);
    const auto& cf = hc.data[static_cast<std::size_t>(k - hc.kmin)];
    const double amp = 1.0 / std::sqrt(std::ldexp(1.0, -k * d));
    for (std::int64_t p = 0; p < ncubes; ++p) {
      for (unsigned e = 0; e < nchild; ++e) {
        const std::int64_t ch = child_index(p, e, d, cpa);
        double* o = next.data() + ch * hc.n;
        for (int c = 0; c < hc.n; ++c) o[c] = cur[static_cast<std::size_t>(p * hc.n + c)];
        for (unsigned eta = 1; eta < nchild; ++eta) {
          const double* x = cf.data() + (p * ne + (eta - 1)) * hc.n;
          const int s = haar_sign(eta, e);
          for (int c = 0; c < hc.n; ++c) o[c] += s * amp * x[c];
        }
      }
    }
    cur.swap(next);
  }
  GridFunction f(m, hc.n);
  f.v = cur;
  return f;
}

void add_project_D(const GridFunction& f, const Box& I, GridFunction& out) {
  if (I.len < 2) throw DepthError("Haar projection below the mesh resolution");
  const auto avg = average(f, I);
  const std::int64_t half = I.len / 2;
  for (unsigned e = 0; e < (1u << f.mesh.d); ++e) {
    Box ch;
    ch.d = I.d;
    ch.len = half;
    for (int a = 0; a < f.mesh.d; ++a) ch.lo[a] = I.lo[a] + (((e >> a) & 1u) ? half : 0);
    const auto ca = average(f, ch);
    for_each_cell(f.mesh, ch, [&](std::int64_t c) {
      double* o = out.at(c);
      for (int k = 0; k < f.n; ++k) o[k] += ca[static_cast<std::size_t>(k)] - avg[static_cast<std::size_t>(k)];
    });
  }
}

GridFunction project_D(const GridFunction& f, const Box& I) {
  GridFunction out(f.mesh, f.n);
  add_project_D(f, I, out);
  return out;
}

GridFunction project_D(const GridFunction& f, const DyadicCube& I) {
  return project_D(f, standard_box(f.mesh.d, I, f.mesh.level));
}

GridFunction project_Di(const GridFunction& f, const Box& K, int i) {
  if (i < 0 || K.len < pow2(i + 1)) throw DepthError("shifted projection too deep for the mesh");
  GridFunction out(f.mesh, f.n);
  const std::int64_t sub = K.len >> i;
  const std::int64_t per = std::int64_t{1} << i;
  const std::int64_t count = ipow(per, f.mesh.d);
  for (std::int64_t t = 0; t < count; ++t) {
    Box I;
    I.d = K.d;
    I.len = sub;
    std::int64_t r = t;
    for (int a = 0; a < f.mesh.d; ++a) {
      I.lo[a] = K.lo[a] + (r % per) * sub;
      r /= per;
    }
    add_project_D(f, I, out);
  }
  return out;
}

GridFunction project_Di(const GridFunction& f, const DyadicCube& K, int i) {
  return project_Di(f, standard_box(f.mesh.d, K, f.mesh.level), i);
}

GridFunction cond_expect(const GridFunction& f, int level) {
  const Mesh& m = f.mesh;
  if (level > m.level) throw DepthError("conditioning level below the mesh");
  const std::int64_t len = pow2(m.level - level);
  if (m.side % len != 0) throw PreconditionError("mesh is not a union of conditioning cubes");
  GridFunction out(m, f.n);
  const std::int64_t cpa = m.side / len;
  const std::int64_t ncubes = ipow(cpa, m.d);
  for (std::int64_t t = 0; t < ncubes; ++t) {
    Box Q;
    Q.d = m.d;
    Q.len = len;
    std::int64_t r = t;
    for (int a = 0; a < m.d; ++a) {
      Q.lo[a] = m.origin[a] + (r % cpa) * len;
      r /= cpa;
    }
    const auto avg = average(f, Q);
    for_each_cell(m, Q, [&](std::int64_t c) {
      for (int k = 0; k < f.n; ++k) out.at(c)[k] = avg[static_cast<std::size_t>(k)];
    });
  }
  return out;
}

double lp_norm(const GridFunction& f, double p, const NormedSpace& E) {
  const std::int64_t nc = f.mesh.cells();
  if (p == kInf) {
    double m = 0.0;
    for (std::int64_t c = 0; c < nc; ++c) m = std::max(m, E.norm(f.at(c)));
    return m;
  }
  double s = 0.0;
  for (std::int64_t c = 0; c < nc; ++c) s += std::pow(E.norm(f.at(c)), p);
  return std::pow(s * f.mesh.cell_volume(), 1.0 / p);
}

double lp_norm(const GridFunction& f, double p) { return lp_norm(f, p, NormedSpace::lq(f.n, 2.0)); }

double pair(const GridFunction& g, const GridFunction& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.v.size(); ++i) s += g.v[i] * f.v[i];
  return s * f.mesh.cell_volume();
}

double linf_diff(const GridFunction& a, const GridFunction& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

double bmo_norm(const GridFunction& b, double p, const NormedSpace& T, int kmin, int top_level) {
  const Mesh& m = b.mesh;
  const int N = m.level;
  double best = 0.0;
  std::vector<double> tmp(static_cast<std::size_t>(b.n));
  auto osc = [&](const Box& Q) {
    const auto mean = average(b, Q);
    double s = 0.0;
    for_each_cell(m, Q, [&](std::int64_t c) {
      const double* x = b.at(c);
      for (int k = 0; k < b.n; ++k) tmp[static_cast<std::size_t>(k)] = x[k] - mean[static_cast<std::size_t>(k)];
      s += std::pow(T.norm(tmp.data()), p);
    });
    double cnt = 1.0;
    for (int a = 0; a < m.d; ++a) cnt *= static_cast<double>(Q.len);
    return std::pow(s / cnt, 1.0 / p);
  };
  for (int k = kmin; k < N; ++k) {
    const std::int64_t len = pow2(N - k);
    const std::int64_t cpa = m.side / len;
    const std::int64_t ncubes = ipow(cpa, m.d);
    for (std::int64_t t = 0; t < ncubes; ++t) {
      Box Q;
      Q.d = m.d;
      Q.len = len;
      std::int64_t r = t;
      for (int a = 0; a < m.d; ++a) {
        Q.lo[a] = m.origin[a] + (r % cpa) * len;
        r /= cpa;
      }
      best = std::max(best, osc(Q));
    }
  }
  const int root_level = N - log2_exact(m.side);
  if (top_level < root_level) {
    const auto tot = integral(b, m.bounds());
    const double mesh_vol = std::pow(std::ldexp(1.0, -root_level), m.d);
    for (int k = root_level - 1; k >= top_level; --k) {
      const double vol = std::pow(std::ldexp(1.0, -k), m.d);
      std::vector<double> mean(static_cast<std::size_t>(b.n));
      for (int c = 0; c < b.n; ++c) mean[static_cast<std::size_t>(c)] = tot[static_cast<std::size_t>(c)] / vol;
      double s = 0.0;
      for (std::int64_t c = 0; c < m.cells(); ++c) {
        const double* x = b.at(c);
        for (int q = 0; q < b.n; ++q) tmp[static_cast<std::size_t>(q)] = x[q] - mean[static_cast<std::size_t>(q)];
        s += std::pow(T.norm(tmp.data()), p) * m.cell_volume();
      }
      s += (vol - mesh_vol) * std::pow(T.norm(mean.data()), p);
      best = std::max(best, std::pow(s / vol, 1.0 / p));
    }
  }
  return best;
}

double bmo_norm(const GridFunction& b, double p, const NormedSpace& T, int kmin) {
  return bmo_norm(b, p, T, kmin, kmin);
}

void write_csv(std::ostream& os, const GridFunction& f) {
  const Mesh& m = f.mesh;
  os << "# dyadiclab grid d=" << m.d << " level=" << m.level << " side=" << m.side << " n=" << f.n << " origin=";
  for (int a = 0; a < m.d; ++a) os << (a ? ":" : "") << m.origin[a];
  os << "\n";
  for (int a = 0; a < m.d; ++a) os << (a ? "," : "") << "i" << a;
  for (int k = 0; k < f.n; ++k) os << ",v" << k;
  os << "\n";
  char buf[32];
  for (std::int64_t c = 0; c < m.cells(); ++c) {
    const Coord x = m.cell_coord(c);
    for (int a = 0; a < m.d; ++a) os << (a ? "," : "") << x[a];
    for (int k = 0; k < f.n; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", f.at(c)[k]);
      os << "," << buf;
    }
    os << "\n";
  }
}

GridFunction read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# dyadiclab grid", 0) != 0)
    throw PreconditionError("missing grid header");
  Mesh m;
  int n = 1;
  std::istringstream hs(line.substr(17));
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "d") m.d = std::stoi(val);
    else if (key == "level") m.level = std::stoi(val);
    else if (key == "side") m.side = std::stoll(val);
    else if (key == "n") n = std::stoi(val);
    else if (key == "origin") {
      std::istringstream os(val);
      std::string part;
      int a = 0;
      while (std::getline(os, part, ':') && a < kMaxDim) m.origin[a++] = std::stoll(part);
    }
  }
  GridFunction f(m, n);
  std::getline(is, line);  // column names
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    Coord x{};
    for (int a = 0; a < m.d; ++a) {
      std::getline(ls, cell, ',');
      x[a] = std::stoll(cell);
    }
    double* o = f.at(m.index_of(x));
    for (int k = 0; k < n; ++k) {
      std::getline(ls, cell, ',');
      o[k] = std::stod(cell);
    }
  }
  return f;
}

namespace {

template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw PreconditionError("truncated binary grid");
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

void write_binary(std::ostream& os, const GridFunction& f) {
  os.write("DLGF", 4);
  put_le<std::int64_t>(os, f.mesh.d);
  put_le<std::int64_t>(os, f.mesh.level);
  for (int a = 0; a < kMaxDim; ++a) put_le<std::int64_t>(os, f.mesh.origin[a]);
  put_le<std::int64_t>(os, f.mesh.side);
  put_le<std::int64_t>(os, f.n);
  for (double x : f.v) put_le<double>(os, x);
}

GridFunction read_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "DLGF", 4) != 0) throw PreconditionError("not a binary grid");
  Mesh m;
  m.d = static_cast<int>(get_le<std::int64_t>(is));
  m.level = static_cast<int>(get_le<std::int64_t>(is));
  for (int a = 0; a < kMaxDim; ++a) m.origin[a] = get_le<std::int64_t>(is);
  m.side = get_le<std::int64_t>(is);
  const int n = static_cast<int>(get_le<std::int64_t>(is));
  GridFunction f(m, n);
  for (double& x : f.v) x = get_le<double>(is);
  return f;
}

}  // namespace dyadiclab
