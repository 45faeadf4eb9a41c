#include "dyadiclab/representation.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <ostream>

#include "dyadiclab/errors.hpp"
#include "dyadiclab/rademacher.hpp"
#include "json.hpp"

namespace dyadiclab {

namespace {

double unit_len(int level) { return std::ldexp(1.0, -level); }

double volume(const Box& b, int level) { return std::pow(static_cast<double>(b.len) * unit_len(level), b.d); }

Box cell_box(const Mesh& m, std::int64_t c) {
  Box b;
  b.d = m.d;
  b.lo = m.cell_coord(c);
  b.len = 1;
  return b;
}

std::int64_t overlap_len(const Box& a, const Box& b) {
  const std::int64_t lo = std::max(a.lo[0], b.lo[0]);
  const std::int64_t hi = std::min(a.lo[0] + a.len, b.lo[0] + b.len);
  return hi > lo ? hi - lo : 0;
}

std::vector<double> kernel_matrix(const CzKernel& k) {
  std::vector<double> M(static_cast<std::size_t>(k.n * k.n));
  for (int r = 0; r < k.n; ++r)
    for (int c = 0; c < k.n; ++c) M[static_cast<std::size_t>(r * k.n + c)] = k.matrix_entry(r, c);
  return M;
}

// ip[delta + side - 1] = interval_pair of two cells delta apart
std::vector<double> cell_offsets(const CzKernel& k, const Mesh& m) {
  const double h = unit_len(m.level);
  std::vector<double> q(static_cast<std::size_t>(2 * m.side - 1));
  for (std::int64_t dlt = -(m.side - 1); dlt < m.side; ++dlt)
    q[static_cast<std::size_t>(dlt + m.side - 1)] = k.interval_pair(dlt * h, (dlt + 1) * h, 0.0, h);
  return q;
}

void require_kernel_dim(const Mesh& m) {
  if (m.d != 1) throw PreconditionError("kernel operators are implemented on the line");
}

Box ambient(const DiscreteOperator& T) { return T.mesh.bounds(); }

// child of `outer` containing `inner`, as the e index of haar_sign
unsigned child_of(const Box& outer, const Box& inner) {
  unsigned e = 0;
  for (int a = 0; a < outer.d; ++a)
    if (inner.lo[a] - outer.lo[a] >= outer.len / 2) e |= 1u << a;
  return e;
}

bool strictly_inside(const Box& inner, const Box& outer) { return outer.contains(inner) && outer.len > inner.len; }

void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
  for (std::size_t t = 0; t < y.size(); ++t) y[t] += a * x[t];
}

double step_integral(const GridFunction& f, const Step& s, int comp) {
  double t = 0.0;
  for (const auto& p : s) {
    double q = 0.0;
    for_each_cell(f.mesh, p.box, [&](std::int64_t c) { q += f.at(c)[comp]; });
    t += p.weight * q;
  }
  return t * f.mesh.cell_volume();
}

// g^T E f with E an n x n block
double sandwich(const std::vector<double>& g, const std::vector<double>& E, const std::vector<double>& f) {
  const std::size_t n = g.size();
  double s = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) s += g[r] * E[r * n + c] * f[c];
  return s;
}

double block_norm(const std::vector<double>& E, int n) {
  if (n == 1) return std::abs(E[0]);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> B(E.data(), n, n);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(B).singularValues()(0);
}

std::vector<DyadicCube> descendants(const DyadicSystem& sys, const DyadicCube& K, int g) {
  std::vector<DyadicCube> cur{K};
  for (int t = 0; t < g; ++t) {
    std::vector<DyadicCube> nxt;
    for (const auto& c : cur)
      for (const auto& ch : sys.children(c)) nxt.push_back(ch);
    cur.swap(nxt);
  }
  return cur;
}

struct PairRef {
  DyadicCube I, J;
  Box Ib, Jb;
};

// pairs with I v J = K at depths (i, j) below K, smaller cube good
std::vector<PairRef> shift_pairs(const DyadicSystem& sys, const DyadicCube& K, int i, int j,
                                 const GoodnessParams& gp, bool require_good) {
  std::vector<PairRef> out;
  const auto Is = descendants(sys, K, i);
  const auto Js = descendants(sys, K, j);
  std::vector<char> goodI(Is.size(), 1), goodJ(Js.size(), 1);
  if (require_good) {
    if (i >= j)
      for (std::size_t t = 0; t < Is.size(); ++t) goodI[t] = is_good(sys, Is[t], gp);
    else
      for (std::size_t t = 0; t < Js.size(); ++t) goodJ[t] = is_good(sys, Js[t], gp);
  }
  const Box Kb = sys.box(K);
  for (std::size_t a = 0; a < Is.size(); ++a) {
    if (!goodI[a]) continue;
    const Box Ib = sys.box(Is[a]);
    for (std::size_t b = 0; b < Js.size(); ++b) {
      if (!goodJ[b]) continue;
      const Box Jb = sys.box(Js[b]);
      if (i > 0 && j > 0 && child_of(Kb, Ib) == child_of(Kb, Jb)) continue;
      out.push_back({Is[a], Js[b], Ib, Jb});
    }
  }
  return out;
}

}  // namespace

// ---- kernels ----

double CzKernel::interval_pair(double a, double b, double c, double d) const {
  if (!psi) return 0.0;
  return psi(b - c) - psi(a - c) - psi(b - d) + psi(a - d);
}

double CzKernel::matrix_entry(int r, int c) const {
  if (matrix.empty()) return r == c ? 1.0 : 0.0;
  return matrix[static_cast<std::size_t>(r * n + c)];
}

CzKernel CzKernel::zero() {
  CzKernel k;
  k.profile = [](double) { return 0.0; };
  k.psi = [](double) { return 0.0; };
  return k;
}

CzKernel CzKernel::hilbert(std::optional<double> cutoff) {
  CzKernel k;
  k.name = cutoff ? "hilbert-cutoff" : "hilbert";
  k.alpha = 1.0;
  k.c0 = 1.0;
  // |1/t - 1/(t+h)| t^2 / |h| = |t| / |t+h| <= 2 for |h| <= |t|/2
  k.c_alpha = 2.0;
  k.cutoff = cutoff;
  if (!cutoff) {
    k.profile = [](double t) { return t == 0.0 ? 0.0 : 1.0 / t; };
    k.psi = [](double t) { return t == 0.0 ? 0.0 : t * std::log(std::abs(t)) - t; };
  } else {
    const double R = *cutoff;
    if (!(R > 0)) throw PreconditionError("cutoff must be positive");
    // the jump at |t| = R breaks the Hoelder bound
    k.c_alpha = kInf;
    k.profile = [R](double t) { return (t == 0.0 || std::abs(t) >= R) ? 0.0 : 1.0 / t; };
    k.psi = [R](double t) {
      if (t == 0.0) return 0.0;
      if (t >= R) return t * std::log(R) - R;
      if (t <= -R) return t * std::log(R) + R;
      return t * std::log(std::abs(t)) - t;
    };
  }
  return k;
}

CzKernel CzKernel::smooth_odd(double R) {
  if (!(R > 0)) throw PreconditionError("radius must be positive");
  CzKernel k;
  k.name = "smooth-odd";
  k.alpha = 1.0;
  k.cutoff = R;
  k.c0 = 4.0 * R * R / 27.0;
  // |K'| <= 1 and both points stay within 2R of the pole
  k.c_alpha = 4.0 * R * R;
  k.profile = [R](double t) {
    if (std::abs(t) >= R) return 0.0;
    const double u = 1.0 - t * t / (R * R);
    return t * u * u;
  };
  k.psi = [R](double t) {
    auto inner = [R](double s) {
      const double s2 = s * s, R2 = R * R;
      return s * s2 / 6.0 - s * s2 * s2 / (10.0 * R2) + s * s2 * s2 * s2 / (42.0 * R2 * R2);
    };
    if (t > R) return inner(R) + (t - R) * R * R / 6.0;
    if (t < -R) return inner(-R) + (t + R) * R * R / 6.0;
    return inner(t);
  };
  return k;
}

CzKernel CzKernel::with_matrix(int dim, std::vector<double> m) const {
  if (static_cast<int>(m.size()) != dim * dim) throw PreconditionError("kernel matrix must be n x n");
  CzKernel k = *this;
  k.n = dim;
  k.matrix = std::move(m);
  return k;
}

std::string CzKernel::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["n"] = n;
  j["alpha"] = alpha;
  j["c0"] = c0;
  j["c_alpha"] = std::isfinite(c_alpha) ? nlohmann::json(c_alpha) : nlohmann::json("inf");
  j["cutoff"] = cutoff ? nlohmann::json(*cutoff) : nlohmann::json(nullptr);
  j["antisymmetric"] = antisymmetric;
  j["matrix"] = matrix;
  return j.dump();
}

CzConstants measure_cz_constants(const CzKernel& k, int samples, std::uint64_t seed) {
  CzConstants out;
  if (!k.profile) return out;
  const double a = k.alpha;
  for (int s = 0; s < samples; ++s) {
    Rng rng(seed, "cz-constants", static_cast<std::uint64_t>(s));
    const double t = std::ldexp(rng.uniform(1.0, 2.0), static_cast<int>(rng.integer(-12, 3))) * rng.sign();
    out.c0 = std::max(out.c0, std::abs(k.profile(t)) * std::abs(t));
    // |h| <= |t|/2, both signs cover the x and the y variation
    const double h = rng.uniform(-0.5, 0.5) * std::abs(t);
    if (h == 0.0) continue;
    const double q = std::abs(k.profile(t) - k.profile(t + h)) * std::pow(std::abs(t), 1.0 + a) / std::pow(std::abs(h), a);
    out.c_alpha = std::max(out.c_alpha, q);
  }
  return out;
}

// ---- operators ----

Step haar_step(const Box& I, unsigned eta, int unit_level) {
  const double amp = 1.0 / std::sqrt(volume(I, unit_level));
  Step s;
  if (eta == 0) {
    s.push_back({I, amp});
    return s;
  }
  if (I.len < 2) throw DepthError("Haar function finer than the mesh");
  for (unsigned e = 0; e < (1u << I.d); ++e) {
    Box c = I;
    c.len = I.len / 2;
    for (int a = 0; a < I.d; ++a)
      if ((e >> a) & 1u) c.lo[a] += c.len;
    s.push_back({c, haar_sign(eta, e) * amp});
  }
  return s;
}

DiscreteOperator DiscreteOperator::from_kernel(const CzKernel& k, const Mesh& m, bool assemble, double diag) {
  require_kernel_dim(m);
  DiscreteOperator T;
  T.mesh = m;
  T.n = k.n;
  T.kernel = k;
  T.diag = diag;
  if (!assemble) return T;
  const std::int64_t N = m.cells();
  const int nn = k.n * k.n;
  const auto q = cell_offsets(k, m);
  const auto M = kernel_matrix(k);
  const double h = unit_len(m.level);
  T.w.assign(static_cast<std::size_t>(N * N * nn), 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t x = 0; x < N; ++x)
    for (std::int64_t y = 0; y < N; ++y) {
      // diagonal cells: the principal value vanishes, the free block is diag
      const double v = x == y ? diag * h : q[static_cast<std::size_t>(x - y + m.side - 1)];
      double* b = T.w.data() + (x * N + y) * nn;
      for (int t = 0; t < nn; ++t) b[t] = v * M[static_cast<std::size_t>(t)];
    }
  return T;
}

DiscreteOperator DiscreteOperator::from_matrix(const Mesh& m, int n, std::vector<double> w) {
  if (static_cast<std::int64_t>(w.size()) != m.cells() * m.cells() * n * n)
    throw PreconditionError("operator matrix has the wrong size");
  DiscreteOperator T;
  T.mesh = m;
  T.n = n;
  T.w = std::move(w);
  return T;
}

DiscreteOperator DiscreteOperator::identity(const Mesh& m, int n) {
  const std::int64_t N = m.cells();
  std::vector<double> w(static_cast<std::size_t>(N * N * n * n), 0.0);
  const double v = m.cell_volume();
  for (std::int64_t x = 0; x < N; ++x)
    for (int r = 0; r < n; ++r) w[static_cast<std::size_t>(((x * N + x) * n + r) * n + r)] = v;
  return from_matrix(m, n, std::move(w));
}

DiscreteOperator DiscreteOperator::adjoint() const {
  DiscreteOperator A = *this;
  if (kernel) {
    // k*(x, y) = k(y, x)^T = -K(x - y) M^T for odd profiles
    std::vector<double> Mt(static_cast<std::size_t>(n * n));
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) Mt[static_cast<std::size_t>(r * n + c)] = -kernel->matrix_entry(c, r);
    A.kernel->matrix = Mt;
    A.diag = -diag;
  }
  if (dense()) {
    const std::int64_t N = mesh.cells();
    for (std::int64_t x = 0; x < N; ++x)
      for (std::int64_t y = 0; y < N; ++y) {
        const double* src = block(y, x);
        double* dst = A.w.data() + (x * N + y) * n * n;
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c) dst[r * n + c] = src[c * n + r];
      }
  }
  return A;
}

GridFunction DiscreteOperator::apply(const GridFunction& f) const {
  if (!(f.mesh == mesh) || f.n != n) throw PreconditionError("operator and function do not match");
  const std::int64_t N = mesh.cells();
  const double inv = 1.0 / mesh.cell_volume();
  GridFunction out(mesh, n);
  std::vector<double> q, M;
  if (!dense()) {
    q = cell_offsets(*kernel, mesh);
    M = kernel_matrix(*kernel);
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t x = 0; x < N; ++x) {
    double* o = out.at(x);
    for (std::int64_t y = 0; y < N; ++y) {
      const double* fy = f.at(y);
      if (dense()) {
        const double* b = block(x, y);
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c) o[r] += b[r * n + c] * fy[c];
      } else {
        const double v = x == y ? diag * mesh.cell_volume() : q[static_cast<std::size_t>(x - y + mesh.side - 1)];
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c) o[r] += v * M[static_cast<std::size_t>(r * n + c)] * fy[c];
      }
    }
    for (int r = 0; r < n; ++r) o[r] *= inv;
  }
  return out;
}

std::vector<double> DiscreteOperator::pair(const Step& g, const Step& f) const {
  std::vector<double> out(static_cast<std::size_t>(n * n), 0.0);
  if (dense()) {
    const Box B = mesh.bounds();
    const std::int64_t N = mesh.cells();
    for (const auto& pg : g) {
      if (!B.contains(pg.box)) throw RangeError("step function leaves the mesh");
      for (const auto& pf : f) {
        if (!B.contains(pf.box)) throw RangeError("step function leaves the mesh");
        const double wt = pg.weight * pf.weight;
        for_each_cell(mesh, pg.box, [&](std::int64_t x) {
          for_each_cell(mesh, pf.box, [&](std::int64_t y) {
            const double* b = w.data() + (x * N + y) * n * n;
            for (int t = 0; t < n * n; ++t) out[static_cast<std::size_t>(t)] += wt * b[t];
          });
        });
      }
    }
    return out;
  }
  if (!kernel) throw PreconditionError("operator has neither a matrix nor a kernel");
  require_kernel_dim(mesh);
  const double u = unit_len(mesh.level);
  double s = 0.0;
  for (const auto& pg : g)
    for (const auto& pf : f) {
      const double a = static_cast<double>(pg.box.lo[0]) * u, b = static_cast<double>(pg.box.lo[0] + pg.box.len) * u;
      const double c = static_cast<double>(pf.box.lo[0]) * u, d = static_cast<double>(pf.box.lo[0] + pf.box.len) * u;
      double v = kernel->interval_pair(a, b, c, d);
      if (diag != 0.0) v += diag * static_cast<double>(overlap_len(pg.box, pf.box)) * u;
      s += pg.weight * pf.weight * v;
    }
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) out[static_cast<std::size_t>(r * n + c)] = s * kernel->matrix_entry(r, c);
  return out;
}

double DiscreteOperator::bilinear(const GridFunction& g, const GridFunction& f) const {
  const auto Tf = apply(f);
  // cell averages of Tf paired with g, ordered over cells
  return ordered_sum(mesh.cells(), [&](std::int64_t x) {
           double s = 0.0;
           for (int r = 0; r < n; ++r) s += g.at(x)[r] * Tf.at(x)[r];
           return s;
         }) *
         mesh.cell_volume();
}

GridFunction DiscreteOperator::apply_to_one() const {
  const std::int64_t N = mesh.cells();
  const int nn = n * n;
  GridFunction b(mesh, nn);
  const double inv = 1.0 / mesh.cell_volume();
  if (dense()) {
#pragma omp parallel for schedule(static)
    for (std::int64_t x = 0; x < N; ++x)
      for (std::int64_t y = 0; y < N; ++y) {
        const double* blk = block(x, y);
        for (int t = 0; t < nn; ++t) b.at(x)[t] += blk[t] * inv;
      }
    return b;
  }
  const Step one{{ambient(*this), 1.0}};
  for (std::int64_t x = 0; x < N; ++x) {
    const auto v = pair(Step{{cell_box(mesh, x), 1.0}}, one);
    for (int t = 0; t < nn; ++t) b.at(x)[t] = v[static_cast<std::size_t>(t)] * inv;
  }
  return b;
}

// ---- matrix elements ----

std::vector<double> matrix_element(const DiscreteOperator& T, const Box& J, unsigned etaJ, const Box& I,
                                   unsigned etaI, Convention conv) {
  const int L = T.mesh.level;
  auto out = T.pair(haar_step(J, etaJ, L), haar_step(I, etaI, L));
  if (conv == Convention::raw) return out;
  const Step one{{ambient(T), 1.0}};
  if (etaJ != 0 && strictly_inside(I, J)) {
    // h_J - <h_J>_{J_I} 1 vanishes on J_I: this is 1_{J_I^c}(h_J - <h_J>_{J_I})
    const double c = haar_sign(etaJ, child_of(J, I)) / std::sqrt(volume(J, L));
    axpy(out, -c, T.pair(one, haar_step(I, etaI, L)));
  } else if (etaI != 0 && strictly_inside(J, I)) {
    const double c = haar_sign(etaI, child_of(I, J)) / std::sqrt(volume(I, L));
    axpy(out, -c, T.pair(haar_step(J, etaJ, L), one));
  }
  return out;
}

std::vector<double> matrix_element(const DiscreteOperator& T, const DyadicCube& J, unsigned etaJ,
                                   const DyadicCube& I, unsigned etaI, Convention conv) {
  const int d = T.mesh.d, L = T.mesh.level;
  return matrix_element(T, standard_box(d, J, L), etaJ, standard_box(d, I, L), etaI, conv);
}

QuadratureCheck quadrature_check(const CzKernel& k, const Mesh& m, const DyadicCube& J, unsigned etaJ,
                                 const DyadicCube& I, unsigned etaI) {
  require_kernel_dim(m);
  // midpoint rule on cell pairs, diagonal cells dropped
  auto cellwise = [&](int level) {
    const double u = unit_len(level);
    const Step sJ = haar_step(standard_box(1, J, level), etaJ, level);
    const Step sI = haar_step(standard_box(1, I, level), etaI, level);
    double s = 0.0;
    for (const auto& pj : sJ)
      for (const auto& pi : sI)
        for (std::int64_t x = pj.box.lo[0]; x < pj.box.lo[0] + pj.box.len; ++x)
          for (std::int64_t y = pi.box.lo[0]; y < pi.box.lo[0] + pi.box.len; ++y) {
            if (x == y) continue;
            s += pj.weight * pi.weight * k.profile(static_cast<double>(x - y) * u);
          }
    return s * u * u;
  };
  QuadratureCheck q;
  q.coarse = cellwise(m.level);
  q.fine = cellwise(m.level + 2);
  const auto T = DiscreteOperator::from_kernel(k, m, false);
  q.closed = matrix_element(T, J, etaJ, I, etaI)[0];
  q.under_resolved = std::abs(q.coarse - q.fine) > 1e-6;
  return q;
}

// ---- paraproducts ----

ExtractedParaproducts extract_paraproducts(const DiscreteOperator& T, int kmin, int kmax) {
  ExtractedParaproducts out;
  out.t1.b = T.apply_to_one();
  out.t1.n = T.n;
  out.t1.kmin = kmin;
  out.t1.kmax = kmax;
  out.tstar1.b = T.adjoint().apply_to_one();
  out.tstar1.n = T.n;
  out.tstar1.kmin = kmin;
  out.tstar1.kmax = kmax;
  const int d = T.mesh.d, L = T.mesh.level;
  const Step one{{ambient(T), 1.0}};
  HaarCoefficients layout;
  layout.mesh = T.mesh;
  for (int k = kmin; k <= kmax; ++k) {
    const std::int64_t cpa = layout.cubes_per_axis(k);
    std::int64_t count = 1;
    for (int a = 0; a < d; ++a) count *= cpa;
    for (std::int64_t t = 0; t < count; ++t) {
      const DyadicCube I = layout.cube_at(k, t);
      for (unsigned eta = 1; eta < (1u << d); ++eta) {
        const Step h = haar_step(standard_box(d, I, L), eta, L);
        out.coeffs.push_back({I, eta, T.pair(h, one), T.pair(one, h)});
      }
    }
  }
  return out;
}

ExtractionReport extraction_identity(const DiscreteOperator& T, const GridFunction& g, const GridFunction& f) {
  const Mesh& m = T.mesh;
  const int d = m.d, L = m.level, n = T.n;
  std::int64_t side = m.side;
  int root = L;
  while (side > 1) {
    side >>= 1;
    --root;
  }
  const auto cg = analyze(g, root), cf = analyze(f, root);
  struct Entry {
    Box box;
    unsigned eta;
    std::vector<double> cg, cf;
  };
  std::vector<Entry> entries;
  for (int k = root; k < L; ++k) {
    const std::int64_t cpa = cg.cubes_per_axis(k);
    std::int64_t count = 1;
    for (int a = 0; a < d; ++a) count *= cpa;
    for (std::int64_t t = 0; t < count; ++t)
      for (unsigned eta = 1; eta < (1u << d); ++eta) {
        const double* a = cg.coeff(k, t, eta);
        const double* b = cf.coeff(k, t, eta);
        entries.push_back({standard_box(d, cg.cube_at(k, t), L), eta, {a, a + n}, {b, b + n}});
      }
  }
  ExtractionReport r;
  r.raw = T.bilinear(g, f);
  const auto E = static_cast<std::int64_t>(entries.size());
  std::vector<double> raw_part(static_cast<std::size_t>(E)), ext_part(static_cast<std::size_t>(E));
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t jj = 0; jj < E; ++jj) {
    const Entry& J = entries[static_cast<std::size_t>(jj)];
    double sr = 0.0, se = 0.0;
    for (const Entry& I : entries) {
      sr += sandwich(J.cg, matrix_element(T, J.box, J.eta, I.box, I.eta, Convention::raw), I.cf);
      se += sandwich(J.cg, matrix_element(T, J.box, J.eta, I.box, I.eta, Convention::extracted), I.cf);
    }
    raw_part[static_cast<std::size_t>(jj)] = sr;
    ext_part[static_cast<std::size_t>(jj)] = se;
  }
  for (std::int64_t t = 0; t < E; ++t) {
    r.haar_raw += raw_part[static_cast<std::size_t>(t)];
    r.extracted += ext_part[static_cast<std::size_t>(t)];
  }
  const auto P = extract_paraproducts(T, root, L - 1);
  r.pi_t1 = pair(g, apply_paraproduct(P.t1, f));
  r.pi_tstar1 = pair(apply_paraproduct(P.tstar1, g), f);
  r.residual = r.raw - r.extracted - r.pi_t1 - r.pi_tstar1;
  return r;
}

// ---- shift coefficients ----

KernelTable shift_coefficients(const DiscreteOperator& T, const DyadicSystem& sys, const DyadicCube& K, int i,
                               int j, const GoodnessParams& gp, Convention conv) {
  const int d = sys.dim(), n = T.n, L = T.mesh.level;
  const int res = std::max(i, j) + 1;
  if (K.level + res > sys.depth()) throw DepthError("shift coefficients finer than the system depth");
  KernelTable t;
  t.d = d;
  t.res = res;
  t.n = n;
  const std::int64_t sc = t.subcells();
  t.a.assign(static_cast<std::size_t>(sc * sc * n * n), 0.0);
  const Box Kb = sys.box(K);
  const double volK = volume(Kb, L);
  const std::int64_t sub_len = Kb.len >> res;
  const std::int64_t sub_side = std::int64_t{1} << res;
  // subcell indices of a cube with the Haar sign of each
  auto cells_of = [&](const Box& C, unsigned eta) {
    std::vector<std::pair<std::int64_t, int>> out;
    const std::int64_t per = C.len / sub_len;
    std::int64_t count = 1;
    for (int a = 0; a < d; ++a) count *= per;
    for (std::int64_t q = 0; q < count; ++q) {
      std::int64_t r = q, idx = 0, mul = 1;
      unsigned e = 0;
      for (int a = 0; a < d; ++a) {
        const std::int64_t off = r % per;
        r /= per;
        if (off >= per / 2) e |= 1u << a;
        idx += ((C.lo[a] - Kb.lo[a]) / sub_len + off) * mul;
        mul *= sub_side;
      }
      out.push_back({idx, haar_sign(eta, e)});
    }
    return out;
  };
  for (const auto& pr : shift_pairs(sys, K, i, j, gp, true))
    for (unsigned eJ = 1; eJ < (1u << d); ++eJ)
      for (unsigned eI = 1; eI < (1u << d); ++eI) {
        const auto E = matrix_element(T, pr.Jb, eJ, pr.Ib, eI, conv);
        const double amp = volK / std::sqrt(volume(pr.Ib, L) * volume(pr.Jb, L));
        const auto xs = cells_of(pr.Ib, eI);
        for (const auto& [xp, sJ] : cells_of(pr.Jb, eJ))
          for (const auto& [x, sI] : xs) {
            double* blk = t.block(xp, x);
            for (int q = 0; q < n * n; ++q) blk[q] += amp * sJ * sI * E[static_cast<std::size_t>(q)];
          }
      }
  return t;
}

double shift_partial_sum(const DiscreteOperator& T, const DyadicSystem& sys, const DyadicCube& K, int i, int j,
                         const GoodnessParams& gp, const GridFunction& g, const GridFunction& f, Convention conv) {
  const int d = sys.dim(), n = T.n, L = T.mesh.level;
  double s = 0.0;
  for (const auto& pr : shift_pairs(sys, K, i, j, gp, true))
    for (unsigned eJ = 1; eJ < (1u << d); ++eJ)
      for (unsigned eI = 1; eI < (1u << d); ++eI) {
        const Step hJ = haar_step(pr.Jb, eJ, L), hI = haar_step(pr.Ib, eI, L);
        std::vector<double> gJ(static_cast<std::size_t>(n)), fI(static_cast<std::size_t>(n));
        for (int c = 0; c < n; ++c) {
          gJ[static_cast<std::size_t>(c)] = step_integral(g, hJ, c);
          fI[static_cast<std::size_t>(c)] = step_integral(f, hI, c);
        }
        s += sandwich(gJ, matrix_element(T, pr.Jb, eJ, pr.Ib, eI, conv), fI);
      }
  return s;
}

// ---- decay ----

const char* decay_case_name(DecayCase c) {
  switch (c) {
    case DecayCase::far_disjoint: return "far-disjoint";
    case DecayCase::near_disjoint: return "near-disjoint";
    case DecayCase::deeply_nested: return "deeply-nested";
    case DecayCase::shallowly_nested: return "shallowly-nested";
    case DecayCase::equal: return "equal";
  }
  return "?";
}

DecayResult decay_check(const DiscreteOperator& T, const DyadicSystem& sys, DecayCase which,
                        const GoodnessParams& gp, const DecayOptions& opt) {
  const int d = sys.dim(), L = T.mesh.level, r = gp.r;
  DecayResult res;
  res.which = which;
  const bool decaying = which == DecayCase::far_disjoint || which == DecayCase::deeply_nested;
  const double a = T.kernel ? T.kernel->alpha : 1.0;
  if (which == DecayCase::far_disjoint) res.target = -(a * (1.0 - gp.gamma) - gp.gamma * d);
  if (which == DecayCase::deeply_nested) res.target = -a * (1.0 - gp.gamma);

  for (int i = opt.i_min; i <= opt.i_max; ++i) {
    int jlo = 0, jhi = -1;
    switch (which) {
      case DecayCase::far_disjoint:
        if (i > r) jlo = 1, jhi = i;
        break;
      case DecayCase::near_disjoint:
        if (i >= 1 && i <= r) jlo = 1, jhi = i;
        break;
      case DecayCase::deeply_nested:
        if (i > r) jlo = 0, jhi = 0;
        break;
      case DecayCase::shallowly_nested:
        if (i >= 1 && i <= r) jlo = 0, jhi = 0;
        break;
      case DecayCase::equal:
        if (i == 0) jlo = 0, jhi = 0;
        break;
    }
    const Convention conv = (jlo == 0 && i > 0) ? Convention::extracted : Convention::raw;
    struct Task {
      DyadicCube K;
      int j;
    };
    std::vector<Task> tasks;
    for (int j = jlo; j <= jhi; ++j)
      for (int k = 0; k <= opt.k_max; ++k) {
        if (k + i + 1 > L) continue;
        for (const auto& K : descendants(sys, DyadicCube{}, k)) tasks.push_back({K, j});
      }
    std::vector<double> mx(tasks.size(), 0.0);
    std::vector<std::int64_t> cnt(tasks.size(), 0);
    auto run = [&](std::int64_t t) {
      const Task& tk = tasks[static_cast<std::size_t>(t)];
      for (const auto& pr : shift_pairs(sys, tk.K, i, tk.j, gp, opt.require_good)) {
        const double amp = volume(sys.box(tk.K), L) / std::sqrt(volume(pr.Ib, L) * volume(pr.Jb, L));
        for (unsigned eJ = 1; eJ < (1u << d); ++eJ)
          for (unsigned eI = 1; eI < (1u << d); ++eI) {
            const auto E = matrix_element(T, pr.Jb, eJ, pr.Ib, eI, conv);
            mx[static_cast<std::size_t>(t)] = std::max(mx[static_cast<std::size_t>(t)], amp * block_norm(E, T.n));
          }
        ++cnt[static_cast<std::size_t>(t)];
      }
    };
    const auto nt = static_cast<std::int64_t>(tasks.size());
    if (opt.exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
      for (std::int64_t t = 0; t < nt; ++t) run(t);
    } else {
      for (std::int64_t t = 0; t < nt; ++t) run(t);
    }
    double m = 0.0;
    std::int64_t c = 0;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      m = std::max(m, mx[t]);
      c += cnt[t];
    }
    if (jhi < jlo) continue;
    res.i.push_back(i);
    res.max_magnitude.push_back(m);
    res.pairs.push_back(c);
  }

  std::vector<double> xs, ys;
  for (std::size_t t = 0; t < res.i.size(); ++t) {
    res.constant = std::max(res.constant, res.max_magnitude[t]);
    if (res.pairs[t] > 0 && res.max_magnitude[t] > 0) {
      xs.push_back(res.i[t]);
      ys.push_back(std::log2(res.max_magnitude[t]));
    }
  }
  if (xs.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t t = 0; t < xs.size(); ++t) mx += xs[t], my += ys[t];
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxy = 0, sxx = 0;
    for (std::size_t t = 0; t < xs.size(); ++t) sxy += (xs[t] - mx) * (ys[t] - my), sxx += (xs[t] - mx) * (xs[t] - mx);
    res.slope = sxy / sxx;
  }
  if (decaying) {
    if (xs.size() < 3) throw InsufficientData("fewer than three i values carry coefficients");
    res.pass = res.slope <= res.target + 0.1;
  } else {
    // bounded cases cover i <= r only, where 2^{i d} normalization growth is allowed
    res.pass = std::isfinite(res.constant);
  }
  return res;
}

// ---- averaging identity ----

AveragingReport averaging_identity(const DiscreteOperator& T, const GridFunction& f, const GridFunction& g,
                                   const RepresentationConfig& cfg) {
  if (!T.kernel || T.mesh.d != 1 || T.n != 1) throw PreconditionError("averaging identity needs a scalar kernel on the line");
  const Mesh& m = f.mesh;
  if (!(g.mesh == m) || m.origin[0] != 0 || (std::int64_t{1} << m.level) != m.side)
    throw PreconditionError("f and g must live on the unit mesh");
  const int N = m.level, d = 1;
  const auto free = DiscreteOperator::from_kernel(*T.kernel, m, false, T.diag);

  AveragingReport rep;
  rep.lhs = free.bilinear(g, f);
  const auto gpb = goodness_probability(cfg.gp, d);
  rep.pi_good = gpb.probability;
  if (!(rep.pi_good > 0.0)) throw PreconditionError("no cube is good for these goodness parameters");

  // prefix sums for integrals of f and g over boxes in mesh units
  std::vector<double> Pf(static_cast<std::size_t>(m.side + 1), 0.0), Pg(Pf.size(), 0.0);
  for (std::int64_t c = 0; c < m.side; ++c) {
    Pf[static_cast<std::size_t>(c + 1)] = Pf[static_cast<std::size_t>(c)] + f.at(c)[0];
    Pg[static_cast<std::size_t>(c + 1)] = Pg[static_cast<std::size_t>(c)] + g.at(c)[0];
  }
  const double h = m.cell_volume();
  auto integ = [&](const std::vector<double>& P, std::int64_t lo, std::int64_t hi) {
    lo = std::clamp<std::int64_t>(lo, 0, m.side);
    hi = std::clamp<std::int64_t>(hi, 0, m.side);
    return (P[static_cast<std::size_t>(hi)] - P[static_cast<std::size_t>(lo)]) * h;
  };
  const Box support{1, {0, 0, 0}, m.side};

  struct Term {
    double full = 0.0, good = 0.0;
  };
  auto one_grid = [&](std::uint64_t mask) {
    const auto sys = DyadicSystem::from_mask(d, cfg.m_top, N, mask);
    struct C {
      Box b;
      double cf, cg;
      bool good;
    };
    std::vector<C> cubes;
    for (int k = sys.top(); k < N; ++k)
      for (const auto& q : sys.cubes_meeting(k, support)) {
        const Box b = sys.box(q);
        const std::int64_t half = b.len / 2;
        const double amp = 1.0 / std::sqrt(static_cast<double>(b.len) * h);
        const double cf = amp * (integ(Pf, b.lo[0], b.lo[0] + half) - integ(Pf, b.lo[0] + half, b.lo[0] + b.len));
        const double cg = amp * (integ(Pg, b.lo[0], b.lo[0] + half) - integ(Pg, b.lo[0] + half, b.lo[0] + b.len));
        if (cf == 0.0 && cg == 0.0) continue;
        cubes.push_back({b, cf, cg, is_good(sys, q, cfg.gp)});
      }
    Term t;
    for (const auto& J : cubes) {
      if (J.cg == 0.0) continue;
      for (const auto& I : cubes) {
        if (I.cf == 0.0) continue;
        const double x = J.cg * matrix_element(free, J.b, 1, I.b, 1)[0] * I.cf;
        t.full += x;
        const bool smaller_good = I.b.len <= J.b.len ? I.good : J.good;
        if (smaller_good) t.good += x;
      }
    }
    return t;
  };

  rep.full_sum_omega0 = one_grid(0).full;
  const int bits = DyadicSystem(d, cfg.m_top, N).bit_count();
  rep.exhaustive = bits <= cfg.exhaustive_bits;
  const std::uint64_t count = rep.exhaustive ? (std::uint64_t{1} << bits) : cfg.mc_samples;
  if (!rep.exhaustive && count < 2) throw PreconditionError("Monte Carlo needs at least two grids");
  rep.grids = count;
  std::vector<Term> terms(count);
  auto run = [&](std::int64_t t) {
    std::uint64_t mask = static_cast<std::uint64_t>(t);
    if (!rep.exhaustive) {
      Rng rng(cfg.seed, "averaging-grid", static_cast<std::uint64_t>(t));
      mask = rng.engine()() & ((bits >= 64) ? ~0ull : ((std::uint64_t{1} << bits) - 1));
    }
    terms[static_cast<std::size_t>(t)] = one_grid(mask);
  };
  const auto nt = static_cast<std::int64_t>(count);
  if (cfg.exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t t = 0; t < nt; ++t) run(t);
  } else {
    for (std::int64_t t = 0; t < nt; ++t) run(t);
  }
  double sf = 0.0, sg = 0.0;
  for (const auto& t : terms) sf += t.full, sg += t.good;
  const double mean_full = sf / static_cast<double>(count);
  const double mean_good = sg / static_cast<double>(count);
  rep.rhs = mean_good / rep.pi_good;
  rep.remainder = rep.lhs - mean_full;
  rep.residual = rep.lhs - rep.rhs;
  rep.relative = rep.lhs != 0.0 ? std::abs(rep.residual) / std::abs(rep.lhs) : std::abs(rep.residual);
  if (!rep.exhaustive) {
    double v = 0.0;
    for (const auto& t : terms) v += (t.good - mean_good) * (t.good - mean_good);
    v /= static_cast<double>(count - 1);
    rep.std_error = std::sqrt(v / static_cast<double>(count)) / rep.pi_good;
  }
  return rep;
}

// ---- WBP ----

WbpResult wbp_constants(const DiscreteOperator& T, int kmin) {
  const int d = T.mesh.d, L = T.mesh.level, n = T.n;
  WbpResult r;
  HaarCoefficients layout;
  layout.mesh = T.mesh;
  OperatorFamily fam;
  for (int k = kmin; k <= L; ++k) {
    const std::int64_t cpa = layout.cubes_per_axis(k);
    std::int64_t count = 1;
    for (int a = 0; a < d; ++a) count *= cpa;
    for (std::int64_t t = 0; t < count; ++t) {
      const Box I = standard_box(d, layout.cube_at(k, t), L);
      auto v = T.pair(Step{{I, 1.0}}, Step{{I, 1.0}});
      for (double& x : v) x /= volume(I, L);
      r.max_abs = std::max(r.max_abs, block_norm(v, n));
      if (n == 1) {
        r.values.push_back(v[0]);
      } else {
        Eigen::MatrixXd M(n, n);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) M(a, b) = v[static_cast<std::size_t>(a * n + b)];
        fam.ops.push_back(M);
      }
    }
  }
  r.rbound = n == 1 ? r.max_abs : rbound_probe(fam, 2.0, NormedSpace::lq(n, 2.0), 200, 0);
  return r;
}

void write_coefficients_csv(std::ostream& os, int d, const std::vector<CoefficientRow>& rows) {
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.values.size());
  os << "i,j,K_level,K_corner";
  if (width <= 1) {
    os << ",magnitude";
  } else {
    const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(width))));
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) os << ",a_" << a << "_" << b;
  }
  os << "\n";
  const auto old = os.precision(17);
  for (const auto& r : rows) {
    os << r.i << "," << r.j << "," << r.K.level << ",";
    for (int a = 0; a < d; ++a) os << (a ? ";" : "") << r.K.corner[a];
    for (double v : r.values) os << "," << v;
    os << "\n";
  }
  os.precision(old);
}

}  // namespace dyadiclab
