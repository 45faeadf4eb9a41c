#include "dyadiclab/dyadic_grid.hpp"

#include <cmath>
#include <sstream>

#include "dyadiclab/errors.hpp"

namespace dyadiclab {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t pow2(int e) {
  if (e < 0 || e > 62) throw RangeError("dyadic exponent out of range");
  return std::int64_t{1} << e;
}

}  // namespace

std::string DyadicCube::str(int d) const {
  std::ostringstream os;
  os << "L" << level << "(";
  for (int a = 0; a < d; ++a) os << (a ? "," : "") << corner[a];
  os << ")";
  return os.str();
}

bool Box::contains(const Box& o) const {
  for (int a = 0; a < d; ++a)
    if (o.lo[a] < lo[a] || o.lo[a] + o.len > lo[a] + len) return false;
  return true;
}

bool Box::intersects(const Box& o) const {
  for (int a = 0; a < d; ++a)
    if (o.lo[a] >= lo[a] + len || lo[a] >= o.lo[a] + o.len) return false;
  return true;
}

DyadicSystem::DyadicSystem(int d, int m_top, int n_depth) : d_(d), m_top_(m_top), n_(n_depth) {
  if (d < 1 || d > kMaxDim) throw RangeError("dimension must be 1..3");
  if (m_top < 0 || n_depth < -m_top || n_depth + m_top > 60)
    throw RangeError("level range [-M, N] invalid");
  bits_.assign(static_cast<std::size_t>(n_ + m_top_), {0, 0, 0});
}

DyadicSystem DyadicSystem::random(int d, int m_top, int n_depth, Rng& rng) {
  DyadicSystem s(d, m_top, n_depth);
  for (auto& b : s.bits_)
    for (int a = 0; a < d; ++a) b[a] = rng.bit() ? 1 : 0;
  return s;
}

DyadicSystem DyadicSystem::from_mask(int d, int m_top, int n_depth, std::uint64_t mask) {
  DyadicSystem s(d, m_top, n_depth);
  const int nb = s.bit_count();
  for (int b = 0; b < nb && b < 64; ++b)
    if ((mask >> b) & 1u) s.bits_[static_cast<std::size_t>(b / d)][b % d] = 1;
  return s;
}

int DyadicSystem::omega(int j, int axis) const {
  if (j < first_scale() || j > n_) return 0;
  return bits_[static_cast<std::size_t>(j - first_scale())][axis];
}

void DyadicSystem::set_omega(int j, int axis, int bit) {
  if (j < first_scale() || j > n_) throw RangeError("omega scale outside the system");
  bits_[static_cast<std::size_t>(j - first_scale())][axis] = bit ? 1 : 0;
}

std::int64_t DyadicSystem::shift_units(int level, int axis) const {
  std::int64_t s = 0;
  for (int j = std::max(level + 1, first_scale()); j <= n_; ++j)
    if (omega(j, axis)) s += pow2(n_ - j);
  return s;
}

Box DyadicSystem::box(const DyadicCube& c) const {
  if (c.level > n_) throw DepthError("cube finer than the system depth");
  Box b;
  b.d = d_;
  b.len = pow2(n_ - c.level);
  for (int a = 0; a < d_; ++a) b.lo[a] = c.corner[a] * b.len + shift_units(c.level, a);
  return b;
}

GeomCube DyadicSystem::geometry(const DyadicCube& c) const {
  const Box b = box(c);
  const double u = std::ldexp(1.0, -n_);
  GeomCube g;
  g.d = d_;
  for (int a = 0; a < d_; ++a) {
    g.lo[a] = static_cast<double>(b.lo[a]) * u;
    g.hi[a] = static_cast<double>(b.lo[a] + b.len) * u;
  }
  return g;
}

bool DyadicSystem::in_range(const DyadicCube& c) const {
  if (c.level < -m_top_ || c.level > n_) return false;
  const Box b = box(c);
  const std::int64_t top_len = pow2(n_ + m_top_);
  for (int a = 0; a < d_; ++a) {
    const std::int64_t t = floor_div(b.lo[a] - shift_units(-m_top_, a), top_len);
    if (t < -1 || t > 0) return false;
  }
  return true;
}

void DyadicSystem::require(const DyadicCube& c) const {
  if (!in_range(c)) throw RangeError("cube " + c.str(d_) + " outside the ambient");
}

GeomCube DyadicSystem::translate(const DyadicCube& standard_cube) const {
  require(standard_cube);
  return geometry(standard_cube);
}

std::vector<DyadicCube> DyadicSystem::children(const DyadicCube& c) const {
  if (c.level + 1 > n_) throw DepthError("children below the system depth");
  std::vector<DyadicCube> out;
  out.reserve(std::size_t{1} << d_);
  for (int e = 0; e < (1 << d_); ++e) {
    DyadicCube ch;
    ch.level = c.level + 1;
    for (int a = 0; a < d_; ++a) ch.corner[a] = 2 * c.corner[a] + omega(c.level + 1, a) + ((e >> a) & 1);
    out.push_back(ch);
  }
  return out;
}

DyadicCube DyadicSystem::parent(const DyadicCube& c) const {
  if (c.level - 1 < -m_top_) throw RangeError("no parent above the top level");
  DyadicCube p;
  p.level = c.level - 1;
  for (int a = 0; a < d_; ++a) p.corner[a] = floor_div(c.corner[a] - omega(c.level, a), 2);
  return p;
}

DyadicCube DyadicSystem::ancestor(const DyadicCube& c, int levels_up) const {
  DyadicCube k = c;
  for (int s = 0; s < levels_up; ++s) k = parent(k);
  return k;
}

DyadicCube DyadicSystem::common_ancestor(const DyadicCube& a, const DyadicCube& b) const {
  DyadicCube x = a, y = b;
  while (x.level > y.level) x = parent(x);
  while (y.level > x.level) y = parent(y);
  while (!(x == y)) {
    if (x.level <= -m_top_) throw RangeError("no common ancestor inside the ambient");
    x = parent(x);
    y = parent(y);
  }
  return x;
}

bool DyadicSystem::contains(const DyadicCube& outer, const DyadicCube& inner) const {
  if (outer.level > inner.level) return false;
  if (outer.level < -m_top_) return false;
  return ancestor(inner, inner.level - outer.level) == outer;
}

DyadicCube DyadicSystem::locate(int level, const Coord& p) const {
  DyadicCube c;
  c.level = level;
  const std::int64_t len = pow2(n_ - level);
  for (int a = 0; a < d_; ++a) c.corner[a] = floor_div(p[a] - shift_units(level, a), len);
  return c;
}

std::vector<DyadicCube> DyadicSystem::cubes_meeting(int level, const Box& b) const {
  const std::int64_t len = pow2(n_ - level);
  Coord lo{}, hi{};
  for (int a = 0; a < d_; ++a) {
    const std::int64_t s = shift_units(level, a);
    lo[a] = floor_div(b.lo[a] - s, len);
    hi[a] = floor_div(b.lo[a] + b.len - 1 - s, len);
  }
  std::vector<DyadicCube> out;
  Coord cur = lo;
  while (true) {
    DyadicCube c;
    c.level = level;
    c.corner = cur;
    out.push_back(c);
    int a = 0;
    for (; a < d_; ++a) {
      if (cur[a] < hi[a]) {
        ++cur[a];
        break;
      }
      cur[a] = lo[a];
    }
    if (a == d_) break;
  }
  return out;
}

bool is_good(const DyadicSystem& sys, const DyadicCube& c, const GoodnessParams& gp) {
  int coarsest = sys.top();
  if (gp.max_ancestor_level) coarsest = std::max(coarsest, *gp.max_ancestor_level);
  const Box bi = sys.box(c);
  DyadicCube k = c;
  int s = 0;
  while (true) {
    if (k.level - 1 < coarsest) break;
    k = sys.parent(k);
    ++s;
    if (s > gp.max_gap) break;
    if (s < gp.r) continue;
    const Box bk = sys.box(k);
    std::int64_t dist = bk.len;
    for (int a = 0; a < sys.dim(); ++a) {
      dist = std::min(dist, bi.lo[a] - bk.lo[a]);
      dist = std::min(dist, bk.lo[a] + bk.len - bi.lo[a] - bi.len);
    }
    const double rel = static_cast<double>(dist) / static_cast<double>(bk.len);
    const double need = std::pow(2.0, -s * gp.gamma);
    if (!(rel > need + kGoodTol)) return false;
  }
  return true;
}

double goodness_bound(double gamma, int r, int d) {
  return 1.0 - (8.0 * d / gamma) * std::pow(2.0, -r * gamma);
}

namespace {

struct EnumSetup {
  int gap = 0;
  int m_top = 0;
  int first_bit_scale = 0;
};

EnumSetup enum_setup(const GoodnessParams& gp, int d, const DyadicCube& base, int cap_bits) {
  int gap = gp.max_gap;
  if (gp.max_ancestor_level) gap = std::min(gap, base.level - *gp.max_ancestor_level);
  if (gap < 0) gap = 0;
  if (gap * d > cap_bits || gap > 40)
    throw ResourceError("goodness enumeration needs " + std::to_string(gap * d) + " bits");
  EnumSetup e;
  e.gap = gap;
  e.m_top = std::max(0, gap - base.level);
  e.first_bit_scale = base.level - gap + 1;
  return e;
}

}  // namespace

GoodnessProbability goodness_probability(const GoodnessParams& gp, int d, const DyadicCube& base,
                                         int cap_bits) {
  const EnumSetup e = enum_setup(gp, d, base, cap_bits);
  GoodnessParams local = gp;
  local.max_gap = e.gap;
  const int nb = e.gap * d;
  GoodnessProbability out;
  out.bits = nb;
  out.total = std::uint64_t{1} << nb;
  DyadicSystem sys(d, e.m_top, base.level);
  for (std::uint64_t mask = 0; mask < out.total; ++mask) {
    for (int b = 0; b < nb; ++b) sys.set_omega(e.first_bit_scale + b / d, b % d, (mask >> b) & 1u);
    if (is_good(sys, base, local)) ++out.good;
  }
  out.probability = static_cast<double>(out.good) / static_cast<double>(out.total);
  out.analytic_bound = goodness_bound(gp.gamma, gp.r, d);
  return out;
}

GoodnessProbability goodness_probability(const GoodnessParams& gp, int d, int cap_bits) {
  DyadicCube base;
  base.level = std::min(gp.max_gap, 40);
  return goodness_probability(gp, d, base, cap_bits);
}

GoodnessJoint goodness_joint(const GoodnessParams& gp, int d, const DyadicCube& base,
                             int position_bits, int cap_bits) {
  const EnumSetup e = enum_setup(gp, d, base, cap_bits);
  GoodnessParams local = gp;
  local.max_gap = e.gap;
  const int nb = e.gap * d;
  const int np = position_bits * d;
  if (nb + np > cap_bits) throw ResourceError("joint goodness enumeration too large");
  const std::uint64_t npos = std::uint64_t{1} << np;
  GoodnessJoint out;
  out.good_by_pos.assign(npos, 0);
  out.total_by_pos.assign(npos, 0);
  DyadicSystem sys(d, e.m_top, base.level + position_bits);
  const std::uint64_t total = std::uint64_t{1} << (nb + np);
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    for (int b = 0; b < nb; ++b) sys.set_omega(e.first_bit_scale + b / d, b % d, (mask >> b) & 1u);
    for (int b = 0; b < np; ++b) sys.set_omega(base.level + 1 + b / d, b % d, (mask >> (nb + b)) & 1u);
    // position of base+omega at the finest scale, relative to the standard cube
    const Box bx = sys.box(base);
    const std::int64_t len = bx.len;
    std::uint64_t pos = 0;
    for (int a = d - 1; a >= 0; --a) {
      const std::int64_t off = bx.lo[a] - base.corner[a] * len;
      pos = (pos << position_bits) | static_cast<std::uint64_t>(off);
    }
    const bool g = is_good(sys, base, local);
    ++out.total_by_pos[pos];
    ++out.total;
    if (g) {
      ++out.good_by_pos[pos];
      ++out.good;
    }
  }
  out.factorizes = true;
  for (std::uint64_t p = 0; p < npos; ++p)
    if (out.good_by_pos[p] * out.total != out.total_by_pos[p] * out.good) out.factorizes = false;
  return out;
}

double goodness_probability_mc(const GoodnessParams& gp, int d, std::uint64_t samples,
                               std::uint64_t seed) {
  const int gap = std::min(gp.max_gap, 40);
  DyadicCube base;
  base.level = gap;
  GoodnessParams local = gp;
  local.max_gap = gap;
  std::uint64_t good = 0;
  for (std::uint64_t t = 0; t < samples; ++t) {
    Rng rng(seed, "goodness-mc", t);
    DyadicSystem sys(d, 0, base.level);
    for (int j = 1; j <= base.level; ++j)
      for (int a = 0; a < d; ++a) sys.set_omega(j, a, rng.bit());
    if (is_good(sys, base, local)) ++good;
  }
  return static_cast<double>(good) / static_cast<double>(samples);
}

}  // namespace dyadiclab
