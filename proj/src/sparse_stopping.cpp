#include "dyadiclab/sparse_stopping.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "dyadiclab/errors.hpp"
#include "json.hpp"

namespace dyadiclab {

namespace {

DyadicCube mesh_root(const Mesh& m) {
  DyadicCube c;
  int lg = 0;
  while ((std::int64_t{1} << lg) < m.side) ++lg;
  c.level = m.level - lg;
  for (int a = 0; a < m.d; ++a) c.corner[a] = m.origin[a] / m.side;
  return c;
}

bool inside(const DyadicCube& Q, const DyadicCube& S, int d) {
  if (Q.level < S.level) return false;
  const int sh = Q.level - S.level;
  for (int a = 0; a < d; ++a)
    if ((Q.corner[a] >> sh) != S.corner[a]) return false;
  return true;
}

std::vector<DyadicCube> kids(const DyadicCube& c, int d) {
  std::vector<DyadicCube> out;
  for (unsigned e = 0; e < (1u << d); ++e) {
    DyadicCube k;
    k.level = c.level + 1;
    for (int a = 0; a < d; ++a) k.corner[a] = 2 * c.corner[a] + ((e >> a) & 1u);
    out.push_back(k);
  }
  return out;
}

double cell_w(const SparseFamily& fam, std::int64_t c) {
  return fam.weight.empty() ? 1.0 : fam.weight[static_cast<std::size_t>(c)];
}

// mu-average of f over a box
std::vector<double> avg_mu(const SparseFamily& fam, const GridFunction& f, const Box& b) {
  std::vector<double> s(static_cast<std::size_t>(f.n), 0.0);
  double w = 0.0;
  for_each_cell(f.mesh, b, [&](std::int64_t c) {
    const double wc = cell_w(fam, c);
    w += wc;
    for (int k = 0; k < f.n; ++k) s[static_cast<std::size_t>(k)] += wc * f.at(c)[k];
  });
  if (w > 0)
    for (double& x : s) x /= w;
  return s;
}

double avg_abs(const SparseFamily& fam, const GridFunction& f, const NormedSpace& E, const Box& b) {
  double s = 0.0, w = 0.0;
  for_each_cell(f.mesh, b, [&](std::int64_t c) {
    const double wc = cell_w(fam, c);
    w += wc;
    s += wc * E.norm(f.at(c));
  });
  return w > 0 ? s / w : 0.0;
}

double lp_mu(const SparseFamily& fam, const GridFunction& f, double p, const NormedSpace& E) {
  if (p == kInf) {
    double m = 0.0;
    for (std::int64_t c = 0; c < f.mesh.cells(); ++c)
      if (cell_w(fam, c) > 0) m = std::max(m, E.norm(f.at(c)));
    return m;
  }
  double s = 0.0;
  for (std::int64_t c = 0; c < f.mesh.cells(); ++c) s += cell_w(fam, c) * std::pow(E.norm(f.at(c)), p);
  return std::pow(s * f.mesh.cell_volume(), 1.0 / p);
}

Box box_of(const SparseFamily& fam, const DyadicCube& c) { return standard_box(fam.mesh.d, c, fam.mesh.level); }

void fill(GridFunction& out, const Box& b, const std::vector<double>& v, double sign) {
  for_each_cell(out.mesh, b, [&](std::int64_t c) {
    for (int k = 0; k < out.n; ++k) out.at(c)[k] += sign * v[static_cast<std::size_t>(k)];
  });
}

}  // namespace

int SparseFamily::find(const DyadicCube& c) const {
  auto it = index.find(c);
  return it == index.end() ? -1 : it->second;
}

int SparseFamily::add(const DyadicCube& c, int parent) {
  const int id = static_cast<int>(members.size());
  members.push_back({c, parent, {}});
  index[c] = id;
  if (parent >= 0) members[static_cast<std::size_t>(parent)].children.push_back(id);
  return id;
}

double SparseFamily::mu(const Box& b) const {
  if (weight.empty()) {
    double v = 1.0;
    for (int a = 0; a < mesh.d; ++a) v *= static_cast<double>(b.len);
    return v * mesh.cell_volume();
  }
  double s = 0.0;
  for_each_cell(mesh, b, [&](std::int64_t c) { s += weight[static_cast<std::size_t>(c)]; });
  return s * mesh.cell_volume();
}

double SparseFamily::mu(const DyadicCube& c) const { return mu(box_of(*this, c)); }

double SparseFamily::mu_exceptional(int s) const {
  const auto& m = members.at(static_cast<std::size_t>(s));
  double v = mu(m.cube);
  for (int k : m.children) v -= mu(members[static_cast<std::size_t>(k)].cube);
  return v;
}

std::vector<char> SparseFamily::exceptional_mask(int s) const {
  std::vector<char> mask(static_cast<std::size_t>(mesh.cells()), 0);
  const auto& m = members.at(static_cast<std::size_t>(s));
  for_each_cell(mesh, box_of(*this, m.cube), [&](std::int64_t c) { mask[static_cast<std::size_t>(c)] = 1; });
  for (int k : m.children)
    for_each_cell(mesh, box_of(*this, members[static_cast<std::size_t>(k)].cube),
                  [&](std::int64_t c) { mask[static_cast<std::size_t>(c)] = 0; });
  return mask;
}

int SparseFamily::pi(const DyadicCube& Q) const {
  if (!inside(Q, root(), mesh.d)) throw RangeError("cube outside the family root");
  int cur = 0;
  for (;;) {
    int next = -1;
    for (int k : members[static_cast<std::size_t>(cur)].children)
      if (inside(Q, members[static_cast<std::size_t>(k)].cube, mesh.d)) next = k;
    if (next < 0) return cur;
    cur = next;
  }
}

double SparseFamily::sparseness() const {
  double worst = 1.0;
  for (std::size_t s = 0; s < members.size(); ++s) {
    const double m = mu(members[s].cube);
    if (m > 0) worst = std::min(worst, mu_exceptional(static_cast<int>(s)) / m);
  }
  return worst;
}

SparseFamily build_stopping_family(const GridFunction& f, const NormedSpace& E, double factor,
                                   const std::vector<double>& weight) {
  SparseFamily fam;
  fam.mesh = f.mesh;
  fam.weight = weight;
  if (!weight.empty() && static_cast<std::int64_t>(weight.size()) != f.mesh.cells())
    throw PreconditionError("one weight per cell");
  const int d = f.mesh.d, N = f.mesh.level;
  fam.add(mesh_root(f.mesh), -1);
  for (std::size_t s = 0; s < fam.members.size(); ++s) {
    const DyadicCube S = fam.members[s].cube;
    const double thr = factor * avg_abs(fam, f, E, box_of(fam, S));
    std::vector<DyadicCube> stack;
    if (S.level < N)
      for (auto& c : kids(S, d)) stack.push_back(c);
    std::reverse(stack.begin(), stack.end());
    while (!stack.empty()) {
      const DyadicCube Q = stack.back();
      stack.pop_back();
      if (avg_abs(fam, f, E, box_of(fam, Q)) > thr) {
        fam.add(Q, static_cast<int>(s));
      } else if (Q.level < N) {
        auto ks = kids(Q, d);
        for (auto it = ks.rbegin(); it != ks.rend(); ++it) stack.push_back(*it);
      }
    }
  }
  return fam;
}

SparseFamily random_sparse_family(const Mesh& mesh, Rng& rng, double density) {
  SparseFamily fam;
  fam.mesh = mesh;
  const int d = mesh.d, N = mesh.level;
  fam.add(mesh_root(mesh), -1);
  for (std::size_t s = 0; s < fam.members.size(); ++s) {
    const DyadicCube S = fam.members[s].cube;
    if (S.level >= N || rng.uniform() >= density) continue;
    const int t = 1 + static_cast<int>(rng.integer(0, std::min(2, N - S.level) - 1));
    const std::int64_t per = std::int64_t{1} << t;
    const std::int64_t total = std::int64_t{1} << (t * d);
    const std::int64_t count = rng.integer(1, total / 2);
    std::vector<std::int64_t> pick(static_cast<std::size_t>(total));
    for (std::int64_t q = 0; q < total; ++q) pick[static_cast<std::size_t>(q)] = q;
    for (std::int64_t q = 0; q < count; ++q) std::swap(pick[static_cast<std::size_t>(q)], pick[static_cast<std::size_t>(rng.integer(q, total - 1))]);
    std::sort(pick.begin(), pick.begin() + count);
    for (std::int64_t q = 0; q < count; ++q) {
      DyadicCube c;
      c.level = S.level + t;
      std::int64_t r = pick[static_cast<std::size_t>(q)];
      for (int a = 0; a < d; ++a) {
        c.corner[a] = S.corner[a] * per + r % per;
        r /= per;
      }
      fam.add(c, static_cast<int>(s));
    }
  }
  return fam;
}

CarlesonResult carleson_sum(const SparseFamily& fam, const GridFunction& f, double p, const NormedSpace& E) {
  if (!fam.is_sparse()) throw ContractViolation("family is not sparse");
  CarlesonResult r;
  double s = 0.0;
  for (const auto& m : fam.members) {
    const Box b = box_of(fam, m.cube);
    s += std::pow(avg_abs(fam, f, E, b), p) * fam.mu(b);
  }
  r.sum = std::pow(s, 1.0 / p);
  r.norm = lp_mu(fam, f, p, E);
  r.ratio = r.norm > 0 ? r.sum / r.norm : 0.0;
  r.stated_bound = 2.0 * conjugate(p);
  r.proof_bound = std::pow(2.0, 1.0 / p) * conjugate(p);
  return r;
}

GridFunction project_PS(const SparseFamily& fam, int s, const GridFunction& f) {
  if (s < 0 || s >= static_cast<int>(fam.members.size())) throw MembershipError("not a member of the family");
  const int d = fam.mesh.d, N = fam.mesh.level;
  GridFunction out(f.mesh, f.n);
  std::vector<DyadicCube> stack{fam.members[static_cast<std::size_t>(s)].cube};
  while (!stack.empty()) {
    const DyadicCube Q = stack.back();
    stack.pop_back();
    if (Q.level >= N) continue;
    const Box qb = box_of(fam, Q);
    const auto aq = avg_mu(fam, f, qb);
    for (const auto& c : kids(Q, d)) {
      const Box cb = box_of(fam, c);
      auto ac = avg_mu(fam, f, cb);
      for (int k = 0; k < f.n; ++k) ac[static_cast<std::size_t>(k)] -= aq[static_cast<std::size_t>(k)];
      fill(out, cb, ac, 1.0);
      if (fam.find(c) < 0) stack.push_back(c);
    }
  }
  return out;
}

GridFunction project_PS_closed(const SparseFamily& fam, int s, const GridFunction& f) {
  if (s < 0 || s >= static_cast<int>(fam.members.size())) throw MembershipError("not a member of the family");
  const auto& m = fam.members[static_cast<std::size_t>(s)];
  GridFunction out(f.mesh, f.n);
  for (int k : m.children) {
    const Box cb = box_of(fam, fam.members[static_cast<std::size_t>(k)].cube);
    fill(out, cb, avg_mu(fam, f, cb), 1.0);
  }
  const auto mask = fam.exceptional_mask(s);
  for (std::int64_t c = 0; c < f.mesh.cells(); ++c)
    if (mask[static_cast<std::size_t>(c)])
      for (int k = 0; k < f.n; ++k) out.at(c)[k] += f.at(c)[k];
  const Box sb = box_of(fam, m.cube);
  fill(out, sb, avg_mu(fam, f, sb), -1.0);
  return out;
}

PythagorasResult pythagoras_check(const SparseFamily& fam, const std::vector<GridFunction>& pieces, double p,
                                  const NormedSpace& E, PythagorasMode mode) {
  if (pieces.size() > fam.members.size()) throw PreconditionError("more pieces than members");
  GridFunction total(fam.mesh, E.n);
  double pp = 0.0;
  for (std::size_t s = 0; s < pieces.size(); ++s) {
    const GridFunction& g = pieces[s];
    if (g.v.empty()) continue;
    if (!(g.mesh == fam.mesh) || g.n != E.n) throw PreconditionError("piece on the wrong mesh");
    const auto& m = fam.members[s];
    const Box sb = box_of(fam, m.cube);
    for (std::int64_t c = 0; c < g.mesh.cells(); ++c) {
      const Coord x = g.mesh.cell_coord(c);
      bool in = true;
      for (int a = 0; a < g.mesh.d; ++a) in = in && x[a] >= sb.lo[a] && x[a] < sb.lo[a] + sb.len;
      if (in) continue;
      for (int k = 0; k < g.n; ++k)
        if (g.at(c)[k] != 0.0) throw PreconditionError("piece not supported on its cube");
    }
    for (int k : m.children) {
      const Box cb = box_of(fam, fam.members[static_cast<std::size_t>(k)].cube);
      const std::int64_t first = g.mesh.index_of(cb.lo);
      for_each_cell(g.mesh, cb, [&](std::int64_t c) {
        for (int q = 0; q < g.n; ++q)
          if (g.at(c)[q] != g.at(first)[q]) throw PreconditionError("piece not constant on a stopping child");
      });
    }
    if (mode == PythagorasMode::reverse_cancellative) {
      const auto mean = avg_mu(fam, g, sb);
      double scale = 0.0;
      for (double v : g.v) scale = std::max(scale, std::abs(v));
      for (double v : mean)
        if (std::abs(v) > 1e-12 * (1.0 + scale)) throw PreconditionError("piece is not cancellative");
    }
    if (mode == PythagorasMode::reverse_nonneg) {
      if (E.n != 1) throw PreconditionError("nonnegativity needs scalar values");
      for (double v : g.v)
        if (v < 0.0) throw PreconditionError("piece is negative somewhere");
    }
    total += g;
    pp += std::pow(lp_mu(fam, g, p, E), p);
  }
  PythagorasResult r;
  r.sum_norm = lp_mu(fam, total, p, E);
  r.pieces_norm = std::pow(pp, 1.0 / p);
  r.direct = r.pieces_norm > 0 ? r.sum_norm / r.pieces_norm : 0.0;
  r.reverse = r.sum_norm > 0 ? r.pieces_norm / r.sum_norm : (r.pieces_norm > 0 ? kInf : 0.0);
  if (mode == PythagorasMode::direct) {
    r.bound = 3.0 * p;
    r.pass = r.direct <= r.bound;
  } else {
    r.bound = 6.0 * conjugate(p);
    r.pass = r.reverse <= r.bound;
  }
  return r;
}

std::vector<GridFunction> random_sparse_pieces(const SparseFamily& fam, int n, Rng& rng, PythagorasMode mode) {
  std::vector<GridFunction> out;
  for (std::size_t s = 0; s < fam.members.size(); ++s) {
    GridFunction g(fam.mesh, n);
    const auto& m = fam.members[s];
    const double scale = std::ldexp(1.0, static_cast<int>(rng.integer(-3, 3)));
    auto draw = [&] { return mode == PythagorasMode::reverse_nonneg ? scale * rng.uniform() : scale * rng.normal(); };
    const auto mask = fam.exceptional_mask(static_cast<int>(s));
    for (std::int64_t c = 0; c < g.mesh.cells(); ++c)
      if (mask[static_cast<std::size_t>(c)])
        for (int k = 0; k < n; ++k) g.at(c)[k] = draw();
    for (int k : m.children) {
      std::vector<double> v(static_cast<std::size_t>(n));
      for (double& x : v) x = draw();
      fill(g, box_of(fam, fam.members[static_cast<std::size_t>(k)].cube), v, 1.0);
    }
    if (mode == PythagorasMode::reverse_cancellative) {
      const Box sb = box_of(fam, m.cube);
      fill(g, sb, avg_mu(fam, g, sb), -1.0);
    }
    out.push_back(std::move(g));
  }
  return out;
}

void write_ndjson(std::ostream& os, const SparseFamily& fam) {
  for (const auto& m : fam.members) {
    nlohmann::json j;
    j["level"] = m.cube.level;
    nlohmann::json c = nlohmann::json::array();
    for (int a = 0; a < fam.mesh.d; ++a) c.push_back(m.cube.corner[a]);
    j["corner"] = c;
    j["parent"] = m.parent;
    os << j.dump() << "\n";
  }
}

}  // namespace dyadiclab
