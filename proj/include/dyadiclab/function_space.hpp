#pragma once
// Piecewise-constant functions on a uniform dyadic mesh with values in a
// finite-dimensional normed space: Haar analysis/synthesis, martingale
// projections, L^p norms, pairings and the BMO_p norm.

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "dyadiclab/dyadic_grid.hpp"
#include "dyadiclab/rng.hpp"

namespace dyadiclab {

constexpr double kInf = std::numeric_limits<double>::infinity();

// l^q on R^n, or a user norm (then dual_norm is unavailable).
struct NormedSpace {
  int n = 1;
  double q = 2.0;
  std::function<double(const double*)> custom;

  static NormedSpace scalar() { return {1, 2.0, {}}; }
  static NormedSpace lq(int n, double q) { return {n, q, {}}; }

  double norm(const double* v) const;
  double dual_norm(const double* v) const;
  std::string describe() const;
};

inline double conjugate(double p) {
  if (p == 1.0) return kInf;
  if (p == kInf) return 1.0;
  return p / (p - 1.0);
}

// max{p, p'} - 1, the UMD constant of the real line
inline double beta_real(double p) { return std::max(p, conjugate(p)) - 1.0; }

struct Mesh {
  int d = 1;
  int level = 0;          // finest level N; cells have side 2^-N
  Coord origin{};         // lower corner of the first cell, units 2^-N
  std::int64_t side = 1;  // cells per axis

  // mesh covering the standard cube `root`, resolved down to level `depth`
  static Mesh over_cube(int d, const DyadicCube& root, int depth);
  static Mesh unit(int d, int depth) { return over_cube(d, DyadicCube{}, depth); }

  std::int64_t cells() const;
  double cell_volume() const;
  Box bounds() const;
  Coord cell_coord(std::int64_t idx) const;  // absolute, units 2^-N
  std::int64_t index_of(const Coord& abs_cell) const;
  bool operator==(const Mesh& o) const;
};

// Box of a standard cube in units of 2^-unit_level.
Box standard_box(int d, const DyadicCube& c, int unit_level);

template <class F>
void for_each_cell(const Mesh& m, const Box& b, F&& fn) {
  Coord rel{};
  for (int a = 0; a < m.d; ++a) rel[a] = b.lo[a] - m.origin[a];
  std::int64_t stride[kMaxDim] = {1, 1, 1};
  for (int a = 1; a < m.d; ++a) stride[a] = stride[a - 1] * m.side;
  if (m.d == 1) {
    for (std::int64_t x = 0; x < b.len; ++x) fn(rel[0] + x);
  } else if (m.d == 2) {
    for (std::int64_t y = 0; y < b.len; ++y) {
      const std::int64_t row = (rel[1] + y) * stride[1] + rel[0];
      for (std::int64_t x = 0; x < b.len; ++x) fn(row + x);
    }
  } else {
    for (std::int64_t z = 0; z < b.len; ++z)
      for (std::int64_t y = 0; y < b.len; ++y) {
        const std::int64_t row = (rel[2] + z) * stride[2] + (rel[1] + y) * stride[1] + rel[0];
        for (std::int64_t x = 0; x < b.len; ++x) fn(row + x);
      }
  }
}

struct GridFunction {
  Mesh mesh;
  int n = 1;
  std::vector<double> v;  // cell-major, n components per cell

  GridFunction() = default;
  GridFunction(const Mesh& m, int comps) : mesh(m), n(comps), v(static_cast<std::size_t>(m.cells() * comps), 0.0) {}

  double* at(std::int64_t cell) { return v.data() + cell * n; }
  const double* at(std::int64_t cell) const { return v.data() + cell * n; }

  GridFunction& operator+=(const GridFunction& o);
  GridFunction& operator-=(const GridFunction& o);
  GridFunction& operator*=(double s);

  // bounding box of nonzero cells; len 0 when identically zero
  Box support() const;

  static GridFunction random(const Mesh& m, int comps, Rng& rng);
  static GridFunction indicator(const Mesh& m, const Box& b, double value = 1.0);
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(double s, GridFunction a);

// Haar functions: h_I = |I|^{-1/2}(1_left - 1_right), h^0_I = |I|^{-1/2} 1_I,
// tensorised over axes.  eta bit a selects the oscillating factor on axis a.
double haar_eval(int d, const DyadicCube& I, unsigned eta, const std::array<double, kMaxDim>& x);
GridFunction haar_function(const Mesh& m, const Box& I, unsigned eta);

// sign of h^eta on child number e (bit a of e set = upper half on axis a)
inline int haar_sign(unsigned eta, unsigned e) {
  return (__builtin_popcount(eta & e) & 1) ? -1 : 1;
}

std::vector<double> integral(const GridFunction& f, const Box& b);
std::vector<double> average(const GridFunction& f, const Box& b);
std::vector<double> average(const GridFunction& f, const DyadicCube& I);

struct HaarCoefficients {
  Mesh mesh;
  int n = 1;
  int kmin = 0;  // coarsest analysed level
  int kmax = 0;  // finest analysed level (= mesh level - 1)
  // level index -> [cube][eta-1][component]
  std::vector<std::vector<double>> data;
  std::vector<double> coarse;  // averages on the level-kmin cubes

  std::int64_t cubes_per_axis(int level) const;
  const double* coeff(int level, std::int64_t cube, unsigned eta) const;
  double* coeff(int level, std::int64_t cube, unsigned eta);
  std::int64_t cube_index(const DyadicCube& c) const;
  DyadicCube cube_at(int level, std::int64_t idx) const;
};

HaarCoefficients analyze(const GridFunction& f, int kmin);
GridFunction synthesize(const HaarCoefficients& c);

GridFunction project_D(const GridFunction& f, const Box& I);
GridFunction project_D(const GridFunction& f, const DyadicCube& I);
GridFunction project_Di(const GridFunction& f, const Box& K, int i);
GridFunction project_Di(const GridFunction& f, const DyadicCube& K, int i);
// adds D_I f into out (same mesh)
void add_project_D(const GridFunction& f, const Box& I, GridFunction& out);

// E[f | level-k standard cubes]
GridFunction cond_expect(const GridFunction& f, int level);

double lp_norm(const GridFunction& f, double p, const NormedSpace& E);
double lp_norm(const GridFunction& f, double p);  // l^2 values
double pair(const GridFunction& g, const GridFunction& f);
double linf_diff(const GridFunction& a, const GridFunction& b);

// sup over standard cubes of the mesh at levels >= kmin, plus ancestors of
// the mesh cube up to `top_level` (b vanishes outside the mesh)
double bmo_norm(const GridFunction& b, double p, const NormedSpace& T, int kmin, int top_level);
double bmo_norm(const GridFunction& b, double p, const NormedSpace& T, int kmin);

void write_csv(std::ostream& os, const GridFunction& f);
GridFunction read_csv(std::istream& is);
void write_binary(std::ostream& os, const GridFunction& f);
GridFunction read_binary(std::istream& is);

}  // namespace dyadiclab
