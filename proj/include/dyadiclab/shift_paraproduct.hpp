#pragma once
// Averaging blocks A_K, dyadic shifts S^{ji} = sum_K D^j_K A_K D^i_K, the
// mod-L scale classes, paraproducts Pi_b f = sum_Q D_Q b <f>_Q and measured
// operator-norm ratios.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dyadiclab/function_space.hpp"
#include "dyadiclab/parallel.hpp"

namespace dyadiclab {

// a_K on K x K, constant on subcubes `res` levels below K.
// Entry (x, x') is an n x n block stored row-major.
struct KernelTable {
  int d = 1;
  int res = 1;
  int n = 1;
  std::vector<double> a;

  std::int64_t subcells() const { return std::int64_t{1} << (res * d); }
  double* block(std::int64_t x, std::int64_t xp) { return a.data() + (x * subcells() + xp) * n * n; }
  const double* block(std::int64_t x, std::int64_t xp) const { return a.data() + (x * subcells() + xp) * n * n; }
  double max_abs() const;
};

struct ShiftSpec {
  int i = 0, j = 0;
  int d = 1;
  int n = 1;              // value dimension; kernels are n x n
  DyadicCube root;        // standard cube carrying the system top
  int kmin = 0, kmax = -1;  // K levels; kmax < kmin means "all resolvable"
  std::uint64_t kernel_seed = 0;
  double r_cap = 1.0;
  bool sign_kernel = false;  // draw +-r_cap instead of uniform values (scalar)
  std::map<DyadicCube, KernelTable> tables;  // explicit kernels override the generator

  int complexity() const { return std::max(i, j) + 1; }
  int resolution() const { return std::max(i, j) + 1; }
};

// level range actually summed for a given mesh
std::pair<int, int> shift_levels(const ShiftSpec& s, const Mesh& m);

// kernel of cube K: explicit table or seeded draw (stream keyed by K)
KernelTable shift_kernel(const ShiftSpec& s, const DyadicCube& K);

// A_K f for one cube; the kernel is read at its own resolution
GridFunction apply_averaging(const DyadicCube& K, const KernelTable& a, const GridFunction& f);

GridFunction apply_shift(const ShiftSpec& s, const GridFunction& f, Exec ex = Exec::parallel);
// sum_K D^i_K A_K^T D^j_K g
GridFunction apply_shift_adjoint(const ShiftSpec& s, const GridFunction& g, Exec ex = Exec::parallel);
// composition of the generic projections; slow, used as the test reference
GridFunction apply_shift_reference(const ShiftSpec& s, const GridFunction& f);

// level k -> class (k mod L)
std::vector<std::vector<DyadicCube>> mod_L_partition(const std::vector<DyadicCube>& cubes, int L);

struct ParaproductSpec {
  GridFunction b;  // 1 component (scalar symbol) or n*n components (matrix symbol)
  int n = 1;       // dimension of the functions it acts on
  int kmin = 0;
  int kmax = -1;   // Q levels; kmax < kmin means down to mesh level - 1
};

GridFunction apply_paraproduct(const ParaproductSpec& s, const GridFunction& f, Exec ex = Exec::parallel);
// direct sum over cubes; test reference
GridFunction apply_paraproduct_reference(const ParaproductSpec& s, const GridFunction& f);

using LinearOp = std::function<GridFunction(const GridFunction&)>;

struct RatioResult {
  double max_ratio = 0.0;
  std::size_t argmax = 0;
  std::vector<double> ratios;
};

RatioResult operator_ratio(const LinearOp& op, const std::vector<GridFunction>& samples, double p,
                           const NormedSpace& E);

// scalar paraproduct constant 12 p p' (max{p,p'} - 1)
inline double paraproduct_constant(double p) { return 12.0 * p * conjugate(p) * beta_real(p); }
// scalar shift constant 4 (max{i,j}+1) (max{p,p'}-1)^2
inline double shift_constant(int i, int j, double p) {
  const double b = beta_real(p);
  return 4.0 * (std::max(i, j) + 1) * b * b;
}

std::string shift_spec_to_json(const ShiftSpec& s);
ShiftSpec shift_spec_from_json(const std::string& text);
std::string paraproduct_spec_to_json(const ParaproductSpec& s);
ParaproductSpec paraproduct_spec_from_json(const std::string& text);

}  // namespace dyadiclab
