#pragma once
// Haar matrix elements of kernel operators, paraproduct extraction, the
// assembled shift kernels a^{ij}_K, decay of the five coefficient cases,
// and the random-grid averaging identity.
//
// Kernels are convolution profiles K(x - y) on the line times a fixed n x n
// matrix.  For the odd profiles provided here the double integral over a
// pair of intervals has a closed form through psi'' = K, which is also the
// principal value on overlapping intervals.  An operator is either dense
// (cell-pair matrix, any d) or matrix-free on top of a kernel (d = 1).

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dyadiclab/dyadic_grid.hpp"
#include "dyadiclab/function_space.hpp"
#include "dyadiclab/parallel.hpp"
#include "dyadiclab/shift_paraproduct.hpp"

namespace dyadiclab {

struct CzKernel {
  std::string name = "zero";
  int n = 1;
  double alpha = 1.0;
  double c0 = 0.0;
  double c_alpha = 0.0;
  std::optional<double> cutoff;
  bool antisymmetric = true;
  std::function<double(double)> profile;  // K(t)
  std::function<double(double)> psi;      // psi'' = K, odd
  std::vector<double> matrix;             // n x n row-major; empty means the scalar 1

  // int_a^b int_c^d K(x - y) dy dx
  double interval_pair(double a, double b, double c, double d) const;
  double matrix_entry(int r, int c) const;

  static CzKernel zero();
  // 1/(x - y), optionally cut off at |x - y| >= radius
  static CzKernel hilbert(std::optional<double> cutoff = {});
  // t (1 - t^2/R^2)^2 on |t| < R: smooth, odd, compactly supported
  static CzKernel smooth_odd(double radius);
  CzKernel with_matrix(int n, std::vector<double> m) const;

  std::string to_json() const;
};

struct CzConstants {
  double c0 = 0.0;       // sup |k| |x - y|^d
  double c_alpha = 0.0;  // sup of both Hoelder quotients
};

// scalar profile only; samples admissible triples at all scales
CzConstants measure_cz_constants(const CzKernel& k, int samples, std::uint64_t seed);

// step function: sum of weight * 1_box, boxes in mesh units
struct Piece {
  Box box;
  double weight = 0.0;
};
using Step = std::vector<Piece>;

Step haar_step(const Box& I, unsigned eta, int unit_level);

struct DiscreteOperator {
  Mesh mesh;
  int n = 1;
  // dense: [x][y] blocks <1_x e_r, T 1_y e_c>, empty when matrix-free
  std::vector<double> w;
  std::optional<CzKernel> kernel;
  double diag = 0.0;  // value of the free diagonal blocks (times |cell| and the kernel matrix)

  bool dense() const { return !w.empty(); }
  const double* block(std::int64_t x, std::int64_t y) const { return w.data() + (x * mesh.cells() + y) * n * n; }

  static DiscreteOperator from_kernel(const CzKernel& k, const Mesh& m, bool assemble = true, double diag = 0.0);
  static DiscreteOperator from_matrix(const Mesh& m, int n, std::vector<double> w);
  static DiscreteOperator identity(const Mesh& m, int n = 1);

  DiscreteOperator adjoint() const;
  // cell averages of T f
  GridFunction apply(const GridFunction& f) const;
  // <g, T f> for step functions, as an n x n block
  std::vector<double> pair(const Step& g, const Step& f) const;
  // <g, T f> for grid functions
  double bilinear(const GridFunction& g, const GridFunction& f) const;
  // T applied to 1 on the mesh, as a symbol with 1 or n*n components
  GridFunction apply_to_one() const;
};

enum class Convention { raw, extracted };

// <h_J^etaJ, T h_I^etaI>; the extracted convention subtracts <h_J>_{J_I} <1, T h_I>
// when I is strictly inside J and <h_I>_{I_J} <h_J, T 1> when J is strictly inside I
std::vector<double> matrix_element(const DiscreteOperator& T, const Box& J, unsigned etaJ, const Box& I,
                                   unsigned etaI, Convention conv = Convention::raw);
std::vector<double> matrix_element(const DiscreteOperator& T, const DyadicCube& J, unsigned etaJ,
                                   const DyadicCube& I, unsigned etaI, Convention conv = Convention::raw);

// midpoint cell quadrature of one element at the mesh resolution and 4x finer
struct QuadratureCheck {
  double coarse = 0.0, fine = 0.0, closed = 0.0;
  bool under_resolved = false;  // |coarse - fine| > 1e-6
};
QuadratureCheck quadrature_check(const CzKernel& k, const Mesh& m, const DyadicCube& J, unsigned etaJ,
                                 const DyadicCube& I, unsigned etaI);

struct ParaproductCoefficient {
  DyadicCube cube;
  unsigned eta = 1;
  std::vector<double> t1;      // <h_I, T 1>
  std::vector<double> tstar1;  // <1, T h_I>
};

struct ExtractedParaproducts {
  ParaproductSpec t1;      // Pi_{T1}, symbol T 1
  ParaproductSpec tstar1;  // Pi_{T*1}, symbol T* 1
  std::vector<ParaproductCoefficient> coeffs;
};

ExtractedParaproducts extract_paraproducts(const DiscreteOperator& T, int kmin, int kmax);

struct ExtractionReport {
  double raw = 0.0;        // <g, T f>
  double haar_raw = 0.0;   // sum over all (I, J) of raw elements
  double extracted = 0.0;  // same with the extracted convention
  double pi_t1 = 0.0;      // <g, Pi_{T1} f>
  double pi_tstar1 = 0.0;  // <Pi_{T*1} g, f>
  double residual = 0.0;   // raw - extracted - pi_t1 - pi_tstar1
};

// f, g mean zero on the mesh root; all levels of the mesh
ExtractionReport extraction_identity(const DiscreteOperator& T, const GridFunction& g, const GridFunction& f);

// a^{ij}_K on K x K at resolution max(i, j) + 1, smaller cube good in `sys`
KernelTable shift_coefficients(const DiscreteOperator& T, const DyadicSystem& sys, const DyadicCube& K, int i,
                               int j, const GoodnessParams& gp, Convention conv = Convention::extracted);

// sum over the same (I, J) of <g, h_J> <h_J, T h_I> <h_I, f>
double shift_partial_sum(const DiscreteOperator& T, const DyadicSystem& sys, const DyadicCube& K, int i, int j,
                         const GoodnessParams& gp, const GridFunction& g, const GridFunction& f,
                         Convention conv = Convention::extracted);

enum class DecayCase { far_disjoint, near_disjoint, deeply_nested, shallowly_nested, equal };
const char* decay_case_name(DecayCase c);

struct DecayResult {
  DecayCase which = DecayCase::far_disjoint;
  std::vector<int> i;
  std::vector<double> max_magnitude;  // max over K, j, pairs of |a^{ij}_K|
  std::vector<std::int64_t> pairs;    // contributing (I, J) pairs per i
  double slope = 0.0;                 // log2 fit, decaying cases
  double target = 0.0;
  double constant = 0.0;              // max magnitude, bounded cases
  bool pass = false;
};

struct DecayOptions {
  int i_min = 0, i_max = 0;
  int k_max = 0;           // K levels 0..k_max, cubes inside [0,1)
  bool require_good = true;
  Exec exec = Exec::parallel;
};

// throws InsufficientData when fewer than 3 i values carry coefficients
DecayResult decay_check(const DiscreteOperator& T, const DyadicSystem& sys, DecayCase which,
                        const GoodnessParams& gp, const DecayOptions& opt);

struct RepresentationConfig {
  GoodnessParams gp;
  double epsilon = 0.5;
  int m_top = 4;
  int exhaustive_bits = 20;
  std::uint64_t mc_samples = 4096;
  std::uint64_t seed = 0;
  Exec exec = Exec::parallel;

  static double default_gamma(double epsilon, double alpha, int d) { return epsilon * alpha / (alpha + d); }
};

struct AveragingReport {
  double lhs = 0.0;          // <g, T f>
  double rhs = 0.0;          // pi_good^{-1} E_omega sum over smaller-good pairs
  double residual = 0.0;     // lhs - rhs
  double relative = 0.0;     // |residual| / |lhs|
  double remainder = 0.0;    // E_omega (lhs - unrestricted sum): coarse levels beyond the ambient
  double full_sum_omega0 = 0.0;  // unrestricted sum in the standard grid
  double pi_good = 0.0;
  double std_error = 0.0;    // Monte Carlo only
  std::uint64_t grids = 0;
  bool exhaustive = true;
};

// d = 1; f, g on Mesh::unit(1, N), mean zero; T kernel-backed
AveragingReport averaging_identity(const DiscreteOperator& T, const GridFunction& f, const GridFunction& g,
                                   const RepresentationConfig& cfg);

struct WbpResult {
  std::vector<double> values;  // scalar case: <1_I, T 1_I>/|I| per cube, levels kmin..N
  double max_abs = 0.0;
  double rbound = 0.0;         // matrix case: witness R-bound of the family (p = 2, l^2)
};

WbpResult wbp_constants(const DiscreteOperator& T, int kmin);

struct CoefficientRow {
  int i = 0, j = 0;
  DyadicCube K;
  std::vector<double> values;  // magnitude, or matrix entries
};

void write_coefficients_csv(std::ostream& os, int d, const std::vector<CoefficientRow>& rows);

}  // namespace dyadiclab
