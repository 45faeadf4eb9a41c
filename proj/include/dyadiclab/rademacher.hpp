#pragma once
// Rademacher averages, R-bound witnesses and probes, Stein and UMD probes.
// R-bounds and UMD constants are suprema; everything here certifies them
// from below.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dyadiclab/function_space.hpp"
#include "dyadiclab/parallel.hpp"

namespace dyadiclab {

using Vec = std::vector<double>;

constexpr int kExhaustiveSignCap = 20;

struct SignEnsemble {
  bool exhaustive = true;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;

  static SignEnsemble all() { return {}; }
  static SignEnsemble monte_carlo(std::uint64_t trials, std::uint64_t seed) { return {false, trials, seed}; }
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

// (E |sum eps_n e_n|^p)^{1/p}
Estimate rademacher_pnorm(const std::vector<Vec>& elems, double p, const NormedSpace& E,
                          const SignEnsemble& ens, Exec ex = Exec::parallel);

struct OperatorFamily {
  std::vector<Eigen::MatrixXd> ops;
  std::vector<std::string> labels;

  int dim() const { return ops.empty() ? 0 : static_cast<int>(ops.front().rows()); }
  static OperatorFamily scalars(const std::vector<double>& t);
};

using Assignment = std::vector<std::pair<int, Vec>>;

// (E|sum eps T_{k_n} e_n|^p / E|sum eps e_n|^p)^{1/p}
double rbound_witness(const OperatorFamily& fam, const Assignment& asg, double p, const NormedSpace& E,
                      const SignEnsemble& ens = SignEnsemble::all());

// best witness found in `budget` seeded trials; trial t only depends on
// (seed, t), so the value is monotone in the budget
double rbound_probe(const OperatorFamily& fam, double p, const NormedSpace& E, int budget, std::uint64_t seed);

// operator norm of T on E by search (exact for l^2 via SVD)
double operator_norm(const Eigen::MatrixXd& T, const NormedSpace& E, int budget, std::uint64_t seed);

struct SteinResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool pass = false;
};

// || sum eps_k E[f_k | level_k] ||  against  || sum eps_k f_k ||, Rademacher
// averages on both sides, levels nondecreasing
SteinResult stein_check(const std::vector<GridFunction>& fs, const std::vector<int>& levels, double p,
                        const NormedSpace& E, double beta_ref);

struct UmdProbe {
  double ratio = 0.0;
  std::vector<int> best_signs;
};

// max over sampled Paley-Walsh martingales on [0,1) of depth `depth` and
// all sign patterns of ||sum eps_k d_k||_p / ||sum d_k||_p
UmdProbe umd_probe(const NormedSpace& E, double p, int depth, int samples, std::uint64_t seed,
                   Exec ex = Exec::parallel);

// property probes for the R-bound calculus
struct CalculusResult {
  double witness = 0.0;  // best witness of the derived family
  double bound = 0.0;    // probe value(s) it must not exceed
  bool pass = false;
};

// pointwise family {L_s(x)}: pointwise[s][x]; weights lambda[s][x] with
// sum_x |lambda_s(x)| cell_weight[x] <= 1
CalculusResult averaging_check(const std::vector<std::vector<Eigen::MatrixXd>>& pointwise,
                               const std::vector<std::vector<double>>& lambda,
                               const std::vector<double>& cell_weight, double p, const NormedSpace& E,
                               int budget, std::uint64_t seed);

CalculusResult triangle_check(const OperatorFamily& M, const OperatorFamily& L, double p, const NormedSpace& E,
                              int budget, std::uint64_t seed);

}  // namespace dyadiclab
