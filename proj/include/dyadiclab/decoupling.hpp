#pragma once
// Atom hierarchies on a finite weighted ground set, cancellative adapted
// families f_K, the auxiliary tables u_K / v_K, decoupled Rademacher norms
// and the bound on sums of independent conditional expectations.

#include <cstdint>
#include <vector>

#include "dyadiclab/function_space.hpp"
#include "dyadiclab/parallel.hpp"
#include "dyadiclab/rademacher.hpp"

namespace dyadiclab {

struct Atom {
  int level = 0;
  int parent = -1;
  std::vector<int> children;  // sorted by corner
  std::vector<std::int64_t> corner;  // path of child indices from the root
  int pos = 0;  // index in the parent's child list
  std::int64_t lo = 0, hi = 0;  // ground cells [lo, hi)
  double mu = 0.0;
};

struct AtomHierarchy {
  std::vector<double> cell_mu;
  std::vector<Atom> atoms;  // atoms[0] is the whole ground set; parents first
  int depth = 0;            // leaves sit at this level, one cell each
  std::vector<int> chain;   // [cell * (depth + 1) + level] -> atom

  std::int64_t cells() const { return static_cast<std::int64_t>(cell_mu.size()); }
  // atom of `level` containing cell c
  int atom_of(std::int64_t c, int level) const;
  std::vector<int> atoms_at(int level) const;
  // recompute chain after editing atoms by hand
  void rebuild_chain();

  // 2..max_children children per atom, positive random weights
  static AtomHierarchy random(Rng& rng, int depth, int max_children = 4);
  // dyadic intervals of [0,1) with Lebesgue measure
  static AtomHierarchy dyadic(int depth);
};

// f_K per non-leaf atom: one value (n components) per child, zero mu-mean on K
struct AdaptedFamily {
  const AtomHierarchy* h = nullptr;
  int n = 1;
  std::vector<std::vector<double>> f;  // atom -> [child][component]; empty = 0

  std::vector<double> sum() const;  // sum_K f_K(x) per cell
  const double* value(int atom, int child_pos) const { return f[static_cast<std::size_t>(atom)].data() + child_pos * n; }
};

AdaptedFamily random_adapted_family(const AtomHierarchy& h, int n, Rng& rng, double density = 1.0);

double family_lp(const AdaptedFamily& fam, double p, const NormedSpace& E);

// (E_eps E_y || sum_K eps_K 1_K(x) f_K(y_K) ||^p_{L^p(mu x nu)})^{1/p}; the
// sign ensemble also selects exhaustive or sampled y
Estimate decoupled_pnorm(const AdaptedFamily& fam, double p, const NormedSpace& E,
                         const SignEnsemble& ens = SignEnsemble::all(), Exec ex = Exec::parallel);

struct UVTable {
  int m = 0;             // children of K
  std::vector<double> u;  // [A][B][component], x in A, y_K in B
  std::vector<double> v;
};

struct UVTables {
  int n = 1;
  std::vector<UVTable> per_atom;  // empty table where f_K vanishes
};

UVTables construct_uv(const AdaptedFamily& fam);

struct MdsReport {
  double local_mean = 0.0;    // max |int u_K dmu dnu_K|
  double local_odd = 0.0;     // max |int v_K Phi(u_K) dmu dnu_K|
  double filtration = 0.0;    // max over full-history test functions
  double recovery = 0.0;      // max |u + v - d|, |u - v - d~|
  double worst() const;
};

MdsReport check_mds(const AdaptedFamily& fam, const UVTables& uv, int test_functions, std::uint64_t seed);

struct DecouplingResult {
  double norm = 0.0;       // ||sum f_K||_p
  double decoupled = 0.0;
  double beta = 0.0;
  bool pass = false;
};

DecouplingResult decoupling_check(const AdaptedFamily& fam, double p, const NormedSpace& E);

// one finite probability space with a partition G_n and an E-valued f_n
struct FiniteFactor {
  std::vector<double> prob;
  std::vector<int> block;  // G_n block of every point
  std::vector<double> f;   // [point][component]
};

FiniteFactor random_factor(Rng& rng, int points, int n);

struct CondExpResult {
  double lhs = 0.0;  // || sum E[f_n | G_n] ||_p
  double rhs = 0.0;  // || sum f_n ||_p
  double ratio = 0.0;
};

CondExpResult condexp_sum_check(const std::vector<FiniteFactor>& factors, double p, const NormedSpace& E);

}  // namespace dyadiclab
