#pragma once
// Stopping-time sparse families, the Carleson embedding, the projections P_S
// and the Pythagoras-type estimates.

#include <iosfwd>
#include <limits>
#include <map>
#include <vector>

#include "dyadiclab/function_space.hpp"

namespace dyadiclab {

struct SparseMember {
  DyadicCube cube;
  int parent = -1;
  std::vector<int> children;
};

struct SparseFamily {
  Mesh mesh;                   // covers the root cube Q0
  std::vector<double> weight;  // per-cell density of mu; empty = Lebesgue
  std::vector<SparseMember> members;  // members[0] is Q0, parents precede children
  std::map<DyadicCube, int> index;

  const DyadicCube& root() const { return members.front().cube; }
  int find(const DyadicCube& c) const;  // -1 if absent
  int add(const DyadicCube& c, int parent);

  double mu(const Box& b) const;
  double mu(const DyadicCube& c) const;
  // mu(E_S(S)) = mu(S) - sum of mu over the stopping children
  double mu_exceptional(int s) const;
  // cell mask of E_S(S)
  std::vector<char> exceptional_mask(int s) const;

  // minimal member containing Q (Q inside Q0)
  int pi(const DyadicCube& Q) const;

  // smallest mu(E_S(S)) / mu(S) over members
  double sparseness() const;
  bool is_sparse(double eta = 0.5) const { return sparseness() >= eta; }
};

// Children of S are the maximal dyadic S' in S with <|f|>_{S'} > factor <|f|>_S,
// iterated from Q0.  Averages are taken against the family measure.
SparseFamily build_stopping_family(const GridFunction& f, const NormedSpace& E, double factor = 2.0,
                                   const std::vector<double>& weight = {});

// seeded sparse family with mu(children) <= mu(S)/2, Lebesgue measure
SparseFamily random_sparse_family(const Mesh& mesh, Rng& rng, double density = 0.6);

struct CarlesonResult {
  double sum = 0.0;    // (sum_S <|f|>_S^p mu(S))^{1/p}
  double norm = 0.0;   // ||f||_{L^p(mu)} on Q0
  double ratio = 0.0;
  double stated_bound = 0.0;  // 2 p'
  double proof_bound = 0.0;   // 2^{1/p} p'
};

CarlesonResult carleson_sum(const SparseFamily& fam, const GridFunction& f, double p, const NormedSpace& E);

// P_S f = sum over pi(Q) = S of D_Q f, summed cube by cube
GridFunction project_PS(const SparseFamily& fam, int s, const GridFunction& f);
// the closed form sum_{S'} <f>_{S'} 1_{S'} + f 1_{E_S(S)} - <f>_S 1_S
GridFunction project_PS_closed(const SparseFamily& fam, int s, const GridFunction& f);

enum class PythagorasMode { direct, reverse_cancellative, reverse_nonneg };

struct PythagorasResult {
  double sum_norm = 0.0;     // ||sum_S f_S||_p
  double pieces_norm = 0.0;  // (sum_S ||f_S||_p^p)^{1/p}
  double direct = 0.0;       // sum_norm / pieces_norm
  double reverse = 0.0;      // pieces_norm / sum_norm (inf when the sum vanishes)
  double bound = 0.0;        // 3p or 6p'
  bool pass = false;
};

// pieces[k] belongs to member k (missing or empty entries are zero)
PythagorasResult pythagoras_check(const SparseFamily& fam, const std::vector<GridFunction>& pieces, double p,
                                  const NormedSpace& E, PythagorasMode mode);

// random f_S supported on S and constant on the stopping children of S
std::vector<GridFunction> random_sparse_pieces(const SparseFamily& fam, int n, Rng& rng, PythagorasMode mode);

// one JSON object per line: level, corner, parent
void write_ndjson(std::ostream& os, const SparseFamily& fam);

}  // namespace dyadiclab
