#pragma once
// Dyadic cubes in standard and randomly translated systems, and the
// good-cube geometry.
//
// A cube is labelled by (level k, corner m).  In a system with translation
// bits omega its geometry is  m*2^-k + sum_{k<j<=N} omega_j 2^-j , so the
// label of I+omega is the label of the standard cube I.  All positions are
// kept as integers in units of 2^-N.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dyadiclab/rng.hpp"

namespace dyadiclab {

constexpr int kMaxDim = 3;
using Coord = std::array<std::int64_t, kMaxDim>;

struct DyadicCube {
  int level = 0;
  Coord corner{};

  friend bool operator==(const DyadicCube& a, const DyadicCube& b) {
    return a.level == b.level && a.corner == b.corner;
  }
  friend bool operator<(const DyadicCube& a, const DyadicCube& b) {
    if (a.level != b.level) return a.level < b.level;
    return a.corner < b.corner;
  }
  std::string str(int d) const;
};

// Axis-aligned cube [lo, lo+len)^d in integer units of 2^-unit_level.
struct Box {
  int d = 1;
  Coord lo{};
  std::int64_t len = 1;
  bool contains(const Box& o) const;
  bool intersects(const Box& o) const;
};

struct GeomCube {
  int d = 1;
  std::array<double, kMaxDim> lo{}, hi{};
};

class DyadicSystem {
 public:
  DyadicSystem() = default;
  DyadicSystem(int d, int m_top, int n_depth);

  static DyadicSystem standard(int d, int m_top, int n_depth) { return {d, m_top, n_depth}; }
  static DyadicSystem random(int d, int m_top, int n_depth, Rng& rng);
  // bit b of mask is omega_j on axis a with b = (j - first_scale())*d + a
  static DyadicSystem from_mask(int d, int m_top, int n_depth, std::uint64_t mask);

  int dim() const { return d_; }
  int top() const { return -m_top_; }
  int m_top() const { return m_top_; }
  int depth() const { return n_; }
  int first_scale() const { return -m_top_ + 1; }
  int bit_count() const { return (n_ + m_top_) * d_; }

  int omega(int j, int axis) const;
  void set_omega(int j, int axis, int bit);

  // sum_{k<j<=N} omega_j 2^{N-j} on one axis
  std::int64_t shift_units(int level, int axis) const;

  Box box(const DyadicCube& c) const;
  GeomCube geometry(const DyadicCube& c) const;

  // geometric translate of a standard cube; throws RangeError outside the
  // translated ambient
  GeomCube translate(const DyadicCube& standard_cube) const;

  bool in_range(const DyadicCube& c) const;
  void require(const DyadicCube& c) const;

  std::vector<DyadicCube> children(const DyadicCube& c) const;
  DyadicCube parent(const DyadicCube& c) const;
  DyadicCube ancestor(const DyadicCube& c, int levels_up) const;
  DyadicCube common_ancestor(const DyadicCube& a, const DyadicCube& b) const;
  bool contains(const DyadicCube& outer, const DyadicCube& inner) const;

  // cube of this system at `level` containing the fine cell with lower
  // corner `p` (units 2^-N)
  DyadicCube locate(int level, const Coord& p) const;

  // all cubes at `level` intersecting the box (units 2^-N)
  std::vector<DyadicCube> cubes_meeting(int level, const Box& b) const;

 private:
  int d_ = 1;
  int m_top_ = 0;
  int n_ = 0;
  std::vector<std::array<std::uint8_t, kMaxDim>> bits_;  // index j - first_scale()
};

struct GoodnessParams {
  double gamma = 0.5;
  int r = 1;
  int max_gap = 64;                        // ancestors at most this many generations up
  std::optional<int> max_ancestor_level;  // coarsest inspected level (absolute)
};

constexpr double kGoodTol = 1e-12;

bool is_good(const DyadicSystem& sys, const DyadicCube& c, const GoodnessParams& gp);

double goodness_bound(double gamma, int r, int d);

struct GoodnessProbability {
  std::uint64_t good = 0;
  std::uint64_t total = 0;
  double probability = 0.0;
  double analytic_bound = 0.0;
  int bits = 0;
};

// Exhaustive enumeration of the bits that decide goodness of the standard
// cube `base` (scales between the coarsest inspected ancestor and the cube).
GoodnessProbability goodness_probability(const GoodnessParams& gp, int d,
                                         const DyadicCube& base, int cap_bits = 24);
GoodnessProbability goodness_probability(const GoodnessParams& gp, int d, int cap_bits = 24);

// Joint law of (position of base+omega, goodness) under enumeration of the
// goodness bits plus `position_bits` finer scales.
struct GoodnessJoint {
  std::vector<std::uint64_t> good_by_pos, total_by_pos;
  std::uint64_t good = 0, total = 0;
  bool factorizes = false;
};
GoodnessJoint goodness_joint(const GoodnessParams& gp, int d, const DyadicCube& base,
                             int position_bits, int cap_bits = 24);

double goodness_probability_mc(const GoodnessParams& gp, int d, std::uint64_t samples,
                               std::uint64_t seed);

}  // namespace dyadiclab
