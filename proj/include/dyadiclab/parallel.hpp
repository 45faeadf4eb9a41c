#pragma once
// Execution policy plus a reduction whose result does not depend on the
// thread count: the index range is cut into fixed-size chunks, each chunk
// is summed serially, and chunk totals are combined in index order.

#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dyadiclab {

enum class Exec { serial, parallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

constexpr std::int64_t kReduceChunk = 1024;

template <class F>
double ordered_sum(std::int64_t n, F&& term, Exec ex = Exec::parallel) {
  if (n <= 0) return 0.0;
  const std::int64_t nchunks = (n + kReduceChunk - 1) / kReduceChunk;
  std::vector<double> part(static_cast<std::size_t>(nchunks), 0.0);
  auto chunk = [&](std::int64_t c) {
    const std::int64_t lo = c * kReduceChunk;
    const std::int64_t hi = lo + kReduceChunk < n ? lo + kReduceChunk : n;
    double s = 0.0;
    for (std::int64_t t = lo; t < hi; ++t) s += term(t);
    part[static_cast<std::size_t>(c)] = s;
  };
  if (ex == Exec::parallel && nchunks > 1) {
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < nchunks; ++c) chunk(c);
  } else {
    for (std::int64_t c = 0; c < nchunks; ++c) chunk(c);
  }
  double s = 0.0;
  for (double v : part) s += v;
  return s;
}

// max over terms; order-independent by nature
template <class F>
double ordered_max(std::int64_t n, F&& term, double init, Exec ex = Exec::parallel) {
  if (n <= 0) return init;
  std::vector<double> vals(static_cast<std::size_t>(n));
  if (ex == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t t = 0; t < n; ++t) vals[static_cast<std::size_t>(t)] = term(t);
  } else {
    for (std::int64_t t = 0; t < n; ++t) vals[static_cast<std::size_t>(t)] = term(t);
  }
  double m = init;
  for (double v : vals) m = v > m ? v : m;
  return m;
}

}  // namespace dyadiclab
