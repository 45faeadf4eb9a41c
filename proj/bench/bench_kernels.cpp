// Serial reference vs OpenMP kernels.  Arg 0 runs serial, 1 parallel.

#include <benchmark/benchmark.h>

#include "dyadiclab/decoupling.hpp"
#include "dyadiclab/rademacher.hpp"
#include "dyadiclab/representation.hpp"
#include "dyadiclab/shift_paraproduct.hpp"

using namespace dyadiclab;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::parallel : Exec::serial; }

void label(benchmark::State& st) {
  st.SetLabel(st.range(0) ? "parallel x" + std::to_string(max_threads()) : "serial");
}

void BM_apply_shift(benchmark::State& st) {
  const Mesh m = Mesh::unit(2, 7);
  Rng rng(1, "bench-shift");
  const auto f = GridFunction::random(m, 1, rng);
  ShiftSpec s;
  s.i = 2;
  s.j = 1;
  s.d = 2;
  s.kernel_seed = 9;
  for (auto _ : st) benchmark::DoNotOptimize(apply_shift(s, f, exec_of(st)));
  label(st);
}

void BM_rademacher_pnorm(benchmark::State& st) {
  Rng rng(2, "bench-rademacher");
  std::vector<Vec> elems(18, Vec(8));
  for (auto& e : elems)
    for (auto& x : e) x = rng.normal();
  const auto E = NormedSpace::lq(8, 3.0);
  for (auto _ : st) benchmark::DoNotOptimize(rademacher_pnorm(elems, 3.0, E, SignEnsemble::all(), exec_of(st)));
  label(st);
}

void BM_decoupled_pnorm(benchmark::State& st) {
  Rng rng(3, "bench-decoupling");
  const auto h = AtomHierarchy::random(rng, 3, 4);
  const auto fam = random_adapted_family(h, 1, rng);
  for (auto _ : st)
    benchmark::DoNotOptimize(decoupled_pnorm(fam, 3.0, NormedSpace::scalar(), SignEnsemble::all(), exec_of(st)));
  label(st);
}

void BM_decay_check(benchmark::State& st) {
  const int N = 10;
  Rng rng(4, "bench-decay-grid");
  const auto sys = DyadicSystem::random(1, 1, N, rng);
  const auto T = DiscreteOperator::from_kernel(CzKernel::hilbert(), Mesh::unit(1, N), false);
  GoodnessParams gp;
  gp.gamma = 0.5;
  gp.r = 4;
  DecayOptions o;
  o.i_min = 5;
  o.i_max = 8;
  o.k_max = 1;
  o.exec = exec_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(decay_check(T, sys, DecayCase::far_disjoint, gp, o));
  label(st);
}

void BM_averaging_identity(benchmark::State& st) {
  const int N = 4;
  const Mesh m = Mesh::unit(1, N);
  Rng rng(5, "bench-averaging");
  auto f = GridFunction::random(m, 1, rng);
  auto g = GridFunction::random(m, 1, rng);
  // mean zero on [0, 1)
  for (auto* h : {&f, &g}) {
    double s = 0.0;
    for (std::int64_t x = 0; x < m.cells(); ++x) s += h->at(x)[0];
    for (std::int64_t x = 0; x < m.cells(); ++x) h->at(x)[0] -= s / static_cast<double>(m.cells());
  }
  const auto T = DiscreteOperator::from_kernel(CzKernel::smooth_odd(0.5), m, false);
  RepresentationConfig cfg;
  cfg.gp.gamma = 0.5;
  cfg.gp.r = 3;
  cfg.gp.max_gap = 3;
  cfg.m_top = 6;
  cfg.exec = exec_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(averaging_identity(T, f, g, cfg));
  label(st);
}

}  // namespace

BENCHMARK(BM_apply_shift)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_rademacher_pnorm)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_decoupled_pnorm)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_decay_check)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_averaging_identity)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
