// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include "hypermix/kernels.hpp"
#include "hypermix/random.hpp"

namespace {

using hypermix::Matrix;
namespace kernels = hypermix::kernels;

Matrix random_unit_rows(std::size_t m, std::size_t d, std::uint64_t seed) {
  hypermix::Rng rng(seed);
  Matrix out(m, d);
  for (std::size_t i = 0; i < m; ++i) {
    auto r = out.row(i);
    for (double& x : r) x = hypermix::sample_normal(rng);
    const double n = hypermix::norm(r);
    for (double& x : r) x /= n;
  }
  return out;
}

template <Matrix (*Kernel)(const Matrix&, const Matrix&)>
void BM_Pairwise(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const Matrix a = random_unit_rows(m, d, 1);
  const Matrix b = random_unit_rows(m, d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * m));
}

template <std::optional<kernels::MixFailure> (*Kernel)(double, const Matrix&, const Matrix&,
                                                        Matrix&)>
void BM_Mix(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const Matrix a = random_unit_rows(m, d, 3);
  const Matrix b = random_unit_rows(m, d, 4);
  Matrix out(m, d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Kernel(0.3, a, b, out));
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m));
}

void shapes(benchmark::internal::Benchmark* b) {
  for (long m : {256, 1024})
    for (long d : {32, 512}) b->Args({m, d});
}

BENCHMARK(BM_Pairwise<kernels::serial::similarity>)->Name("similarity/serial")->Apply(shapes);
BENCHMARK(BM_Pairwise<kernels::parallel::similarity>)->Name("similarity/parallel")->Apply(shapes);
BENCHMARK(BM_Pairwise<kernels::serial::squared_distance>)
    ->Name("squared_distance/serial")
    ->Apply(shapes);
BENCHMARK(BM_Pairwise<kernels::parallel::squared_distance>)
    ->Name("squared_distance/parallel")
    ->Apply(shapes);
BENCHMARK(BM_Mix<kernels::serial::geodesic_mix_rows>)->Name("geodesic_mix/serial")->Apply(shapes);
BENCHMARK(BM_Mix<kernels::parallel::geodesic_mix_rows>)
    ->Name("geodesic_mix/parallel")
    ->Apply(shapes);

}  // namespace

BENCHMARK_MAIN();
