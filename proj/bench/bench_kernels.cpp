// Serial reference vs OpenMP kernel. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <cmath>

#include "rdelab/cavity.hpp"
#include "rdelab/hiergraph.hpp"

using namespace rdelab;

namespace {

GridMeasure bump(const GridSpec& g) {
    std::vector<double> pmf(g.points());
    for (std::size_t i = 0; i < pmf.size(); ++i) pmf[i] = std::exp(-0.5 * std::pow(g.x(i) / 0.7, 2.0));
    return GridMeasure::from_pmf(g, pmf, 0.0, 0.0);
}

GridSpec grid_for(const benchmark::State& st) { return GridSpec(-10.0, 10.0, 20.0 / static_cast<double>(st.range(0))); }

void BM_lse_law(benchmark::State& st) {
    const auto mu = bump(grid_for(st));
    for (auto _ : st) benchmark::DoNotOptimize(lse_law(mu, mu));
}
void BM_lse_law_serial(benchmark::State& st) {
    const auto mu = bump(grid_for(st));
    for (auto _ : st) benchmark::DoNotOptimize(lse_law_serial(mu, mu));
}

void BM_add_gaussian(benchmark::State& st) {
    const auto mu = bump(grid_for(st));
    for (auto _ : st) benchmark::DoNotOptimize(add_gaussian(mu, -0.3, 0.5));
}
void BM_add_gaussian_serial(benchmark::State& st) {
    const auto mu = bump(grid_for(st));
    for (auto _ : st) benchmark::DoNotOptimize(add_gaussian_serial(mu, -0.3, 0.5));
}

void BM_I_product(benchmark::State& st) {
    const GridSpec g(-20.0, 20.0, 40.0 / static_cast<double>(st.range(0)));
    const auto f = logistic_tail(g);
    for (auto _ : st) benchmark::DoNotOptimize(convolve_I_product(f, g, 1.5));
}
void BM_I_product_serial(benchmark::State& st) {
    const GridSpec g(-20.0, 20.0, 40.0 / static_cast<double>(st.range(0)));
    const auto f = logistic_tail(g);
    for (auto _ : st) benchmark::DoNotOptimize(convolve_I_product_serial(f, g, 1.5));
}

}  // namespace

BENCHMARK(BM_lse_law)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_lse_law_serial)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_add_gaussian)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_add_gaussian_serial)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_I_product)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_I_product_serial)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
