#include <paramsynth/generators.hpp>
#include <paramsynth/mc.hpp>
#include <paramsynth/parser.hpp>

#include <benchmark/benchmark.h>

using namespace paramsynth;

namespace {

void BM_MazeExpectedCost(benchmark::State& state) {
    auto m = maze_model({static_cast<std::size_t>(state.range(0)), 1, false});
    ParametricChecker ck(m, parse_spec("E<=1"));
    ck.set_valuation(std::vector<double>(m.num_parameters(), 0.5));
    for (auto _ : state)
        benchmark::DoNotOptimize(ck.solve());
    state.counters["states"] = static_cast<double>(m.num_states());
}
BENCHMARK(BM_MazeExpectedCost)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_MazeCertify(benchmark::State& state) {
    auto m = maze_model({static_cast<std::size_t>(state.range(0)), 1, false});
    ParametricChecker ck(m, parse_spec("E<=1"));
    ck.set_valuation(std::vector<double>(m.num_parameters(), 0.5));
    auto hint = ck.solve();
    for (auto _ : state)
        benchmark::DoNotOptimize(ck.certify(&hint));
}
BENCHMARK(BM_MazeCertify)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_GridReach(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto m = grid_model(n, n, 1);
    ParametricChecker ck(m, parse_spec("P<=1"));
    ck.set_valuation(std::vector<double>(m.num_parameters(), 0.5));
    for (auto _ : state)
        benchmark::DoNotOptimize(ck.solve());
}
BENCHMARK(BM_GridReach)->Arg(10)->Arg(30)->Unit(benchmark::kMicrosecond);

/// Valuation update alone, what every PSO fitness call pays before solving.
void BM_SetValuation(benchmark::State& state) {
    auto m = maze_model({32, 1, true});
    ParametricChecker ck(m, parse_spec("E<=1"));
    std::vector<double> u(m.num_parameters(), 0.5);
    for (auto _ : state) {
        u[0] = 1 - u[0];
        ck.set_valuation(u);
    }
}
BENCHMARK(BM_SetValuation);

} // namespace
