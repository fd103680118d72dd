#include <paramsynth/ccp.hpp>
#include <paramsynth/generators.hpp>
#include <paramsynth/mc.hpp>
#include <paramsynth/parser.hpp>
#include <paramsynth/pso.hpp>

#include <benchmark/benchmark.h>

using namespace paramsynth;

namespace {

/// Threshold at `share` of the expected cost with every parameter at 1/2.
Specification centre_share(const Pmdp& m, double share) {
    ParametricChecker ck(m, parse_spec("E<=1"));
    ck.set_valuation(std::vector<double>(m.num_parameters(), 0.5));
    return parse_spec("E<=" + format_decimal(share * ck.initial_value(ck.solve())));
}

void BM_CcpMaze(benchmark::State& state) {
    auto m = maze_model({static_cast<std::size_t>(state.range(0)), 2, false});
    auto spec = centre_share(m, 0.85);
    CcpConfig cfg;
    cfg.mc_feedback = state.range(1) != 0;
    int iterations = 0;
    for (auto _ : state)
        iterations = synthesize(m, spec, cfg).iterations;
    state.counters["iterations"] = iterations;
}
BENCHMARK(BM_CcpMaze)->Args({10, 1})->Args({10, 0})->Args({32, 1})->Unit(benchmark::kMillisecond);

void BM_CcpSplit(benchmark::State& state) {
    auto m = grid_model(12, 16, 4);
    ParametricChecker ck(m, parse_spec("P<=1"));
    ck.set_valuation(std::vector<double>(m.num_parameters(), 0.5));
    auto spec = parse_spec("P<=" + format_decimal(0.5 * ck.initial_value(ck.solve())));
    CcpConfig cfg;
    cfg.split = state.range(0) ? SplitMethod::eigen : SplitMethod::bilinear;
    for (auto _ : state)
        benchmark::DoNotOptimize(synthesize(m, spec, cfg));
}
BENCHMARK(BM_CcpSplit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PsoMaze(benchmark::State& state) {
    auto m = maze_model({10, 2, false});
    auto spec = centre_share(m, 0.85);
    PsoConfig cfg;
    cfg.jobs = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(synthesize_pso(m, spec, cfg));
}
BENCHMARK(BM_PsoMaze)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

} // namespace
