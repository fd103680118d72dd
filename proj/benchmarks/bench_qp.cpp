#include <paramsynth/ccp.hpp>
#include <paramsynth/encode.hpp>
#include <paramsynth/generators.hpp>
#include <paramsynth/graph.hpp>
#include <paramsynth/parser.hpp>
#include <paramsynth/qp.hpp>

#include <benchmark/benchmark.h>

using namespace paramsynth;

namespace {

struct Prepared {
    DcProblem dc;
    std::vector<double> anchor;
};

Prepared prepare(std::size_t size, SplitMethod method) {
    auto m = maze_model({size, 1, true});
    auto spec = parse_spec("E<=40");
    auto q = nlp_to_qcqp(build_nlp(m, spec, analyze(m, spec), Rational(1, 100000)), m);
    auto anchor = initial_anchor(q, spec);
    return {dc_split(q, method), anchor};
}

void BM_Convexify(benchmark::State& state) {
    auto p = prepare(static_cast<std::size_t>(state.range(0)), SplitMethod::bilinear);
    for (auto _ : state)
        benchmark::DoNotOptimize(convexify(p.dc, p.anchor, 5.0));
}
BENCHMARK(BM_Convexify)->Arg(10)->Arg(23)->Unit(benchmark::kMicrosecond);

void BM_Refresh(benchmark::State& state) {
    auto p = prepare(static_cast<std::size_t>(state.range(0)), SplitMethod::bilinear);
    auto prog = convexify(p.dc, p.anchor, 5.0);
    for (auto _ : state)
        refresh(prog, p.anchor, 5.0);
}
BENCHMARK(BM_Refresh)->Arg(10)->Arg(23)->Unit(benchmark::kMicrosecond);

void BM_InteriorPointCold(benchmark::State& state) {
    auto p = prepare(static_cast<std::size_t>(state.range(0)),
                     state.range(1) ? SplitMethod::eigen : SplitMethod::bilinear);
    auto prog = convexify(p.dc, p.anchor, 5.0);
    InteriorPointSolver solver;
    for (auto _ : state)
        benchmark::DoNotOptimize(solver.solve(prog.program));
    state.counters["variables"] = static_cast<double>(prog.program.num_variables());
}
BENCHMARK(BM_InteriorPointCold)->Args({10, 0})->Args({10, 1})->Args({23, 0})->Unit(benchmark::kMillisecond);

void BM_InteriorPointWarm(benchmark::State& state) {
    auto p = prepare(static_cast<std::size_t>(state.range(0)), SplitMethod::bilinear);
    auto prog = convexify(p.dc, p.anchor, 5.0);
    InteriorPointSolver solver;
    auto first = solver.solve(prog.program);
    std::vector<double> next(first.x.begin(), first.x.begin() + static_cast<std::ptrdiff_t>(p.anchor.size()));
    refresh(prog, next, 7.5);
    for (auto _ : state)
        benchmark::DoNotOptimize(solver.solve(prog.program, &first));
}
BENCHMARK(BM_InteriorPointWarm)->Arg(10)->Arg(23)->Unit(benchmark::kMillisecond);

} // namespace
