#include <benchmark/benchmark.h>

#include "flexstage/fe_oracle.hpp"
#include "flexstage/mcpf.hpp"
#include "flexstage/optimizer.hpp"

using namespace flexstage;

namespace {

McpfParams xd() {
    McpfParams p;
    p.thickness = 0.40e-3;
    p.length = 30.5e-3;
    p.width = 12e-3;
    p.rigid_link_span = 0.644527602e-3;
    p.load_offset_ratio = -0.571885021;
    return p;
}

void BM_CastiglianoReport(benchmark::State& s) {
    const Material m = Material::aluminium();
    for (auto _ : s) benchmark::DoNotOptimize(compute_stiffness(xd(), m));
}
BENCHMARK(BM_CastiglianoReport);

void BM_FeOracle(benchmark::State& s) {
    const Material m = Material::aluminium();
    const HalfMcpfSkeleton sk = build_half_skeleton(xd());
    for (auto _ : s) benchmark::DoNotOptimize(fe_stiffness(sk, LoadCase::motional(), m, static_cast<int>(s.range(0))));
}
BENCHMARK(BM_FeOracle)->Arg(4)->Arg(8)->Arg(16);

void BM_Evaluate(benchmark::State& s) {
    OptProblem p;
    p.lower = {0.3, 20, 0.3, 30};
    p.upper = {0.4, 30, 0.4, 40};
    p.guider.width_mm = 8;
    p.decoupler.width_mm = 12;
    p.material = Material::aluminium();
    for (auto _ : s) benchmark::DoNotOptimize(evaluate(p, {0.32, 23.0, 0.40, 30.5}));
}
BENCHMARK(BM_Evaluate);

}  // namespace

BENCHMARK_MAIN();
