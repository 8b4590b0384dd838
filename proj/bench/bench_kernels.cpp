// Serial reference vs OpenMP kernel for the per-pixel hot spots.
//
//   ./synthstab_bench --benchmark_filter=Warp

#include <benchmark/benchmark.h>

#include "synthstab/exec.hpp"
#include "synthstab/flow.hpp"
#include "synthstab/stabilizer.hpp"
#include "synthstab/synthworld.hpp"

using namespace synthstab;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::Serial : Exec::Parallel; }

const Scene& scene() {
    static const Scene s = [] {
        SceneSpec spec;
        spec.seed = 3;
        spec.n_layers = 2;
        spec.layer_depths = {1.0, 2.0};
        return build_scene(spec);
    }();
    return s;
}

void BM_RenderFrame(benchmark::State& state) {
    const Exec exec = exec_of(state);
    const Scene& s = scene();
    const CameraPose pose{512.0, 512.0, 0.1, 1.05};
    for (auto _ : state) benchmark::DoNotOptimize(render_frame(s, pose, 256, 256, exec));
    state.SetLabel(exec == Exec::Serial ? "serial" : "parallel");
}

void BM_WarpFrame(benchmark::State& state) {
    const Exec exec = exec_of(state);
    const Frame frame = render_frame(scene(), {512.0, 512.0, 0.0, 1.0}, 256, 256);
    const AffineParams p{3.2, -1.7, 0.02, 1.01};
    for (auto _ : state) benchmark::DoNotOptimize(warp_frame(frame, p, 0.0f, exec));
    state.SetLabel(exec == Exec::Serial ? "serial" : "parallel");
}

void BM_ComputeFlow(benchmark::State& state) {
    const Exec exec = exec_of(state);
    const Frame a = render_frame(scene(), {512.0, 512.0, 0.0, 1.0}, 128, 128);
    const Frame b = render_frame(scene(), {515.0, 510.0, 0.01, 1.0}, 128, 128);
    for (auto _ : state) benchmark::DoNotOptimize(compute_flow(a, b, {}, exec));
    state.SetLabel(exec == Exec::Serial ? "serial" : "parallel");
}

}  // namespace

BENCHMARK(BM_RenderFrame)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WarpFrame)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ComputeFlow)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
