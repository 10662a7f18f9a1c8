#include <benchmark/benchmark.h>

#include <pdeabcd/assembly.hpp>
#include <pdeabcd/dual_solver.hpp>
#include <pdeabcd/mesh.hpp>
#include <pdeabcd/presets.hpp>

using namespace pdeabcd;

static void BM_Assemble(benchmark::State& state)
{
    const auto mesh = std::make_shared<const Mesh>(build_unit_square_mesh(static_cast<int>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(assemble(mesh));
    state.counters["n"] = static_cast<double>(mesh->num_interior());
}
BENCHMARK(BM_Assemble)->DenseRange(3, 7)->Unit(benchmark::kMillisecond);

static void BM_AugmentedFactor(benchmark::State& state)
{
    const auto ops = assemble(std::make_shared<const Mesh>(build_unit_square_mesh(static_cast<int>(state.range(0)))));
    for (auto _ : state) {
        AugmentedFactorization f(ops->stiffness(), ops->mass(), 1e-2);
        benchmark::DoNotOptimize(f.size());
    }
}
BENCHMARK(BM_AugmentedFactor)->DenseRange(3, 7)->Unit(benchmark::kMillisecond);

static void BM_AugmentedSolve(benchmark::State& state)
{
    const auto ops = assemble(std::make_shared<const Mesh>(build_unit_square_mesh(static_cast<int>(state.range(0)))));
    const AugmentedFactorization f(ops->stiffness(), ops->mass(), 1e-2);
    const Vector b = Vector::Ones(ops->size());
    for (auto _ : state) benchmark::DoNotOptimize(f.solve(b));
}
BENCHMARK(BM_AugmentedSolve)->DenseRange(3, 7)->Unit(benchmark::kMicrosecond);

// Per-iteration cost of the full sweep with Phi logging.
static void BM_SolverIterations(benchmark::State& state)
{
    const ProblemInstance prob = instantiate(preset_by_name("sine"), static_cast<int>(state.range(0)));
    SolverConfig cfg;
    cfg.max_iters = 20;
    cfg.stop_on_tolerance = false;
    for (auto _ : state) benchmark::DoNotOptimize(solve(prob, cfg));
    state.SetItemsProcessed(state.iterations() * cfg.max_iters);
}
BENCHMARK(BM_SolverIterations)->DenseRange(3, 6)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
