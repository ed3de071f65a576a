#include "support/fixtures.hpp"

#include <kaplan/backends.hpp>
#include <kaplan/completion.hpp>
#include <kaplan/datagen.hpp>
#include <kaplan/descriptor.hpp>
#include <kaplan/kdtree.hpp>
#include <kaplan/metrics.hpp>

#include <benchmark/benchmark.h>

using namespace kaplan;

static void BM_KdTreeBuild(benchmark::State& state)
{
    const PointCloud c = fixtures::cube(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) {
        KdTree tree(c.points);
        benchmark::DoNotOptimize(tree);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KdTreeBuild)->Arg(1 << 12)->Arg(1 << 16);

static void BM_KdTreeKnn(benchmark::State& state)
{
    const PointCloud c = fixtures::cube(1 << 16, 2);
    const KdTree tree(c.points);
    const PointCloud queries = fixtures::cube(1024, 3);
    const auto k = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        for (const Point3& q : queries.points) {
            benchmark::DoNotOptimize(tree.knn(q, k));
        }
    }
    state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_KdTreeKnn)->Arg(1)->Arg(16);

static void BM_BuildKaplan(benchmark::State& state)
{
    const PointCloud s = fixtures::sphere(8000, 0.5, 4);
    const IndexedCloud idx(s);
    KaplanConfig cfg;
    cfg.resolution = static_cast<int>(state.range(0));
    cfg.side_length = 0.5;
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_kaplan(idx, s.points[i++ % s.size()], cfg));
    }
}
BENCHMARK(BM_BuildKaplan)->Arg(15)->Arg(35)->Arg(65);

static void BM_Chamfer(benchmark::State& state)
{
    const PointCloud a = fixtures::sphere(static_cast<std::size_t>(state.range(0)), 0.5, 5);
    const PointCloud b = fixtures::sphere(static_cast<std::size_t>(state.range(0)), 0.5, 6);
    for (auto _ : state) {
        benchmark::DoNotOptimize(chamfer(a, b, 1));
    }
}
BENCHMARK(BM_Chamfer)->Arg(1 << 12)->Arg(1 << 15);

static void BM_CompleteSphere(benchmark::State& state)
{
    const PointCloud s = fixtures::sphere(8000, 0.5, 7);
    const HoleSplit split = synthesize_hole(s, HoleSpec{});
    const GtOracleBackend oracle(s, KaplanConfig{});
    PipelineConfig cfg = PipelineConfig::defaults();
    cfg.threads = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(complete(split.incomplete, oracle, cfg));
    }
}
BENCHMARK(BM_CompleteSphere)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
