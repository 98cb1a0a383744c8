#include <benchmark/benchmark.h>

#include "sqn/simulator.hpp"

namespace {

void BM_EventThroughput(benchmark::State& state) {
    const auto n = state.range(0);
    for (auto _ : state) {
        sqn::Simulator sim(1);
        auto rng = sim.stream({sqn::stream_tag::kProtocol, 0, 0});
        std::int64_t hits = 0;
        for (std::int64_t i = 0; i < n; ++i) sim.schedule(rng.uniform(), "e", [&hits](sqn::Simulator&) { ++hits; });
        sim.run();
        benchmark::DoNotOptimize(hits);
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_EventThroughput)->Arg(1'000)->Arg(100'000);

}  // namespace
