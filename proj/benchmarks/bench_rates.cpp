#include <benchmark/benchmark.h>

#include "sqn/channel.hpp"
#include "sqn/rates.hpp"

namespace {

void BM_DownlinkRate(benchmark::State& state) {
    const sqn::DownlinkGaussianTail model{sqn::Transmittance(0.3), 0.1};
    const sqn::RngStream rng(1, {sqn::stream_tag::kRates, 0, 0});
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(sqn::mean_rate(model, n, rng));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DownlinkRate)->Arg(10'000)->Arg(100'000);

void BM_GeoSweep(benchmark::State& state) {
    sqn::SweepConfig cfg;
    for (int i = 0; i < 10; ++i) {
        cfg.tx_waists.push_back(0.1 + 0.1 * i);
        cfg.rx_radii.push_back(0.125 + 0.125 * i);
    }
    cfg.distance = 36e6;
    cfg.n_samples = 10'000;
    cfg.threads = static_cast<unsigned>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(sqn::sweep(cfg));
}
BENCHMARK(BM_GeoSweep)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

}  // namespace
