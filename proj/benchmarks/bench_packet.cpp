#include <benchmark/benchmark.h>

#include "sqn/packet.hpp"

namespace {

sqn::packet::Packet sample_packet(std::uint16_t qubits) {
    sqn::packet::Packet p;
    p.header.flags = qubits ? sqn::packet::kFlagQuantumPayload : 0;
    p.header.requesting_station_id = 1;
    p.header.receiving_station_id = 2;
    p.header.transmit_time_ns = 120'086'880;
    p.header.qubit_count = qubits;
    for (std::uint32_t i = 0; i < qubits; ++i) p.qubits.push_back({i, 1, sqn::packet::Encoding::DV});
    p.trailer.error_correction.assign(64, 0xA5);
    return p;
}

void BM_Encode(benchmark::State& state) {
    const auto p = sample_packet(static_cast<std::uint16_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(sqn::packet::encode(p));
}
BENCHMARK(BM_Encode)->Arg(0)->Arg(16)->Arg(1024);

void BM_Decode(benchmark::State& state) {
    const auto bytes = sqn::packet::encode(sample_packet(static_cast<std::uint16_t>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(sqn::packet::decode(bytes));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_Decode)->Arg(0)->Arg(16)->Arg(1024);

}  // namespace
