#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "sqn/rng.hpp"
#include "sqn/simulator.hpp"

using namespace sqn;

TEST_CASE("same stream key reproduces the same draws") {
    RngStream a(42, {stream_tag::kChannel, 7, 3});
    RngStream b(42, {stream_tag::kChannel, 7, 3});
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(a.draws() == 100);
}

TEST_CASE("different keys and seeds give different streams") {
    RngStream base(1, {1, 2, 3});
    const auto first = base.next_u64();
    CHECK(RngStream(2, {1, 2, 3}).next_u64() != first);
    CHECK(RngStream(1, {9, 2, 3}).next_u64() != first);
    CHECK(RngStream(1, {1, 9, 3}).next_u64() != first);
    CHECK(RngStream(1, {1, 2, 9}).next_u64() != first);
}

TEST_CASE("draw sequence is pinned across platforms") {
    // Frozen outputs of the counter-based generator. A change here changes
    // every seeded result in the project.
    RngStream s(42, {stream_tag::kRates, 0, 0});
    CHECK(s.next_u64() == 0xc5760f0d5a155aadULL);
    CHECK(s.next_u64() == 0xea15a07b66cd6021ULL);
    CHECK(s.next_u64() == 0x039f1355c9922e4eULL);
    CHECK(mix64(1) == 0x5692161d100b05e5ULL);
}

namespace {
double correlation(RngStream a, RngStream b, int n) {
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (int i = 0; i < n; ++i) {
        const double x = a.uniform(), y = b.uniform();
        sa += x;
        sb += y;
        saa += x * x;
        sbb += y * y;
        sab += x * y;
    }
    const double cov = sab / n - (sa / n) * (sb / n);
    const double va = saa / n - (sa / n) * (sa / n);
    const double vb = sbb / n - (sb / n) * (sb / n);
    return cov / std::sqrt(va * vb);
}
}  // namespace

TEST_CASE("neighbouring streams are uncorrelated") {
    for (std::uint64_t k = 0; k < 20; ++k) {
        const double r = correlation(RngStream(5, {stream_tag::kRates, k, 0}), RngStream(5, {stream_tag::kRates, k, 1}), 10'000);
        CHECK(std::abs(r) < 0.05);
        const double r2 = correlation(RngStream(5, {stream_tag::kRates, k, 0}), RngStream(5, {stream_tag::kRates, k + 1, 0}), 10'000);
        CHECK(std::abs(r2) < 0.05);
    }
    RngStream sub_parent(5, {stream_tag::kChannel, 0, 0});
    CHECK(std::abs(correlation(sub_parent.substream(0), sub_parent.substream(1), 10'000)) < 0.05);
}

TEST_CASE("uniform and normal moments") {
    RngStream s(11, {stream_tag::kChannel, 1, 1});
    const int n = 1'000'000;
    double su = 0, sn = 0, snn = 0;
    double lo = 1, hi = 0;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        su += u;
    }
    CHECK(lo >= 0.0);
    CHECK(hi < 1.0);
    CHECK(std::abs(su / n - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
    for (int i = 0; i < n; ++i) {
        const double g = s.normal();
        sn += g;
        snn += g * g;
    }
    CHECK(std::abs(sn / n) < 3.0 / std::sqrt(n));
    CHECK(std::abs(snn / n - 1.0) < 3.0 * std::sqrt(2.0 / n));
    for (int i = 0; i < 1000; ++i) {
        const double u = s.uniform_open();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("substream does not depend on parent position") {
    RngStream a(3, {1, 1, 1});
    const RngStream fresh = a.substream(4);
    a.next_u64();
    a.next_u64();
    RngStream x = fresh, y = a.substream(4);
    for (int i = 0; i < 10; ++i) CHECK(x.next_u64() == y.next_u64());
}

TEST_CASE("events run in time order with sequence tie-break") {
    Simulator sim;
    std::vector<int> order;
    sim.schedule(2.0, "b", [&](Simulator&) { order.push_back(2); });
    sim.schedule(1.0, "a1", [&](Simulator&) { order.push_back(10); });
    sim.schedule(1.0, "a2", [&](Simulator&) { order.push_back(11); });
    sim.schedule(1.0, "a3", [&](Simulator&) { order.push_back(12); });
    CHECK(sim.run() == 4);
    CHECK(order == std::vector<int>{10, 11, 12, 2});
    CHECK(sim.now() == 2.0);
}

TEST_CASE("scheduling at now runs after the current handler") {
    Simulator sim;
    std::vector<int> order;
    sim.schedule(1.0, "outer", [&](Simulator& s) {
        s.schedule(s.now(), "inner", [&](Simulator&) { order.push_back(2); });
        order.push_back(1);
    });
    sim.schedule(1.0, "sibling", [&](Simulator&) { order.push_back(3); });
    sim.run();
    CHECK(order == std::vector<int>{1, 3, 2});
}

TEST_CASE("scheduling in the past is rejected") {
    Simulator sim(0, 5.0);
    CHECK_THROWS_AS(sim.schedule(5.0 - 1e-9, "late", [](Simulator&) {}), ScheduleError);
    CHECK_THROWS_AS(sim.schedule_in(-1.0, "late", [](Simulator&) {}), ScheduleError);
    CHECK_THROWS_AS(sim.schedule(NAN, "nan", [](Simulator&) {}), ScheduleError);
    CHECK_NOTHROW(sim.schedule(5.0, "now", [](Simulator&) {}));
}

TEST_CASE("run_until on an empty queue advances the clock") {
    Simulator sim;
    CHECK(sim.run_until(3.5) == 0);
    CHECK(sim.now() == 3.5);
}

TEST_CASE("run_until leaves later events pending") {
    Simulator sim;
    int ran = 0;
    sim.schedule(1.0, "x", [&](Simulator&) { ++ran; });
    sim.schedule(3.0, "y", [&](Simulator&) { ++ran; });
    CHECK(sim.run_until(2.0) == 1);
    CHECK(sim.pending() == 1);
    CHECK(sim.now() == 2.0);
    CHECK(sim.run_until(3.0) == 1);
    CHECK(ran == 2);
}

TEST_CASE("self-rescheduling tick chain count") {
    const double t0 = 0.0;
    for (double dt : {0.25, 0.1, 0.3}) {
        for (double t_end : {1.0, 2.0, 5.0}) {
            Simulator sim(0, t0);
            std::size_t ticks = 0;
            int k = 0;
            std::function<void(Simulator&)> tick = [&](Simulator& s) {
                ++ticks;
                ++k;
                s.schedule(t0 + k * dt, "tick", tick);
            };
            sim.schedule(t0, "tick", tick);
            sim.run_until(t_end);
            // Oracle: count multiples of dt in [t0, t_end] by integer arithmetic.
            std::size_t expect = 0;
            for (int m = 0; t0 + m * dt <= t_end; ++m) ++expect;
            CHECK(ticks == expect);
            CHECK(static_cast<double>(expect) == std::floor((t_end - t0) / dt + 1e-12) + 1);
        }
    }
}

TEST_CASE("handler exceptions identify the event") {
    Simulator sim;
    sim.schedule(0.5, "ok", [](Simulator&) {});
    sim.schedule(1.5, "boom", [](Simulator&) { throw std::runtime_error("bad"); });
    try {
        sim.run();
        FAIL("expected EventError");
    } catch (const EventError& e) {
        CHECK(e.kind() == "boom");
        CHECK(e.time() == 1.5);
        CHECK(e.seq() == 1);
    }
}

TEST_CASE("no event is lost or duplicated") {
    Simulator sim(9);
    auto rng = sim.stream({stream_tag::kProtocol, 0, 0});
    std::vector<int> seen(5000, 0);
    for (int i = 0; i < 5000; ++i) sim.schedule(rng.uniform() * 100.0, "e", [&seen, i](Simulator&) { ++seen[i]; });
    double last = -1;
    std::size_t n = 0;
    while (sim.pending() > 0) {
        n += sim.run_until(sim.now() + 1.0);
        CHECK(sim.now() >= last);
        last = sim.now();
    }
    CHECK(n == 5000);
    for (int c : seen) CHECK(c == 1);
    CHECK(sim.processed() == 5000);
}
