#include "sqn/rng.hpp"

#include <cmath>
#include <numbers>

namespace sqn {

namespace {
constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;
}  // namespace

std::uint64_t mix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t root_seed, StreamKey key) {
    std::uint64_t h = mix64(root_seed + kGamma);
    h = mix64(h ^ mix64(key.tag + 2 * kGamma));
    h = mix64(h ^ mix64(key.entity + 3 * kGamma));
    h = mix64(h ^ mix64(key.index + 4 * kGamma));
    base_ = h;
}

std::uint64_t RngStream::next_u64() {
    ++counter_;
    return mix64(base_ + counter_ * kGamma);
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * kTwoPow53Inv;
}

double RngStream::uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * kTwoPow53Inv;
}

double RngStream::normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream RngStream::substream(std::uint64_t index) const {
    return RngStream(mix64(base_ ^ mix64(index + 5 * kGamma)));
}

}  // namespace sqn
