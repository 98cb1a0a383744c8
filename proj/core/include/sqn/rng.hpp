#pragma once

#include <cstdint>

namespace sqn {

/// Identifies one random stream: (module tag, entity id, grid index).
struct StreamKey {
    std::uint64_t tag = 0;
    std::uint64_t entity = 0;
    std::uint64_t index = 0;

    friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

namespace stream_tag {
inline constexpr std::uint64_t kChannel = 0x6368616eULL;   // "chan"
inline constexpr std::uint64_t kRates = 0x72617465ULL;     // "rate"
inline constexpr std::uint64_t kProtocol = 0x70726f74ULL;  // "prot"
}  // namespace stream_tag

/// Counter-based random stream.
///
/// Draw n of a stream is splitmix64(base + n * golden_gamma), where base is a
/// splitmix64 hash chain over (root seed, tag, entity, index). The algorithm
/// is pinned at version 1: changing it changes every trace and CSV the tool
/// produces. Only integer arithmetic feeds the bit stream, so sequences are
/// identical on every platform; floating draws go through fixed formulas.
///
/// A stream is a plain value. Copying it forks an identical sequence; it must
/// not be shared between threads without external synchronisation.
class RngStream {
public:
    static constexpr int kAlgorithmVersion = 1;

    RngStream(std::uint64_t root_seed, StreamKey key);

    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform();

    /// Uniform on (0, 1); never returns 0, safe for log().
    double uniform_open();

    /// Standard normal via Box-Muller (one variate per two uniforms).
    double normal();

    /// Independent child stream; depends only on this stream's key and
    /// `index`, never on how many draws were taken from the parent.
    RngStream substream(std::uint64_t index) const;

    std::uint64_t draws() const { return counter_; }

private:
    explicit RngStream(std::uint64_t base) : base_(base) {}

    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

/// splitmix64 finaliser; exposed for hashing keys elsewhere.
std::uint64_t mix64(std::uint64_t x);

}  // namespace sqn
