#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sqn::packet {

// Wire layout, all integers big-endian:
//
//   header      magic 'Q''P' | version u8 | flags u8 | requesting u32 | receiving u32
//               | transmit_time_ns u64 | op_commence_time_ns u64 | qubit_count u16
//   descriptors qubit_count x (qubit_id u32 | entanglement_group u32 | encoding u8)
//   trailer     ack_session_id u32 | error_corr_len u16 | error_corr bytes
//               | crc32 u32 (over every preceding byte) | end marker 0x0E 0x0F

inline constexpr std::uint8_t kMagic0 = 0x51;
inline constexpr std::uint8_t kMagic1 = 0x50;
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::uint8_t kEnd0 = 0x0E;
inline constexpr std::uint8_t kEnd1 = 0x0F;

inline constexpr std::uint8_t kFlagQuantumPayload = 0x01;
inline constexpr std::uint8_t kFlagAck = 0x02;
inline constexpr std::uint8_t kReservedFlags = 0xFC;

inline constexpr std::size_t kHeaderSize = 30;
inline constexpr std::size_t kDescriptorSize = 9;
inline constexpr std::size_t kTrailerFixedSize = 12;

enum class Encoding : std::uint8_t { DV = 0, CVReference = 1 };

struct PacketHeader {
    std::uint8_t version = kVersion;
    std::uint8_t flags = 0;
    std::uint32_t requesting_station_id = 0;
    std::uint32_t receiving_station_id = 0;
    std::uint64_t transmit_time_ns = 0;
    std::uint64_t op_commence_time_ns = 0;  // 0 = unset
    std::uint16_t qubit_count = 0;

    friend bool operator==(const PacketHeader&, const PacketHeader&) = default;
};

struct QubitDescriptor {
    std::uint32_t qubit_id = 0;
    std::uint32_t entanglement_group = 0;  // 0 = unentangled
    Encoding encoding = Encoding::DV;

    friend bool operator==(const QubitDescriptor&, const QubitDescriptor&) = default;
};

struct PacketTrailer {
    std::uint32_t ack_session_id = 0;
    std::vector<std::uint8_t> error_correction;

    friend bool operator==(const PacketTrailer&, const PacketTrailer&) = default;
};

struct Packet {
    PacketHeader header;
    std::vector<QubitDescriptor> qubits;
    PacketTrailer trailer;

    friend bool operator==(const Packet&, const Packet&) = default;
};

class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Throws ValidationError when the packet could not be encoded canonically.
void validate(const Packet& p);

/// Exact encoded size: 30 + 9 * qubit_count + 12 + error_corr_len.
std::size_t encoded_size(const Packet& p);

std::vector<std::uint8_t> encode(const Packet& p);

enum class DecodeErrorCode {
    BadMagic,
    BadVersion,
    ReservedFlagSet,
    TruncatedInput,
    CrcMismatch,
    BadEndMarker,
    InvalidField,
    TrailingBytes,
};

std::string_view to_string(DecodeErrorCode code);

struct DecodeError {
    DecodeErrorCode code;
    std::size_t offset;  // byte offset where the problem was detected
    std::string detail;
};

using DecodeResult = std::variant<Packet, DecodeError>;

/// Total over arbitrary input; never reads past bytes.size().
DecodeResult decode(std::span<const std::uint8_t> bytes);

/// Reflected CRC-32 (IEEE 802.3), init and final xor 0xFFFFFFFF.
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

/// Seconds to integer nanoseconds, rounding half to even.
std::uint64_t seconds_to_ns(double seconds);

std::string to_hex(std::span<const std::uint8_t> bytes);
/// Accepts upper/lower case and ignores whitespace; throws std::invalid_argument.
std::vector<std::uint8_t> from_hex(std::string_view text);

}  // namespace sqn::packet
