#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles/packet_gen.hpp"
#include "sqn/packet.hpp"

using namespace sqn;
using namespace sqn::packet;

namespace {
std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

// Bitwise reflected CRC-32, no table.
std::uint32_t slow_crc(const std::vector<std::uint8_t>& data) {
    std::uint32_t c = 0xFFFFFFFFu;
    for (auto b : data) {
        c ^= b;
        for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0xEDB88320u & (0u - (c & 1u)));
    }
    return ~c;
}

const DecodeError* error_of(const DecodeResult& r) { return std::get_if<DecodeError>(&r); }

std::optional<DecodeErrorCode> decode_code(const std::vector<std::uint8_t>& bytes) {
    const auto r = decode(bytes);
    if (const auto* e = error_of(r)) return e->code;
    return std::nullopt;
}
}  // namespace

TEST_CASE("crc32 check values") {
    CHECK(crc32(bytes_of("123456789")) == 0xCBF43926u);
    CHECK(crc32(std::vector<std::uint8_t>{}) == 0u);
    const std::vector<std::uint8_t> ab{0x00, 0x01}, ba{0x01, 0x00};
    CHECK(crc32(ab) != crc32(ba));
    RngStream rng(1, {0, 0, 0});
    for (int k = 0; k < 200; ++k) {
        std::vector<std::uint8_t> d(rng.next_u64() % 300);
        for (auto& b : d) b = static_cast<std::uint8_t>(rng.next_u64());
        CHECK(crc32(d) == slow_crc(d));
    }
}

TEST_CASE("minimal packet bytes") {
    Packet p;
    p.header.requesting_station_id = 1;
    p.header.receiving_station_id = 2;
    p.header.transmit_time_ns = 5;
    const auto enc = encode(p);
    REQUIRE(enc.size() == 42);
    CHECK(encoded_size(p) == 42);

    std::vector<std::uint8_t> expect{0x51, 0x50, 0x01, 0x00, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 5,
                                     0,    0,    0,    0,    0, 0, 0, 0, 0, 0,     // commence time, qubit count
                                     0,    0,    0,    0,    0, 0};               // ack id, ec length
    const auto crc = slow_crc(expect);
    for (int s = 24; s >= 0; s -= 8) expect.push_back(static_cast<std::uint8_t>(crc >> s));
    expect.push_back(0x0E);
    expect.push_back(0x0F);
    CHECK(enc == expect);
}

TEST_CASE("encoded length follows the layout") {
    Packet p;
    p.header.flags = kFlagQuantumPayload;
    p.header.qubit_count = 2;
    p.qubits = {{1, 0, Encoding::DV}, {2, 1, Encoding::CVReference}};
    for (std::size_t ec : {0u, 1u, 17u, 300u}) {
        p.trailer.error_correction.assign(ec, 0xAB);
        CHECK(encode(p).size() == 60 + ec);
        CHECK(encoded_size(p) == 60 + ec);
    }
}

TEST_CASE("validation rules") {
    Packet p;
    CHECK_NOTHROW(validate(p));
    p.header.flags = 0x04;
    CHECK_THROWS_AS(validate(p), ValidationError);
    CHECK_THROWS_AS(encode(p), ValidationError);
    p.header.flags = 0x80;
    CHECK_THROWS_AS(validate(p), ValidationError);

    Packet q;
    q.header.qubit_count = 1;
    q.qubits = {{1, 0, Encoding::DV}};
    CHECK_THROWS_AS(validate(q), ValidationError);  // payload flag missing
    q.header.flags = kFlagQuantumPayload;
    CHECK_NOTHROW(validate(q));
    q.header.qubit_count = 2;
    CHECK_THROWS_AS(validate(q), ValidationError);

    Packet a;
    a.trailer.ack_session_id = 7;
    CHECK_THROWS_AS(validate(a), ValidationError);
    a.header.flags = kFlagAck;
    CHECK_NOTHROW(validate(a));

    Packet v;
    v.header.version = 2;
    CHECK_THROWS_AS(validate(v), ValidationError);
}

TEST_CASE("randomized round trip") {
    RngStream rng(2, {0, 0, 0});
    for (int k = 0; k < 1000; ++k) {
        const auto p = oracle::random_valid_packet(rng);
        const auto enc = encode(p);
        CHECK(enc.size() == 42 + 9 * p.qubits.size() + p.trailer.error_correction.size());
        const auto dec = decode(enc);
        REQUIRE(std::holds_alternative<Packet>(dec));
        CHECK(std::get<Packet>(dec) == p);
        CHECK(from_hex(to_hex(enc)) == enc);
    }
}

TEST_CASE("corrupted fields are reported as crc mismatch") {
    RngStream rng(3, {0, 0, 0});
    for (int k = 0; k < 200; ++k) {
        const auto p = oracle::random_valid_packet(rng);
        auto enc = encode(p);
        // Station ids, times and descriptor bytes do not change the framing.
        std::vector<std::size_t> safe;
        for (std::size_t i = 4; i < 28; ++i) safe.push_back(i);
        for (std::size_t i = 30; i < 30 + 9 * p.qubits.size(); ++i) safe.push_back(i);
        const auto pos = safe[rng.next_u64() % safe.size()];
        enc[pos] ^= static_cast<std::uint8_t>(1 + rng.next_u64() % 255);
        const auto result = decode(enc);
        const auto* err = error_of(result);
        REQUIRE(err != nullptr);
        CHECK(err->code == DecodeErrorCode::CrcMismatch);
    }
    auto enc = encode(Packet{});
    enc[enc.size() - 4] ^= 0x10;
    const auto result = decode(enc);
    REQUIRE(error_of(result));
    CHECK(error_of(result)->code == DecodeErrorCode::CrcMismatch);
}

TEST_CASE("structural errors") {
    auto enc = encode(Packet{});
    auto bad = enc;
    bad[0] = 0x00;
    CHECK(decode_code(bad) == DecodeErrorCode::BadMagic);
    bad = enc;
    bad[2] = 0x02;
    CHECK(decode_code(bad) == DecodeErrorCode::BadVersion);
    bad = enc;
    bad[3] = 0x40;
    CHECK(decode_code(bad) == DecodeErrorCode::ReservedFlagSet);
    const auto flagged = decode(bad);
    CHECK(error_of(flagged)->offset == 3);
    bad = enc;
    bad.back() = 0x00;
    CHECK(decode_code(bad) == DecodeErrorCode::BadEndMarker);
    bad = enc;
    bad.push_back(0x00);
    CHECK(decode_code(bad) == DecodeErrorCode::TrailingBytes);
    CHECK(decode_code({}) == DecodeErrorCode::TruncatedInput);
}

TEST_CASE("semantic errors behind a valid crc") {
    // Build bytes by hand with an out-of-range encoding and a fresh CRC.
    Packet p;
    p.header.flags = kFlagQuantumPayload;
    p.header.qubit_count = 1;
    p.qubits = {{9, 0, Encoding::DV}};
    auto enc = encode(p);
    enc[30 + 8] = 7;
    const std::vector<std::uint8_t> body(enc.begin(), enc.end() - 6);
    const auto crc = crc32(body);
    for (int i = 0; i < 4; ++i) enc[enc.size() - 6 + i] = static_cast<std::uint8_t>(crc >> (24 - 8 * i));
    const auto result = decode(enc);
    const auto* err = error_of(result);
    REQUIRE(err != nullptr);
    CHECK(err->code == DecodeErrorCode::InvalidField);
    CHECK(err->offset == 38);
}

TEST_CASE("every prefix yields a structured error") {
    RngStream rng(4, {0, 0, 0});
    for (int k = 0; k < 50; ++k) {
        const auto enc = encode(oracle::random_valid_packet(rng));
        for (std::size_t n = 0; n < enc.size(); ++n) {
            const std::vector<std::uint8_t> prefix(enc.begin(), enc.begin() + static_cast<std::ptrdiff_t>(n));
            const auto result = decode(prefix);
            const auto* err = error_of(result);
            REQUIRE(err != nullptr);
            CHECK(err->code == DecodeErrorCode::TruncatedInput);
            CHECK(err->offset <= n);
            CHECK_FALSE(err->detail.empty());
        }
    }
}

TEST_CASE("random garbage never crashes") {
    RngStream rng(5, {0, 0, 0});
    for (int k = 0; k < 20'000; ++k) {
        std::vector<std::uint8_t> d(rng.next_u64() % 80);
        for (auto& b : d) b = static_cast<std::uint8_t>(rng.next_u64());
        if (d.size() >= 2 && (k & 1)) {
            d[0] = 0x51;
            d[1] = 0x50;
        }
        const auto r = decode(d);
        if (const auto* e = error_of(r)) CHECK(e->offset <= d.size());
    }
}

TEST_CASE("time and hex helpers") {
    CHECK(seconds_to_ns(0.0) == 0);
    CHECK(seconds_to_ns(1.5) == 1'500'000'000ULL);
    CHECK(seconds_to_ns(0.12008688) == 120'086'880ULL);
    CHECK_THROWS(seconds_to_ns(-1.0));
    CHECK(to_hex(std::vector<std::uint8_t>{0x51, 0x0f}) == "510f");
    CHECK(from_hex("510F") == std::vector<std::uint8_t>{0x51, 0x0f});
    CHECK_THROWS(from_hex("5"));
    CHECK_THROWS(from_hex("zz"));
    CHECK(to_string(DecodeErrorCode::CrcMismatch) == "CrcMismatch");
}
