#include "sqn/packet.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <limits>

namespace sqn::packet {

namespace {

constexpr std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
    return table;
}

constexpr auto kCrcTable = make_crc_table();

class Writer {
public:
    explicit Writer(std::size_t reserve) { out_.reserve(reserve); }

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

    std::vector<std::uint8_t>& data() { return out_; }

private:
    void put(std::uint64_t v, int width) {
        for (int i = width - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return in_.size() - pos_; }
    bool has(std::size_t n) const { return remaining() >= n; }

    // Callers check has() first.
    std::uint64_t uint(std::size_t width) {
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < width; ++i) v = (v << 8) | in_[pos_ + i];
        pos_ += width;
        return v;
    }
    std::span<const std::uint8_t> take(std::size_t n) {
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

DecodeError truncated(std::size_t offset, std::size_t need, const char* what) {
    return DecodeError{DecodeErrorCode::TruncatedInput, offset,
                       std::string("need ") + std::to_string(need) + " byte(s) for " + what};
}

}  // namespace

std::string_view to_string(DecodeErrorCode code) {
    switch (code) {
        case DecodeErrorCode::BadMagic: return "BadMagic";
        case DecodeErrorCode::BadVersion: return "BadVersion";
        case DecodeErrorCode::ReservedFlagSet: return "ReservedFlagSet";
        case DecodeErrorCode::TruncatedInput: return "TruncatedInput";
        case DecodeErrorCode::CrcMismatch: return "CrcMismatch";
        case DecodeErrorCode::BadEndMarker: return "BadEndMarker";
        case DecodeErrorCode::InvalidField: return "InvalidField";
        case DecodeErrorCode::TrailingBytes: return "TrailingBytes";
    }
    return "Unknown";
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    std::uint32_t c = 0xFFFFFFFFu;
    for (std::uint8_t b : bytes) c = kCrcTable[(c ^ b) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

void validate(const Packet& p) {
    const auto& h = p.header;
    if (h.version != kVersion) throw ValidationError("unsupported version " + std::to_string(h.version));
    if (h.flags & kReservedFlags) throw ValidationError("reserved flag bits must be zero");
    if (p.qubits.size() > std::numeric_limits<std::uint16_t>::max()) throw ValidationError("too many qubits");
    if (h.qubit_count != p.qubits.size()) throw ValidationError("qubit_count does not match descriptor count");
    if ((h.qubit_count == 0) == static_cast<bool>(h.flags & kFlagQuantumPayload))
        throw ValidationError("quantum-payload flag must be set iff qubit_count > 0");
    for (const auto& q : p.qubits)
        if (q.encoding != Encoding::DV && q.encoding != Encoding::CVReference)
            throw ValidationError("qubit encoding must be 0 (DV) or 1 (CV reference)");
    if (!(h.flags & kFlagAck) && p.trailer.ack_session_id != 0)
        throw ValidationError("ack_session_id must be 0 when the ack flag is clear");
    if (p.trailer.error_correction.size() > std::numeric_limits<std::uint16_t>::max())
        throw ValidationError("error-correction block exceeds 65535 bytes");
}

std::size_t encoded_size(const Packet& p) {
    return kHeaderSize + kDescriptorSize * p.qubits.size() + kTrailerFixedSize + p.trailer.error_correction.size();
}

std::vector<std::uint8_t> encode(const Packet& p) {
    validate(p);
    Writer w(encoded_size(p));
    const auto& h = p.header;
    w.u8(kMagic0);
    w.u8(kMagic1);
    w.u8(h.version);
    w.u8(h.flags);
    w.u32(h.requesting_station_id);
    w.u32(h.receiving_station_id);
    w.u64(h.transmit_time_ns);
    w.u64(h.op_commence_time_ns);
    w.u16(h.qubit_count);
    for (const auto& q : p.qubits) {
        w.u32(q.qubit_id);
        w.u32(q.entanglement_group);
        w.u8(static_cast<std::uint8_t>(q.encoding));
    }
    w.u32(p.trailer.ack_session_id);
    w.u16(static_cast<std::uint16_t>(p.trailer.error_correction.size()));
    w.bytes(p.trailer.error_correction);
    w.u32(crc32(w.data()));
    w.u8(kEnd0);
    w.u8(kEnd1);
    return std::move(w.data());
}

DecodeResult decode(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    Packet p;
    auto& h = p.header;

    if (!r.has(2)) return truncated(r.offset(), 2, "magic");
    if (r.uint(1) != kMagic0 || r.uint(1) != kMagic1) return DecodeError{DecodeErrorCode::BadMagic, 0, "expected 0x51 0x50"};
    if (!r.has(1)) return truncated(r.offset(), 1, "version");
    h.version = static_cast<std::uint8_t>(r.uint(1));
    if (h.version != kVersion) return DecodeError{DecodeErrorCode::BadVersion, 2, "version " + std::to_string(h.version)};
    if (!r.has(1)) return truncated(r.offset(), 1, "flags");
    h.flags = static_cast<std::uint8_t>(r.uint(1));
    if (h.flags & kReservedFlags) return DecodeError{DecodeErrorCode::ReservedFlagSet, 3, "reserved flag bits set"};

    if (!r.has(kHeaderSize - 4)) return truncated(r.offset(), kHeaderSize - 4, "header");
    h.requesting_station_id = static_cast<std::uint32_t>(r.uint(4));
    h.receiving_station_id = static_cast<std::uint32_t>(r.uint(4));
    h.transmit_time_ns = r.uint(8);
    h.op_commence_time_ns = r.uint(8);
    h.qubit_count = static_cast<std::uint16_t>(r.uint(2));

    const std::size_t descriptors_offset = r.offset();
    const std::size_t descriptor_bytes = kDescriptorSize * h.qubit_count;
    if (!r.has(descriptor_bytes)) return truncated(r.offset(), descriptor_bytes, "qubit descriptors");
    std::vector<std::uint8_t> raw_encodings;
    raw_encodings.reserve(h.qubit_count);
    p.qubits.reserve(h.qubit_count);
    for (std::size_t i = 0; i < h.qubit_count; ++i) {
        QubitDescriptor q;
        q.qubit_id = static_cast<std::uint32_t>(r.uint(4));
        q.entanglement_group = static_cast<std::uint32_t>(r.uint(4));
        raw_encodings.push_back(static_cast<std::uint8_t>(r.uint(1)));
        q.encoding = static_cast<Encoding>(raw_encodings.back());
        p.qubits.push_back(q);
    }

    const std::size_t trailer_offset = r.offset();
    if (!r.has(6)) return truncated(r.offset(), 6, "trailer");
    p.trailer.ack_session_id = static_cast<std::uint32_t>(r.uint(4));
    const auto ec_len = static_cast<std::size_t>(r.uint(2));
    if (!r.has(ec_len)) return truncated(r.offset(), ec_len, "error-correction block");
    auto ec = r.take(ec_len);
    p.trailer.error_correction.assign(ec.begin(), ec.end());

    const std::size_t crc_offset = r.offset();
    if (!r.has(4)) return truncated(r.offset(), 4, "crc32");
    const auto stored_crc = static_cast<std::uint32_t>(r.uint(4));
    if (stored_crc != crc32(bytes.first(crc_offset)))
        return DecodeError{DecodeErrorCode::CrcMismatch, crc_offset, "crc32 does not match"};

    const std::size_t end_offset = r.offset();
    if (!r.has(2)) return truncated(r.offset(), 2, "end marker");
    if (r.uint(1) != kEnd0 || r.uint(1) != kEnd1)
        return DecodeError{DecodeErrorCode::BadEndMarker, end_offset, "expected 0x0E 0x0F"};
    if (r.remaining() != 0)
        return DecodeError{DecodeErrorCode::TrailingBytes, r.offset(),
                           std::to_string(r.remaining()) + " byte(s) after end marker"};

    // Semantic checks come after the CRC so corruption is reported as such.
    for (std::size_t i = 0; i < raw_encodings.size(); ++i)
        if (raw_encodings[i] > 1)
            return DecodeError{DecodeErrorCode::InvalidField, descriptors_offset + i * kDescriptorSize + 8,
                               "qubit encoding " + std::to_string(raw_encodings[i])};
    if ((h.qubit_count == 0) == static_cast<bool>(h.flags & kFlagQuantumPayload))
        return DecodeError{DecodeErrorCode::InvalidField, 3, "quantum-payload flag disagrees with qubit_count"};
    if (!(h.flags & kFlagAck) && p.trailer.ack_session_id != 0)
        return DecodeError{DecodeErrorCode::InvalidField, trailer_offset, "ack_session_id set without ack flag"};
    return p;
}

std::uint64_t seconds_to_ns(double seconds) {
    if (!(seconds >= 0.0) || !std::isfinite(seconds)) throw std::invalid_argument("time must be finite and >= 0");
    // nearbyint honours the default round-to-nearest-even mode.
    return static_cast<std::uint64_t>(std::nearbyint(seconds * 1e9));
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0xF]);
    }
    return out;
}

std::vector<std::uint8_t> from_hex(std::string_view text) {
    std::vector<std::uint8_t> out;
    int pending = -1;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        int v;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
        else throw std::invalid_argument(std::string("invalid hex digit '") + c + "'");
        if (pending < 0) {
            pending = v;
        } else {
            out.push_back(static_cast<std::uint8_t>(pending << 4 | v));
            pending = -1;
        }
    }
    if (pending >= 0) throw std::invalid_argument("odd number of hex digits");
    return out;
}

}  // namespace sqn::packet
