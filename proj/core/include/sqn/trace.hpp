#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sqn {

using TraceValue = std::variant<bool, std::int64_t, std::uint64_t, double, std::string>;

struct TraceField {
    std::string key;
    TraceValue value;
};

/// One line of the event trace: {"t":..,"session_id":..,"event":..,"payload":{..}}.
/// Payload keys keep insertion order.
struct TraceRecord {
    double t = 0.0;
    std::uint64_t session_id = 0;
    std::string event;
    std::vector<TraceField> payload;

    const TraceValue* find(std::string_view key) const;
};

class TraceSink {
public:
    virtual ~TraceSink() = default;
    virtual void write(const TraceRecord& record) = 0;
};

class NullSink final : public TraceSink {
public:
    void write(const TraceRecord&) override {}
};

class MemorySink final : public TraceSink {
public:
    void write(const TraceRecord& record) override { records.push_back(record); }
    std::vector<TraceRecord> records;
};

class JsonLinesSink final : public TraceSink {
public:
    explicit JsonLinesSink(std::ostream& out) : out_(out) {}
    void write(const TraceRecord& record) override;

private:
    std::ostream& out_;
};

/// Forwards every record to two sinks.
class TeeSink final : public TraceSink {
public:
    TeeSink(TraceSink& first, TraceSink& second) : first_(first), second_(second) {}
    void write(const TraceRecord& record) override {
        first_.write(record);
        second_.write(record);
    }

private:
    TraceSink& first_;
    TraceSink& second_;
};

std::string to_json_line(const TraceRecord& record);

}  // namespace sqn
