#include "sqn/trace.hpp"

#include <ostream>

#include "json.hpp"

namespace sqn {

const TraceValue* TraceRecord::find(std::string_view key) const {
    for (const auto& f : payload)
        if (f.key == key) return &f.value;
    return nullptr;
}

std::string to_json_line(const TraceRecord& record) {
    nlohmann::ordered_json payload = nlohmann::ordered_json::object();
    for (const auto& field : record.payload)
        std::visit([&](const auto& v) { payload[field.key] = v; }, field.value);

    nlohmann::ordered_json line;
    line["t"] = record.t;
    line["session_id"] = record.session_id;
    line["event"] = record.event;
    line["payload"] = std::move(payload);
    return line.dump();
}

void JsonLinesSink::write(const TraceRecord& record) { out_ << to_json_line(record) << '\n'; }

}  // namespace sqn
