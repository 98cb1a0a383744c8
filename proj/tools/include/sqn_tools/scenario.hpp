#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqn/proto.hpp"

namespace sqn::tools {

/// Configuration problem; carries the offending field path and source line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, int line, const std::string& what);

    const std::string& field() const { return field_; }
    int line() const { return line_; }  // 1-based, 0 when unknown

private:
    std::string field_;
    int line_;
};

struct RequestSpec {
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::uint64_t qubits = 1;
    double t = 0.0;
};

struct Scenario {
    Network network;
    std::vector<RequestSpec> requests;
    std::uint64_t seed = 0;
    double t_end = 10.0;
};

Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text);

/// Throws ConfigError for any broken invariant (ids, ranges, references).
void validate(const Scenario& scenario);

}  // namespace sqn::tools
