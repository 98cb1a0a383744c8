#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "oracles/quadrature.hpp"
#include "oracles/trace_audit.hpp"
#include "sqn_tools/cli.hpp"
#include "sqn_tools/scenario.hpp"

using namespace sqn;
using namespace sqn::tools;

namespace {
struct Out {
    int code;
    std::string out;
    std::string err;
};

Out cli(std::vector<std::string> args, const std::string& input = "") {
    std::istringstream in(input);
    std::ostringstream out, err;
    const int code = run_cli(args, in, out, err);
    return {code, out.str(), err.str()};
}

std::string example() { return std::string(SQN_SCENARIO_DIR) + "/example.yaml"; }

std::string write_temp(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / ("sqn_test_" + name);
    std::ofstream(path) << text;
    return path.string();
}

std::vector<std::vector<double>> csv_rows(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

const char* kMinimal = R"(seed: 3
stations:
  - {id: 1, latitude_deg: 0, longitude_deg: 0}
  - {id: 2, latitude_deg: 0.5, longitude_deg: 2}
satellites:
  - {id: 100, tier: GEO, altitude: 36000000}
  - {id: 11, tier: LEO, altitude: 1200000, phase_deg: 1}
protocol: {pairs_target: 500}
requests:
  - {a: 1, b: 2, qubits: 1, t: 0}
)";
}  // namespace

TEST_CASE("scenario parsing") {
    const auto sc = parse_scenario(kMinimal);
    CHECK(sc.seed == 3);
    CHECK(sc.network.stations.size() == 2);
    CHECK(sc.network.satellites.size() == 2);
    CHECK(sc.network.params.pairs_target == 500);
    REQUIRE(sc.requests.size() == 1);
    CHECK(sc.requests[0].qubits == 1);
    CHECK(std::abs(sc.network.stations[1].latitude - 0.5 * M_PI / 180) < 1e-15);

    const auto loaded = load_scenario(example());
    CHECK(loaded.seed == 42);
    CHECK(loaded.network.stations.size() == 2);
    CHECK(loaded.network.satellites.size() == 5);
}

TEST_CASE("scenario errors name the field") {
    std::string dup = kMinimal;
    dup.replace(dup.find("id: 2,"), 6, "id: 1,");
    try {
        parse_scenario(dup);
        FAIL("duplicate id accepted");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("1") != std::string::npos);
        CHECK(e.field().find("stations") != std::string::npos);
    }
    std::string unknown = kMinimal;
    unknown.replace(unknown.find("seed: 3"), 7, "seed: 3\ncolour: blue");
    CHECK_THROWS_AS(parse_scenario(unknown), ConfigError);
    std::string bad_tier = kMinimal;
    bad_tier.replace(bad_tier.find("tier: GEO"), 9, "tier: MEO");
    CHECK_THROWS_AS(parse_scenario(bad_tier), ConfigError);
    std::string low = kMinimal;
    low.replace(low.find("altitude: 1200000"), 17, "altitude: 300000");
    CHECK_THROWS_AS(parse_scenario(low), ConfigError);
    std::string zero_q = kMinimal;
    zero_q.replace(zero_q.find("qubits: 1"), 9, "qubits: 0");
    CHECK_THROWS_AS(parse_scenario(zero_q), ConfigError);
    CHECK_THROWS_AS(parse_scenario("stations: [1, 2"), ConfigError);
}

TEST_CASE("run subcommand") {
    const auto a = cli({"run", example()});
    REQUIRE(a.code == 0);
    const auto b = cli({"run", example()});
    CHECK(a.out == b.out);
    const auto audit = oracle::audit_trace(a.out, 1.0);
    CHECK(audit.ok());
    CHECK(audit.summary_seen);
    CHECK(audit.summary_delivered == audit.summary_consumed);
    CHECK(audit.summary_delivered == 20);

    const auto other_seed = cli({"--seed", "7", "run", example()});
    REQUIRE(other_seed.code == 0);
    CHECK(other_seed.out != a.out);

    CHECK(cli({"run", "/nonexistent/scenario.yaml"}).code == 2);
    CHECK(cli({"--format", "csv", "run", example()}).code == 2);

    std::string dup = kMinimal;
    dup.replace(dup.find("id: 2,"), 6, "id: 1,");
    const auto bad = cli({"run", write_temp("dup.yaml", dup)});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("1") != std::string::npos);
}

TEST_CASE("run writes to a file") {
    const auto path = (std::filesystem::temp_directory_path() / "sqn_test_trace.jsonl").string();
    const auto r = cli({"--output", path, "run", write_temp("min.yaml", kMinimal)});
    REQUIRE(r.code == 0);
    std::ifstream in(path);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text == cli({"run", write_temp("min.yaml", kMinimal)}).out);
}

TEST_CASE("rates-sweep output") {
    const auto r = cli({"rates-sweep", "--b", "0", "--distance", "200e3", "--waists", "0.25", "--rx", "0.25", "--samples", "10"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("tx_waist_m,rx_radius_m,distance_m,b,mean_rate_ebits\n", 0) == 0);
    const auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 1);
    const double expect = oracle::pure_loss_rci(oracle::gaussian_aperture_eta(0.25, 0.25, 200e3));
    CHECK(rows[0][4] == doctest::Approx(expect).epsilon(1e-12));
    CHECK(std::abs(rows[0][4] - 0.826) < 2e-3);

    const std::vector<std::string> args{"--seed", "5", "rates-sweep", "--waists", "0.1:1.0:4", "--rx", "0.2,0.6,1.2",
                                        "--samples", "2000"};
    const auto first = cli(args);
    CHECK(first.code == 0);
    CHECK(csv_rows(first.out).size() == 12);
    CHECK(cli(args).out == first.out);
    auto par = args;
    par.insert(par.end(), {"--threads", "4"});
    CHECK(cli(par).out == first.out);

    const auto jl = cli({"--format", "jsonl", "rates-sweep", "--waists", "0.5", "--rx", "0.5", "--samples", "100"});
    REQUIRE(jl.code == 0);
    const auto j = nlohmann::json::parse(jl.out);
    CHECK(j.at("tx_waist_m").get<double>() == 0.5);
}

TEST_CASE("rates-sweep rejects malformed input") {
    CHECK(cli({"rates-sweep", "--waists", "0.1:1.0"}).code == 2);
    CHECK(cli({"rates-sweep", "--waists", "a,b"}).code == 2);
    CHECK(cli({"rates-sweep", "--waists", "-0.1"}).code == 2);
    CHECK(cli({"rates-sweep", "--samples", "0"}).code == 2);
    CHECK(cli({"rates-sweep", "--bogus"}).code == 2);
    CHECK(cli({"no-such-command"}).code == 2);
}

TEST_CASE("channel-sample") {
    const auto fixed = cli({"channel-sample", "--model", "downlink", "--b", "0", "--eta0", "0.3", "--n", "50"});
    REQUIRE(fixed.code == 0);
    for (const auto& row : csv_rows(fixed.out)) CHECK(row[1] == 0.3);

    const auto up = cli({"channel-sample", "--model", "uplink", "--n", "1000000", "--dt", "1e-3"});
    REQUIRE(up.code == 0);
    double s = 0;
    const auto rows = csv_rows(up.out);
    REQUIRE(rows.size() == 1'000'000);
    for (const auto& row : rows) s += row[1];
    CHECK(std::abs(-10 * std::log10(s / rows.size()) - 20.0) < 0.1);

    const auto blocks = cli({"channel-sample", "--model", "uplink", "--n", "100", "--dt", "1e-4"});
    const auto brows = csv_rows(blocks.out);
    for (std::size_t k = 0; k < brows.size(); ++k)
        if (static_cast<long>(std::floor(brows[k][0] / 1e-3 + 1e-9)) == static_cast<long>(std::floor(brows[k - (k % 10)][0] / 1e-3 + 1e-9)))
            CHECK(brows[k][1] == brows[k - (k % 10)][1]);

    CHECK(cli({"channel-sample", "--model", "uplink", "--target-db", "1"}).code == 2);
    CHECK(cli({"channel-sample", "--model", "warp"}).code == 2);
    CHECK(cli({"--seed", "3", "channel-sample", "--n", "100"}).out == cli({"--seed", "3", "channel-sample", "--n", "100"}).out);
}

TEST_CASE("packet subcommands") {
    const std::string spec = R"({"requesting_station_id": 1, "receiving_station_id": 2, "transmit_time_ns": 99,
        "qubits": [{"qubit_id": 5, "entanglement_group": 1, "encoding": 1}], "ack_session_id": 4,
        "error_correction": "beef"})";
    const auto enc = cli({"packet", "encode"}, spec);
    REQUIRE(enc.code == 0);
    CHECK(enc.out.rfind("51500103", 0) == 0);
    const auto dec = cli({"packet", "decode"}, enc.out);
    REQUIRE(dec.code == 0);
    const auto j = nlohmann::json::parse(dec.out);
    CHECK(j.at("qubit_count").get<int>() == 1);
    CHECK(j.at("ack_session_id").get<int>() == 4);
    CHECK(j.at("error_correction").get<std::string>() == "beef");
    CHECK(cli({"packet", "encode"}, nlohmann::json::parse(dec.out).dump()).out == enc.out);

    std::string corrupt = enc.out;
    corrupt[10] = corrupt[10] == '0' ? '1' : '0';
    const auto bad = cli({"packet", "decode"}, corrupt);
    CHECK(bad.code == 3);
    CHECK(nlohmann::json::parse(bad.out).at("error") == "CrcMismatch");

    CHECK(cli({"packet", "encode"}, "{not json").code == 2);
    CHECK(cli({"packet", "encode"}, R"({"flags": 4})").code == 2);
}
