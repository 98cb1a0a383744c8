#include "sqn_tools/cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "sqn/channel.hpp"
#include "sqn/packet.hpp"
#include "sqn/proto.hpp"
#include "sqn/rates.hpp"
#include "sqn/simulator.hpp"
#include "sqn/trace.hpp"
#include "sqn_tools/scenario.hpp"

namespace sqn::tools {

namespace {

using nlohmann::ordered_json;

/// Input or usage problem; maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure while executing valid input; maps to exit code 3.
class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(std::begin(buf), std::end(buf), v);
    return std::string(buf, res.ptr);
}

double parse_number(const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    while (first < last && std::isspace(static_cast<unsigned char>(*first))) ++first;
    while (last > first && std::isspace(static_cast<unsigned char>(last[-1]))) --last;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last || first == last) throw UsageError("malformed number '" + text + "'");
    return v;
}

/// Grid spec: comma-separated values, or start:stop:count for an inclusive linspace.
std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> out;
    if (spec.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw UsageError("grid range must be start:stop:count, got '" + spec + "'");
        const double start = parse_number(parts[0]);
        const double stop = parse_number(parts[1]);
        const double count = parse_number(parts[2]);
        if (count < 1 || count != std::floor(count)) throw UsageError("grid count must be a positive integer");
        const auto n = static_cast<std::size_t>(count);
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(n == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(n - 1));
    } else {
        std::stringstream ss(spec);
        for (std::string p; std::getline(ss, p, ',');) out.push_back(parse_number(p));
    }
    if (out.empty()) throw UsageError("empty grid '" + spec + "'");
    for (double v : out)
        if (!(v > 0.0) || !std::isfinite(v)) throw UsageError("grid values must be positive, got '" + spec + "'");
    return out;
}

enum class Format { Auto, Csv, Jsonl };

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string output;
    std::string format;
    bool binary = false;

    Format fmt() const {
        if (format.empty()) return Format::Auto;
        if (format == "csv") return Format::Csv;
        return Format::Jsonl;
    }
};

/// Tabular writer for the csv / jsonl output formats.
class Table {
public:
    Table(std::ostream& os, Format format, std::vector<std::string> columns)
        : os_(os), jsonl_(format == Format::Jsonl), columns_(std::move(columns)) {
        if (!jsonl_) {
            for (std::size_t i = 0; i < columns_.size(); ++i) os_ << (i ? "," : "") << columns_[i];
            os_ << '\n';
        }
    }

    void row(const std::vector<double>& values) {
        if (jsonl_) {
            ordered_json j;
            for (std::size_t i = 0; i < columns_.size(); ++i) {
                if (std::isfinite(values[i])) j[columns_[i]] = values[i];
                else j[columns_[i]] = num(values[i]);
            }
            os_ << j.dump() << '\n';
        } else {
            for (std::size_t i = 0; i < values.size(); ++i) os_ << (i ? "," : "") << num(values[i]);
            os_ << '\n';
        }
    }

private:
    std::ostream& os_;
    bool jsonl_;
    std::vector<std::string> columns_;
};

// ---------------------------------------------------------------------------
// run

struct RunOptions {
    std::string scenario;
    std::optional<double> t_end;
};

void cmd_run(const RunOptions& opt, const Globals& g, std::ostream& os, std::ostream& summary_out, bool to_file) {
    if (g.fmt() == Format::Csv) throw UsageError("run writes a JSON-lines trace; --format csv is not supported");
    Scenario sc = load_scenario(opt.scenario);
    if (g.seed) sc.seed = *g.seed;
    if (opt.t_end) sc.t_end = *opt.t_end;
    validate(sc);

    Simulator sim(sc.seed);
    JsonLinesSink sink(os);
    Protocol proto(sim, sc.network, sink);
    for (const auto& r : sc.requests) proto.request(r.a, r.b, r.qubits, r.t);
    try {
        sim.run_until(sc.t_end);
    } catch (const EventError& e) {
        throw RuntimeFailure(e.what());
    }
    proto.emit_summary(sim.now());

    if (to_file) {
        const auto s = proto.summary();
        summary_out << "sessions=" << s.sessions << " done=" << s.sessions_done << " failed=" << s.sessions_failed
                    << " qubits_delivered=" << s.qubits_delivered << " ebits_consumed=" << s.ebits_consumed
                    << " pairs_attempted=" << s.pairs_attempted << " pairs_survived=" << s.pairs_survived << '\n';
    }
}

// ---------------------------------------------------------------------------
// rates-sweep

struct SweepOptions {
    double distance = 1'200'000.0;
    double b = 0.1;
    std::string waists = "0.1:1.0:10";
    std::string rx = "0.125:1.25:10";
    std::size_t samples = 100'000;
    double wavelength = 1.55e-6;
    unsigned threads = 1;
};

void cmd_sweep(const SweepOptions& opt, const Globals& g, std::ostream& os) {
    SweepConfig cfg;
    cfg.tx_waists = parse_grid(opt.waists);
    cfg.rx_radii = parse_grid(opt.rx);
    cfg.distance = opt.distance;
    cfg.b = opt.b;
    cfg.wavelength = opt.wavelength;
    cfg.n_samples = opt.samples;
    cfg.seed = g.seed.value_or(0);
    cfg.threads = opt.threads;
    if (!(cfg.distance > 0.0)) throw UsageError("--distance must be > 0");
    if (!(cfg.b >= 0.0)) throw UsageError("--b must be >= 0");
    if (!(cfg.wavelength > 0.0)) throw UsageError("--wavelength must be > 0");
    if (cfg.n_samples < 1) throw UsageError("--samples must be >= 1");

    const RateSurface surface = sweep(cfg);
    Table table(os, g.fmt(), {"tx_waist_m", "rx_radius_m", "distance_m", "b", "mean_rate_ebits"});
    for (const auto& p : surface.points()) table.row({p.tx_waist, p.rx_radius, p.distance, p.b, p.mean_rate});
}

// ---------------------------------------------------------------------------
// channel-sample

struct SampleOptions {
    std::string model = "downlink";
    std::size_t n = 1000;
    std::optional<double> dt;
    std::optional<double> eta0;
    double b = 0.1;
    std::optional<double> tx_waist;
    std::optional<double> rx_radius;
    std::optional<double> distance;
    double wavelength = 1.55e-6;
    std::optional<double> eta_diffraction;
    std::optional<double> beam_radius;
    std::optional<double> sigma;
    std::optional<double> target_db;
    double coherence_time = 1e-3;
};

void cmd_sample(const SampleOptions& opt, const Globals& g, std::ostream& os) {
    const RngStream rng(g.seed.value_or(0), StreamKey{stream_tag::kChannel, 0, 0});
    const double dt = opt.dt.value_or(opt.model == "uplink" ? opt.coherence_time / 10.0 : 1e-3);
    if (!(dt > 0.0)) throw UsageError("--dt must be > 0");

    auto diffraction = [&](double waist, double rx, double z) {
        const BeamParams beam{opt.tx_waist.value_or(waist), opt.wavelength};
        return diffraction_transmittance(beam, opt.rx_radius.value_or(rx), opt.distance.value_or(z));
    };

    std::function<Transmittance(double)> draw;
    RngStream down_rng = rng;
    if (opt.model == "fixed") {
        const Transmittance eta = opt.eta0 ? Transmittance(*opt.eta0) : diffraction(0.2, 1.25, 1'200'000.0);
        draw = [eta](double) { return eta; };
    } else if (opt.model == "downlink") {
        const DownlinkGaussianTail model{opt.eta0 ? Transmittance(*opt.eta0) : diffraction(0.2, 1.25, 1'200'000.0), opt.b};
        validate(OpticalChannelModel{model});
        draw = [model, &down_rng](double) { return sample_downlink(model, down_rng); };
    } else if (opt.model == "uplink") {
        const double w0 = opt.tx_waist.value_or(0.25);
        const double z = opt.distance.value_or(500'000.0);
        const Transmittance eta_d =
            opt.eta_diffraction ? Transmittance(*opt.eta_diffraction) : diffraction(0.25, 0.2, 500'000.0);
        const double w = opt.beam_radius.value_or(beam_radius(BeamParams{w0, opt.wavelength}, z));
        double sigma = 0.0;
        if (opt.sigma && opt.target_db) throw UsageError("give either --sigma or --target-db, not both");
        if (opt.sigma) sigma = *opt.sigma;
        else sigma = calibrate_uplink_sigma(eta_d, w, opt.target_db.value_or(20.0));
        const UplinkPointingFade model{eta_d, w, sigma, opt.coherence_time};
        validate(OpticalChannelModel{model});
        draw = [model, rng](double t) { return sample_uplink(model, rng, t); };
    } else {
        throw UsageError("--model must be fixed, downlink or uplink");
    }

    Table table(os, g.fmt(), {"t", "eta", "loss_db"});
    for (std::size_t i = 0; i < opt.n; ++i) {
        const double t = static_cast<double>(i) * dt;
        const Transmittance eta = draw(t);
        table.row({t, eta.value(), db_from_eta(eta)});
    }
}

// ---------------------------------------------------------------------------
// packet encode / decode

ordered_json packet_to_json(const packet::Packet& p) {
    ordered_json j;
    j["version"] = p.header.version;
    j["flags"] = p.header.flags;
    j["requesting_station_id"] = p.header.requesting_station_id;
    j["receiving_station_id"] = p.header.receiving_station_id;
    j["transmit_time_ns"] = p.header.transmit_time_ns;
    j["op_commence_time_ns"] = p.header.op_commence_time_ns;
    j["qubit_count"] = p.header.qubit_count;
    j["qubits"] = ordered_json::array();
    for (const auto& q : p.qubits)
        j["qubits"].push_back({{"qubit_id", q.qubit_id},
                               {"entanglement_group", q.entanglement_group},
                               {"encoding", static_cast<int>(q.encoding)}});
    j["ack_session_id"] = p.trailer.ack_session_id;
    j["error_correction"] = packet::to_hex(p.trailer.error_correction);
    return j;
}

packet::Packet packet_from_json(const nlohmann::json& j) {
    packet::Packet p;
    auto& h = p.header;
    h.version = j.value("version", std::uint8_t{packet::kVersion});
    h.requesting_station_id = j.value("requesting_station_id", std::uint32_t{0});
    h.receiving_station_id = j.value("receiving_station_id", std::uint32_t{0});
    h.transmit_time_ns = j.value("transmit_time_ns", std::uint64_t{0});
    h.op_commence_time_ns = j.value("op_commence_time_ns", std::uint64_t{0});
    if (j.contains("qubits")) {
        for (const auto& q : j.at("qubits")) {
            packet::QubitDescriptor d;
            d.qubit_id = q.value("qubit_id", std::uint32_t{0});
            d.entanglement_group = q.value("entanglement_group", std::uint32_t{0});
            const auto& enc = q.contains("encoding") ? q.at("encoding") : nlohmann::json(0);
            int e = 0;
            if (enc.is_string()) {
                const auto s = enc.get<std::string>();
                if (s == "DV") e = 0;
                else if (s == "CV" || s == "CVReference") e = 1;
                else throw UsageError("unknown qubit encoding '" + s + "'");
            } else {
                e = enc.get<int>();
            }
            if (e < 0 || e > 255) throw UsageError("qubit encoding out of range");
            d.encoding = static_cast<packet::Encoding>(e);
            p.qubits.push_back(d);
        }
    }
    if (p.qubits.size() > 0xFFFF) throw UsageError("too many qubits");
    h.qubit_count = static_cast<std::uint16_t>(j.value("qubit_count", p.qubits.size()));
    p.trailer.ack_session_id = j.value("ack_session_id", std::uint32_t{0});
    p.trailer.error_correction = packet::from_hex(j.value("error_correction", std::string{}));
    if (j.contains("flags")) {
        h.flags = j.at("flags").get<std::uint8_t>();
    } else {
        h.flags = p.qubits.empty() ? 0 : packet::kFlagQuantumPayload;
        if (j.value("ack", false) || p.trailer.ack_session_id != 0) h.flags |= packet::kFlagAck;
    }
    return p;
}

std::string slurp(std::istream& in) { return std::string(std::istreambuf_iterator<char>(in), {}); }

void cmd_packet_encode(const Globals& g, std::istream& in, std::ostream& os) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(slurp(in));
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("packet JSON: ") + e.what());
    }
    packet::Packet p;
    try {
        p = packet_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("packet JSON: ") + e.what());
    }
    std::vector<std::uint8_t> bytes;
    try {
        bytes = packet::encode(p);
    } catch (const packet::ValidationError& e) {
        throw UsageError(std::string("invalid packet: ") + e.what());
    }
    if (g.binary) os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    else os << packet::to_hex(bytes) << '\n';
}

void cmd_packet_decode(const Globals& g, std::istream& in, std::ostream& os) {
    const std::string raw = slurp(in);
    std::vector<std::uint8_t> bytes;
    if (g.binary) {
        bytes.assign(raw.begin(), raw.end());
    } else {
        try {
            bytes = packet::from_hex(raw);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("hex input: ") + e.what());
        }
    }
    const auto result = packet::decode(bytes);
    if (const auto* err = std::get_if<packet::DecodeError>(&result)) {
        ordered_json e;
        e["error"] = std::string(packet::to_string(err->code));
        e["offset"] = err->offset;
        e["detail"] = err->detail;
        os << e.dump() << '\n';
        throw RuntimeFailure(std::string("decode failed: ") + std::string(packet::to_string(err->code)));
    }
    os << packet_to_json(std::get<packet::Packet>(result)).dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Satellite-terrestrial quantum network simulator", "sqn"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Root seed for every random stream");
    app.add_option("--output,-o", g.output, "Write output to this file instead of stdout");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "jsonl"}));

    RunOptions run_opt;
    auto* run = app.add_subcommand("run", "Run a scenario and emit a JSON-lines event trace");
    run->add_option("scenario", run_opt.scenario, "Scenario file (YAML)")->required();
    run->add_option("--t-end", run_opt.t_end, "Override the scenario end time");

    SweepOptions sw;
    auto* rates = app.add_subcommand("rates-sweep", "Mean distillation rate over an aperture grid");
    rates->add_option("--distance", sw.distance, "Link distance in metres");
    rates->add_option("--b", sw.b, "Downlink tail deviation");
    rates->add_option("--waists", sw.waists, "Transmit waist grid (m): v1,v2,... or start:stop:count");
    rates->add_option("--rx", sw.rx, "Receiver radius grid (m): v1,v2,... or start:stop:count");
    rates->add_option("--samples", sw.samples, "Monte-Carlo samples per grid point");
    rates->add_option("--wavelength", sw.wavelength, "Wavelength in metres");
    rates->add_option("--threads", sw.threads, "Worker threads (0 = all cores)");

    SampleOptions so;
    auto* sample = app.add_subcommand("channel-sample", "Sample a channel model as a time series");
    sample->add_option("--model", so.model, "fixed | downlink | uplink")
        ->check(CLI::IsMember({"fixed", "downlink", "uplink"}));
    sample->add_option("--n", so.n, "Number of samples");
    sample->add_option("--dt", so.dt, "Sample spacing in seconds");
    sample->add_option("--eta0", so.eta0, "Fixed/downlink base transmittance");
    sample->add_option("--b", so.b, "Downlink tail deviation");
    sample->add_option("--tx-waist", so.tx_waist, "Transmit waist radius (m)");
    sample->add_option("--rx-radius", so.rx_radius, "Receiver aperture radius (m)");
    sample->add_option("--distance", so.distance, "Link distance (m)");
    sample->add_option("--wavelength", so.wavelength, "Wavelength (m)");
    sample->add_option("--eta-diffraction", so.eta_diffraction, "Uplink diffraction transmittance");
    sample->add_option("--beam-radius", so.beam_radius, "Uplink beam radius at the receiver (m)");
    sample->add_option("--sigma", so.sigma, "Uplink beam-wander deviation (m)");
    sample->add_option("--target-db", so.target_db, "Calibrate the uplink to this mean loss (dB)");
    sample->add_option("--coherence-time", so.coherence_time, "Uplink fade coherence time (s)");

    auto* pkt = app.add_subcommand("packet", "Hybrid packet codec");
    pkt->require_subcommand(1);
    auto* enc = pkt->add_subcommand("encode", "JSON on stdin -> packet bytes");
    auto* dec = pkt->add_subcommand("decode", "Packet bytes on stdin -> JSON");
    for (auto* c : {enc, dec}) c->add_flag("--binary", g.binary, "Raw binary instead of hex");

    std::vector<std::string> argv_store{"sqn"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    std::unique_ptr<std::ofstream> file;
    if (!g.output.empty()) {
        file = std::make_unique<std::ofstream>(g.output, std::ios::binary | std::ios::trunc);
        if (!*file) {
            err << "error: cannot open output file " << g.output << '\n';
            return kExitConfig;
        }
    }
    std::ostream& os = file ? *file : out;

    try {
        if (*run) cmd_run(run_opt, g, os, out, static_cast<bool>(file));
        else if (*rates) cmd_sweep(sw, g, os);
        else if (*sample) cmd_sample(so, g, os);
        else if (*enc) cmd_packet_encode(g, in, os);
        else if (*dec) cmd_packet_decode(g, in, os);
        os.flush();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const YAML::Exception& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ChannelError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const RuntimeFailure& e) {
        err << "runtime failure: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "runtime failure: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace sqn::tools
