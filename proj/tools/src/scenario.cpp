#include "sqn_tools/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <utility>

#include <yaml-cpp/yaml.h>

namespace sqn::tools {

namespace {

std::string format_message(const std::string& field, int line, const std::string& what) {
    std::ostringstream os;
    if (line > 0) os << "line " << line << ": ";
    if (!field.empty()) os << field << ": ";
    os << what;
    return os.str();
}

int line_of(const YAML::Node& node) { return node.Mark().line >= 0 ? node.Mark().line + 1 : 0; }

constexpr double kDeg = std::numbers::pi / 180.0;

/// Reads typed fields from one YAML mapping and rejects unknown keys.
class Fields {
public:
    Fields(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.IsMap()) throw ConfigError(path_, line_of(node_), "expected a mapping");
    }

    /// Call once every expected key has been read.
    void done() const {
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.contains(key)) throw ConfigError(child(key), line_of(kv.first), "unknown key");
        }
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return static_cast<bool>(std::as_const(node_)[key]);
    }

    YAML::Node raw(const std::string& key) {
        seen_.insert(key);
        return std::as_const(node_)[key];
    }

    template <typename T>
    T get(const std::string& key, T fallback) {
        seen_.insert(key);
        const YAML::Node v = std::as_const(node_)[key];
        if (!v) return fallback;
        return convert<T>(v, key);
    }

    template <typename T>
    T require(const std::string& key) {
        seen_.insert(key);
        const YAML::Node v = std::as_const(node_)[key];
        if (!v) throw ConfigError(child(key), line_of(node_), "missing required field");
        return convert<T>(v, key);
    }

    /// Angle given either in radians under `key` or in degrees under `key_deg`.
    double angle(const std::string& key, double fallback) {
        const bool rad = has(key);
        const bool deg = has(key + "_deg");
        if (rad && deg) throw ConfigError(child(key), line_of(node_), "give either radians or degrees, not both");
        if (rad) return get<double>(key, fallback);
        if (deg) return get<double>(key + "_deg", 0.0) * kDeg;
        return fallback;
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    int line() const { return line_of(node_); }

private:
    template <typename T>
    T convert(const YAML::Node& v, const std::string& key) {
        try {
            return v.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError(child(key), line_of(v), "cannot convert value '" + v.Scalar() + "'");
        }
    }

    YAML::Node node_;
    std::string path_;
    std::set<std::string> seen_;
};

GroundStation parse_station(const YAML::Node& node, const std::string& path) {
    Fields f(node, path);
    GroundStation gs;
    gs.id = f.require<std::uint32_t>("id");
    gs.latitude = f.angle("latitude", 0.0);
    gs.longitude = f.angle("longitude", 0.0);
    gs.aperture_radius = f.get<double>("aperture_radius", gs.aperture_radius);
    gs.memory_coherence_time = f.get<double>("memory_coherence_time", gs.memory_coherence_time);
    gs.memory_capacity = f.get<std::uint64_t>("memory_capacity", gs.memory_capacity);
    f.done();
    try {
        validate(gs);
    } catch (const GeometryError& e) {
        throw ConfigError(path, f.line(), e.what());
    }
    return gs;
}

Satellite parse_satellite(const YAML::Node& node, const std::string& path, double leo_min, double leo_max) {
    Fields f(node, path);
    Satellite sat;
    sat.id = f.require<std::uint32_t>("id");
    const auto tier = f.require<std::string>("tier");
    if (tier == "LEO" || tier == "leo") sat.tier = Tier::LEO;
    else if (tier == "GEO" || tier == "geo") sat.tier = Tier::GEO;
    else throw ConfigError(f.child("tier"), f.line(), "tier must be LEO or GEO");
    sat.altitude = f.get<double>("altitude", sat.tier == Tier::GEO ? constants::kGeoAltitude : sat.altitude);
    sat.inclination = f.angle("inclination", 0.0);
    sat.raan = f.angle("raan", 0.0);
    sat.phase_at_epoch = f.angle("phase", 0.0);
    sat.aperture_radius = f.get<double>("aperture_radius", sat.aperture_radius);
    f.done();
    try {
        validate(sat, leo_min, leo_max);
    } catch (const GeometryError& e) {
        throw ConfigError(path, f.line(), e.what());
    }
    return sat;
}

RequestSpec parse_request(const YAML::Node& node, const std::string& path) {
    Fields f(node, path);
    RequestSpec r;
    r.a = f.require<std::uint32_t>("a");
    r.b = f.require<std::uint32_t>("b");
    r.qubits = f.get<std::uint64_t>("qubits", r.qubits);
    r.t = f.get<double>("t", r.t);
    f.done();
    return r;
}

std::string indexed(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

}  // namespace

ConfigError::ConfigError(std::string field, int line, const std::string& what)
    : std::runtime_error(format_message(field, line, what)), field_(std::move(field)), line_(line) {}

Scenario parse_scenario(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("", e.mark.line + 1, e.msg);
    }
    if (!root || root.IsNull()) throw ConfigError("", 0, "empty scenario");

    Scenario sc;
    Network& net = sc.network;
    Fields top(root, "");
    sc.seed = top.get<std::uint64_t>("seed", sc.seed);
    sc.t_end = top.get<double>("t_end", sc.t_end);

    double leo_min = constants::kLeoMinAltitude;
    double leo_max = constants::kLeoMaxAltitude;
    if (top.has("flags")) {
        Fields f(top.raw("flags"), "flags");
        net.params.earth_rotation = f.get<bool>("earth_rotation", false);
        net.params.min_elevation = f.angle("min_elevation", constants::kDefaultMinElevation);
        leo_min = f.get<double>("leo_min_altitude", leo_min);
        leo_max = f.get<double>("leo_max_altitude", leo_max);
        f.done();
    }

    std::map<std::uint32_t, int> station_lines;
    const YAML::Node stations = top.raw("stations");
    if (!stations || !stations.IsSequence()) throw ConfigError("stations", top.line(), "expected a list of stations");
    for (std::size_t i = 0; i < stations.size(); ++i) {
        const auto path = indexed("stations", i);
        GroundStation gs = parse_station(stations[i], path);
        if (station_lines.contains(gs.id))
            throw ConfigError(path + ".id", line_of(stations[i]), "duplicate station id " + std::to_string(gs.id));
        station_lines[gs.id] = line_of(stations[i]);
        net.stations.push_back(gs);
    }

    std::set<std::uint32_t> sat_ids;
    const YAML::Node sats = top.raw("satellites");
    if (!sats || !sats.IsSequence()) throw ConfigError("satellites", top.line(), "expected a list of satellites");
    for (std::size_t i = 0; i < sats.size(); ++i) {
        const auto path = indexed("satellites", i);
        Satellite sat = parse_satellite(sats[i], path, leo_min, leo_max);
        if (!sat_ids.insert(sat.id).second)
            throw ConfigError(path + ".id", line_of(sats[i]), "duplicate satellite id " + std::to_string(sat.id));
        net.satellites.push_back(sat);
    }

    if (top.has("channel")) {
        Fields ch(top.raw("channel"), "channel");
        if (ch.has("downlink")) {
            Fields dl(ch.raw("downlink"), "channel.downlink");
            net.downlink.b = dl.get<double>("b", net.downlink.b);
            net.downlink.wavelength = dl.get<double>("wavelength", net.downlink.wavelength);
            if (dl.has("fixed_eta")) {
                const YAML::Node fx = dl.raw("fixed_eta");
                if (!fx.IsMap()) throw ConfigError("channel.downlink.fixed_eta", line_of(fx), "expected station-id: eta map");
                for (const auto& kv : fx) {
                    const auto id = kv.first.as<std::uint32_t>();
                    const auto eta = kv.second.as<double>();
                    if (!(eta >= 0.0 && eta <= 1.0))
                        throw ConfigError("channel.downlink.fixed_eta." + std::to_string(id), line_of(kv.second),
                                          "eta must lie in [0, 1]");
                    net.downlink.fixed_eta[id] = eta;
                }
            }
            dl.done();
        }
        ch.done();
    }

    if (top.has("protocol")) {
        Fields p(top.raw("protocol"), "protocol");
        auto& params = net.params;
        params.pairs_target = p.get<std::uint64_t>("pairs_target", params.pairs_target);
        params.pair_rate_hz = p.get<double>("pair_rate_hz", params.pair_rate_hz);
        params.min_raw_pairs = p.get<std::uint64_t>("min_raw_pairs", params.min_raw_pairs);
        params.teleport_interval = p.get<double>("teleport_interval", params.teleport_interval);
        if (p.has("distillation")) {
            Fields d(p.raw("distillation"), "protocol.distillation");
            params.policy.rounds = d.get<std::uint32_t>("rounds", params.policy.rounds);
            if (d.has("yield_rate")) params.policy.yield_rate = d.get<double>("yield_rate", 0.0);
            d.done();
        }
        p.done();
    }

    const YAML::Node reqs = top.raw("requests");
    if (reqs) {
        if (!reqs.IsSequence()) throw ConfigError("requests", line_of(reqs), "expected a list of requests");
        for (std::size_t i = 0; i < reqs.size(); ++i) {
            const auto path = indexed("requests", i);
            RequestSpec r = parse_request(reqs[i], path);
            for (auto id : {r.a, r.b})
                if (!station_lines.contains(id))
                    throw ConfigError(path, line_of(reqs[i]), "unknown station id " + std::to_string(id));
            if (r.a == r.b) throw ConfigError(path, line_of(reqs[i]), "request endpoints must differ");
            if (r.qubits < 1) throw ConfigError(path + ".qubits", line_of(reqs[i]), "must request at least one qubit");
            sc.requests.push_back(r);
        }
    }

    top.done();
    validate(sc);
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", 0, "cannot open scenario file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

void validate(const Scenario& sc) {
    const Network& net = sc.network;
    std::set<std::uint32_t> stations;
    for (const auto& gs : net.stations) {
        if (!stations.insert(gs.id).second) throw ConfigError("stations", 0, "duplicate station id " + std::to_string(gs.id));
        try {
            validate(gs);
        } catch (const GeometryError& e) {
            throw ConfigError("stations", 0, e.what());
        }
    }
    std::set<std::uint32_t> sats;
    for (const auto& s : net.satellites)
        if (!sats.insert(s.id).second) throw ConfigError("satellites", 0, "duplicate satellite id " + std::to_string(s.id));

    if (!(net.downlink.b >= 0.0) || !std::isfinite(net.downlink.b)) throw ConfigError("channel.downlink.b", 0, "must be >= 0");
    if (!(net.downlink.wavelength > 0.0)) throw ConfigError("channel.downlink.wavelength", 0, "must be > 0");
    for (const auto& [id, eta] : net.downlink.fixed_eta)
        if (!stations.contains(id))
            throw ConfigError("channel.downlink.fixed_eta", 0, "unknown station id " + std::to_string(id));

    const auto& p = net.params;
    if (!(p.pair_rate_hz > 0.0)) throw ConfigError("protocol.pair_rate_hz", 0, "must be > 0");
    if (!(p.teleport_interval >= 0.0)) throw ConfigError("protocol.teleport_interval", 0, "must be >= 0");
    if (p.policy.rounds < 1) throw ConfigError("protocol.distillation.rounds", 0, "must be >= 1");
    if (p.policy.yield_rate && !(*p.policy.yield_rate >= 0.0 && *p.policy.yield_rate <= 1.0))
        throw ConfigError("protocol.distillation.yield_rate", 0, "must lie in [0, 1]");
    if (!(std::abs(p.min_elevation) <= std::numbers::pi / 2)) throw ConfigError("flags.min_elevation", 0, "must lie in [-pi/2, pi/2]");

    if (!(sc.t_end >= 0.0) || !std::isfinite(sc.t_end)) throw ConfigError("t_end", 0, "must be finite and >= 0");
    for (std::size_t i = 0; i < sc.requests.size(); ++i) {
        const auto& r = sc.requests[i];
        const auto path = indexed("requests", i);
        if (!stations.contains(r.a) || !stations.contains(r.b)) throw ConfigError(path, 0, "unknown station id");
        if (r.a == r.b) throw ConfigError(path, 0, "request endpoints must differ");
        if (r.qubits < 1) throw ConfigError(path + ".qubits", 0, "must request at least one qubit");
        if (!(r.t >= 0.0)) throw ConfigError(path + ".t", 0, "must be >= 0");
    }
}

}  // namespace sqn::tools
