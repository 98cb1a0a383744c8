#include "sqn/geom.hpp"

#include <algorithm>
#include <numbers>
#include <string>

namespace sqn {

using constants::kEarthRadius;

void validate(const GroundStation& gs) {
    const auto where = "station " + std::to_string(gs.id) + ": ";
    if (!(std::abs(gs.latitude) <= std::numbers::pi / 2)) throw GeometryError(where + "latitude outside [-pi/2, pi/2]");
    if (!std::isfinite(gs.longitude)) throw GeometryError(where + "longitude must be finite");
    if (!(gs.aperture_radius > 0.0)) throw GeometryError(where + "aperture_radius must be > 0");
    if (!(gs.memory_coherence_time > 0.0)) throw GeometryError(where + "memory_coherence_time must be > 0");
}

void validate(const Satellite& sat, double leo_min_altitude, double leo_max_altitude) {
    const auto where = "satellite " + std::to_string(sat.id) + ": ";
    if (!(sat.aperture_radius > 0.0)) throw GeometryError(where + "aperture_radius must be > 0");
    if (sat.tier == Tier::LEO) {
        if (!(sat.altitude >= leo_min_altitude && sat.altitude <= leo_max_altitude))
            throw GeometryError(where + "LEO altitude outside scenario bounds");
    } else if (sat.altitude != constants::kGeoAltitude) {
        throw GeometryError(where + "GEO altitude must be 36000 km");
    }
    if (!std::isfinite(sat.inclination) || !std::isfinite(sat.raan) || !std::isfinite(sat.phase_at_epoch))
        throw GeometryError(where + "orbital angles must be finite");
}

double orbital_radius(const Satellite& sat) { return kEarthRadius + sat.altitude; }

double orbital_period(const Satellite& sat) {
    const double a = orbital_radius(sat);
    return 2.0 * std::numbers::pi * std::sqrt(a * a * a / constants::kEarthMu);
}

Vec3 satellite_position(const Satellite& sat, double t) {
    const double r = orbital_radius(sat);
    const double n = std::sqrt(constants::kEarthMu / (r * r * r));
    const double u = sat.phase_at_epoch + n * t;

    // In-plane position, then rotate by inclination about x and RAAN about z.
    const double xp = r * std::cos(u);
    const double yp = r * std::sin(u);
    const double ci = std::cos(sat.inclination), si = std::sin(sat.inclination);
    const double co = std::cos(sat.raan), so = std::sin(sat.raan);
    const double y1 = yp * ci;
    const double z1 = yp * si;
    return {xp * co - y1 * so, xp * so + y1 * co, z1};
}

Vec3 ground_position(const GroundStation& gs, double t, bool earth_rotation) {
    const double lon = earth_rotation ? gs.longitude + constants::kEarthRotationRate * t : gs.longitude;
    const double cl = std::cos(gs.latitude);
    return {kEarthRadius * cl * std::cos(lon), kEarthRadius * cl * std::sin(lon), kEarthRadius * std::sin(gs.latitude)};
}

double elevation(const Vec3& station, const Vec3& target) {
    const Vec3 los = target - station;
    const double d = los.norm();
    const double s = station.norm();
    if (d == 0.0 || s == 0.0) throw GeometryError("elevation undefined for coincident points");
    const double sine = std::clamp(los.dot(station) / (d * s), -1.0, 1.0);
    return std::asin(sine);
}

LinkGeometry link_geometry(const Vec3& a, const Vec3& b, std::optional<Vec3> ground_end) {
    const double distance = (a - b).norm();
    if (distance == 0.0) throw GeometryError("link endpoints coincide");
    LinkGeometry link{distance, std::nullopt, distance / constants::kSpeedOfLight};
    if (ground_end) {
        const Vec3& g = *ground_end;
        if (g == a) link.elevation = elevation(a, b);
        else if (g == b) link.elevation = elevation(b, a);
        else throw GeometryError("ground end must be one of the link endpoints");
    }
    return link;
}

double ground_chord(const GroundStation& a, const GroundStation& b, double t, bool earth_rotation) {
    return (ground_position(a, t, earth_rotation) - ground_position(b, t, earth_rotation)).norm();
}

std::optional<std::uint32_t> select_leo(std::span<const Satellite> candidates, const GroundStation& gs_a,
                                        const GroundStation& gs_b, double t, double min_elevation,
                                        bool earth_rotation) {
    const Vec3 pa = ground_position(gs_a, t, earth_rotation);
    const Vec3 pb = ground_position(gs_b, t, earth_rotation);

    std::optional<std::uint32_t> best;
    double best_score = 0.0;
    for (const Satellite& sat : candidates) {
        if (sat.tier != Tier::LEO) throw GeometryError("select_leo candidates must be LEO");
        const Vec3 ps = satellite_position(sat, t);
        const double ea = elevation(pa, ps);
        const double eb = elevation(pb, ps);
        if (ea < min_elevation || eb < min_elevation) continue;
        const double score = std::min(ea, eb);
        if (!best || score > best_score || (score == best_score && sat.id < *best)) {
            best = sat.id;
            best_score = score;
        }
    }
    return best;
}

}  // namespace sqn
