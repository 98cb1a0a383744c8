#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>

namespace sqn {

namespace constants {
inline constexpr double kEarthRadius = 6'371'000.0;       // m, spherical
inline constexpr double kEarthMu = 3.986004418e14;         // m^3/s^2
inline constexpr double kSpeedOfLight = 299'792'458.0;     // m/s
inline constexpr double kEarthRotationRate = 7.2921159e-5; // rad/s, sidereal
inline constexpr double kGeoAltitude = 36'000'000.0;       // m
inline constexpr double kLeoMinAltitude = 500'000.0;
inline constexpr double kLeoMaxAltitude = 1'200'000.0;
inline constexpr double kDefaultMinElevation = 0.17453292519943295;  // 10 deg
}  // namespace constants

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }

    friend bool operator==(const Vec3&, const Vec3&) = default;
};

struct GroundStation {
    std::uint32_t id = 0;
    double latitude = 0.0;   // rad
    double longitude = 0.0;  // rad
    double aperture_radius = 0.5;        // m
    double memory_coherence_time = 1.0;  // s
    std::uint64_t memory_capacity = 100'000;  // stored pairs
};

enum class Tier { LEO, GEO };

struct Satellite {
    std::uint32_t id = 0;
    Tier tier = Tier::LEO;
    double altitude = 1'200'000.0;  // m above the spherical Earth
    double inclination = 0.0;       // rad
    double raan = 0.0;              // rad
    double phase_at_epoch = 0.0;    // argument of latitude at t = 0, rad
    double aperture_radius = 0.2;   // m
};

struct LinkGeometry {
    double distance = 0.0;                // m
    std::optional<double> elevation;      // rad, present iff a ground end was given
    double propagation_delay = 0.0;       // s
};

class GeometryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Throws GeometryError when a station or satellite record breaks its invariants.
void validate(const GroundStation& gs);
void validate(const Satellite& sat, double leo_min_altitude = constants::kLeoMinAltitude,
              double leo_max_altitude = constants::kLeoMaxAltitude);

double orbital_radius(const Satellite& sat);
double orbital_period(const Satellite& sat);

/// Earth-centred inertial position of a circular-orbit satellite at time t >= 0.
Vec3 satellite_position(const Satellite& sat, double t);

/// Station position; co-rotates with the Earth when `earth_rotation` is set.
Vec3 ground_position(const GroundStation& gs, double t, bool earth_rotation);

/// Distance, delay and (when `ground_end` is one of the endpoints) the
/// elevation of the other endpoint above the local horizon there.
LinkGeometry link_geometry(const Vec3& a, const Vec3& b, std::optional<Vec3> ground_end = std::nullopt);

/// Elevation of `target` as seen from a station at `station`.
double elevation(const Vec3& station, const Vec3& target);

/// Chord between two stations, for the terrestrial radio path.
double ground_chord(const GroundStation& a, const GroundStation& b, double t, bool earth_rotation);

/// LEO candidate maximising min(elevation at a, elevation at b) among those
/// at or above `min_elevation` from both stations. Ties go to the lowest id.
std::optional<std::uint32_t> select_leo(std::span<const Satellite> candidates, const GroundStation& gs_a,
                                        const GroundStation& gs_b, double t,
                                        double min_elevation = constants::kDefaultMinElevation,
                                        bool earth_rotation = false);

}  // namespace sqn
