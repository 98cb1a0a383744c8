#pragma once

#include <stdexcept>
#include <variant>

#include "sqn/rng.hpp"

namespace sqn {

class ChannelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Power transmittance of an optical link, always within [0, 1].
class Transmittance {
public:
    constexpr Transmittance() = default;
    explicit Transmittance(double eta);

    double value() const { return eta_; }

    friend bool operator==(const Transmittance&, const Transmittance&) = default;
    friend auto operator<=>(const Transmittance&, const Transmittance&) = default;

private:
    double eta_ = 0.0;
};

struct BeamParams {
    double waist_radius = 0.2;   // m, equal to the transmit aperture radius
    double wavelength = 1.55e-6; // m
};

/// Fixed Gaussian-beam diffraction through a circular receive aperture.
struct FixedDiffraction {
    BeamParams beam;
    double rx_radius = 1.0;  // m
    double distance = 1.0;   // m
};

/// Downlink: fixed aperture loss eta0 degraded by a half-normal tail of
/// deviation b, eta = eta0 * clamp(1 - |G|, 0, 1), G ~ N(0, b^2).
struct DownlinkGaussianTail {
    Transmittance eta0;
    double b = 0.0;
};

/// Uplink beam-wander fading. Within each coherence interval the beam
/// centroid is displaced by a Rayleigh(sigma_wander) radius r and
/// eta = eta_diffraction * exp(-2 r^2 / w^2).
struct UplinkPointingFade {
    Transmittance eta_diffraction;
    double beam_radius_at_rx = 1.0;   // m
    double sigma_wander = 0.0;        // m
    double fade_coherence_time = 1e-3; // s
};

using OpticalChannelModel = std::variant<FixedDiffraction, DownlinkGaussianTail, UplinkPointingFade>;

void validate(const BeamParams& beam);
void validate(const OpticalChannelModel& model);

/// w(z) = w0 sqrt(1 + (z lambda / (pi w0^2))^2).
double beam_radius(const BeamParams& beam, double z);
double rayleigh_range(const BeamParams& beam);

/// Centred Gaussian power fraction through an aperture of radius rx at range z.
Transmittance diffraction_transmittance(const BeamParams& beam, double rx_radius, double z);
Transmittance transmittance(const FixedDiffraction& model);

/// Loss in dB; +infinity for eta = 0.
double db_from_eta(Transmittance eta);
/// Inverse of db_from_eta; L must be >= 0 (infinity maps to 0).
Transmittance eta_from_db(double loss_db);

Transmittance sample_downlink(const DownlinkGaussianTail& model, RngStream& rng);

/// Block-fading uplink sample at time t. The value depends only on the
/// stream's key and the interval index floor(t / fade_coherence_time).
Transmittance sample_uplink(const UplinkPointingFade& model, const RngStream& rng, double t);

/// Closed-form E[eta] = eta_diffraction * gamma / (gamma + 1),
/// gamma = w^2 / (4 sigma^2).
double uplink_mean_transmittance(const UplinkPointingFade& model);

/// Wander deviation whose mean uplink loss equals `target_mean_loss_db`.
/// Throws ChannelError when the target is below the pure-diffraction loss.
double calibrate_uplink_sigma(Transmittance eta_diffraction, double beam_radius_at_rx, double target_mean_loss_db);

/// Classical radio links are lossless; only light-time is charged.
double radio_delay(double distance);

}  // namespace sqn
