#include "sqn/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "sqn/geom.hpp"

namespace sqn {

Transmittance::Transmittance(double eta) : eta_(eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw ChannelError("transmittance outside [0, 1]: " + std::to_string(eta));
}

void validate(const BeamParams& beam) {
    if (!(beam.waist_radius > 0.0)) throw ChannelError("beam waist must be > 0");
    if (!(beam.wavelength > 0.0)) throw ChannelError("wavelength must be > 0");
}

namespace {
struct ModelValidator {
    void operator()(const FixedDiffraction& m) const {
        validate(m.beam);
        if (!(m.rx_radius > 0.0)) throw ChannelError("rx_radius must be > 0");
        if (!(m.distance > 0.0)) throw ChannelError("distance must be > 0");
    }
    void operator()(const DownlinkGaussianTail& m) const {
        if (!(m.b >= 0.0) || !std::isfinite(m.b)) throw ChannelError("deviation b must be >= 0");
    }
    void operator()(const UplinkPointingFade& m) const {
        if (!(m.beam_radius_at_rx > 0.0)) throw ChannelError("beam_radius_at_rx must be > 0");
        if (!(m.sigma_wander >= 0.0) || !std::isfinite(m.sigma_wander)) throw ChannelError("sigma_wander must be >= 0");
        if (!(m.fade_coherence_time > 0.0)) throw ChannelError("fade_coherence_time must be > 0");
    }
};
}  // namespace

void validate(const OpticalChannelModel& model) { std::visit(ModelValidator{}, model); }

double rayleigh_range(const BeamParams& beam) {
    return std::numbers::pi * beam.waist_radius * beam.waist_radius / beam.wavelength;
}

double beam_radius(const BeamParams& beam, double z) {
    validate(beam);
    if (!(z >= 0.0)) throw ChannelError("propagation distance must be >= 0");
    const double ratio = z / rayleigh_range(beam);
    return beam.waist_radius * std::sqrt(1.0 + ratio * ratio);
}

Transmittance diffraction_transmittance(const BeamParams& beam, double rx_radius, double z) {
    validate(beam);
    if (!(rx_radius > 0.0)) throw ChannelError("rx_radius must be > 0");
    if (!(z > 0.0)) throw ChannelError("distance must be > 0");
    const double w = beam_radius(beam, z);
    return Transmittance(-std::expm1(-2.0 * rx_radius * rx_radius / (w * w)));
}

Transmittance transmittance(const FixedDiffraction& model) {
    return diffraction_transmittance(model.beam, model.rx_radius, model.distance);
}

double db_from_eta(Transmittance eta) {
    if (eta.value() == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(eta.value());
}

Transmittance eta_from_db(double loss_db) {
    if (!(loss_db >= 0.0)) throw ChannelError("loss in dB must be >= 0");
    if (std::isinf(loss_db)) return Transmittance(0.0);
    return Transmittance(std::pow(10.0, -loss_db / 10.0));
}

Transmittance sample_downlink(const DownlinkGaussianTail& model, RngStream& rng) {
    if (model.b == 0.0) return model.eta0;
    const double g = model.b * rng.normal();
    const double factor = std::clamp(1.0 - std::abs(g), 0.0, 1.0);
    return Transmittance(model.eta0.value() * factor);
}

Transmittance sample_uplink(const UplinkPointingFade& model, const RngStream& rng, double t) {
    if (model.sigma_wander == 0.0) return model.eta_diffraction;
    const double tau = model.fade_coherence_time;
    const double tc = std::max(t, 0.0);
    // Block k covers [k*tau, (k+1)*tau) as evaluated in floating point.
    auto block = static_cast<std::uint64_t>(std::floor(tc / tau));
    if (static_cast<double>(block + 1) * tau <= tc) ++block;
    else if (block > 0 && static_cast<double>(block) * tau > tc) --block;
    RngStream block_rng = rng.substream(block);
    // r^2 = -2 sigma^2 ln U for a Rayleigh radius.
    const double r2 = -2.0 * model.sigma_wander * model.sigma_wander * std::log(block_rng.uniform_open());
    const double w2 = model.beam_radius_at_rx * model.beam_radius_at_rx;
    return Transmittance(model.eta_diffraction.value() * std::exp(-2.0 * r2 / w2));
}

double uplink_mean_transmittance(const UplinkPointingFade& model) {
    if (model.sigma_wander == 0.0) return model.eta_diffraction.value();
    const double w2 = model.beam_radius_at_rx * model.beam_radius_at_rx;
    const double s2 = model.sigma_wander * model.sigma_wander;
    return model.eta_diffraction.value() * w2 / (w2 + 4.0 * s2);
}

double calibrate_uplink_sigma(Transmittance eta_diffraction, double beam_radius_at_rx, double target_mean_loss_db) {
    if (!(beam_radius_at_rx > 0.0)) throw ChannelError("beam_radius_at_rx must be > 0");
    const double floor_db = db_from_eta(eta_diffraction);
    if (!std::isfinite(floor_db)) throw ChannelError("cannot calibrate a zero-transmittance uplink");
    if (!(target_mean_loss_db >= floor_db) || !std::isfinite(target_mean_loss_db))
        throw ChannelError("infeasible uplink target: " + std::to_string(target_mean_loss_db) +
                           " dB is below the diffraction loss of " + std::to_string(floor_db) + " dB");

    UplinkPointingFade model{eta_diffraction, beam_radius_at_rx, 0.0, 1e-3};
    auto mean_loss = [&](double sigma) {
        model.sigma_wander = sigma;
        return -10.0 * std::log10(uplink_mean_transmittance(model));
    };

    double lo = 0.0;
    double hi = beam_radius_at_rx;
    while (mean_loss(hi) < target_mean_loss_db) {
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mean_loss(mid) < target_mean_loss_db) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double radio_delay(double distance) { return distance / constants::kSpeedOfLight; }

}  // namespace sqn
