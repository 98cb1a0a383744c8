#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sqn/channel.hpp"
#include "sqn/rng.hpp"

namespace sqn {

/// rci() is capped here instead of returning +inf at eta -> 1.
inline constexpr double kRciCap = 60.0;

/// Reverse coherent information of the pure-loss channel, -log2(1 - eta),
/// in ebits per channel use. Returns kRciCap when eta > 1 - 2^-60.
double rci(Transmittance eta);
bool rci_saturated(Transmittance eta);

struct RateEstimate {
    double mean = 0.0;            // ebits per channel use
    double standard_error = 0.0;  // 0 for deterministic channels
    std::size_t samples = 0;
};

/// Monte-Carlo E[rci(eta)] over `n_samples` draws of the channel.
/// FixedDiffraction is evaluated exactly. Uplink draws use one fading block
/// per sample.
RateEstimate estimate_rate(const OpticalChannelModel& model, std::size_t n_samples, const RngStream& rng);
double mean_rate(const OpticalChannelModel& model, std::size_t n_samples, const RngStream& rng);

struct RatePoint {
    double tx_waist = 0.0;
    double rx_radius = 0.0;
    double distance = 0.0;
    double b = 0.0;
    double mean_rate = 0.0;
};

class RateSurface {
public:
    RateSurface(std::vector<double> tx_waists, std::vector<double> rx_radii, double distance, double b);

    const std::vector<double>& tx_waists() const { return tx_waists_; }
    const std::vector<double>& rx_radii() const { return rx_radii_; }
    double distance() const { return distance_; }
    double b() const { return b_; }

    std::size_t rows() const { return tx_waists_.size(); }
    std::size_t cols() const { return rx_radii_.size(); }

    double& at(std::size_t i, std::size_t j) { return values_[i * cols() + j]; }
    double at(std::size_t i, std::size_t j) const { return values_[i * cols() + j]; }

    RatePoint point(std::size_t i, std::size_t j) const;
    /// Row-major over (waist, rx).
    std::vector<RatePoint> points() const;

private:
    std::vector<double> tx_waists_;
    std::vector<double> rx_radii_;
    double distance_;
    double b_;
    std::vector<double> values_;
};

struct SweepConfig {
    std::vector<double> tx_waists;
    std::vector<double> rx_radii;
    double distance = 1'200'000.0;
    double b = 0.1;
    double wavelength = 1.55e-6;
    std::size_t n_samples = 100'000;
    std::uint64_t seed = 0;
    /// 0 picks std::thread::hardware_concurrency(); 1 runs serially.
    unsigned threads = 1;
};

/// Entry (i, j) is mean_rate of the downlink with eta0 from diffraction at
/// (tx_waists[i], rx_radii[j], distance). Point (i, j) draws from the stream
/// keyed (rates, i, j), so the result is independent of thread count.
RateSurface sweep(const SweepConfig& config);

}  // namespace sqn
