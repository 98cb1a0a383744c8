#include "sqn/rates.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <utility>

namespace sqn {

namespace {
// 1 - 2^-60; above this the pure-loss RCI would exceed the cap.
constexpr double kSaturationEta = 1.0 - 0x1p-60;

struct Accumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;

    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++n;
    }
    RateEstimate finish() const {
        RateEstimate est;
        est.samples = n;
        est.mean = sum / static_cast<double>(n);
        if (n > 1) {
            const double var = std::max(0.0, (sum_sq - sum * est.mean) / static_cast<double>(n - 1));
            est.standard_error = std::sqrt(var / static_cast<double>(n));
        }
        return est;
    }
};
}  // namespace

bool rci_saturated(Transmittance eta) { return eta.value() >= kSaturationEta; }

double rci(Transmittance eta) {
    if (eta.value() <= 0.0) return 0.0;
    if (rci_saturated(eta)) return kRciCap;
    return std::min(kRciCap, -std::log1p(-eta.value()) / std::numbers::ln2);
}

RateEstimate estimate_rate(const OpticalChannelModel& model, std::size_t n_samples, const RngStream& rng) {
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    validate(model);

    if (const auto* fixed = std::get_if<FixedDiffraction>(&model)) {
        return RateEstimate{rci(transmittance(*fixed)), 0.0, n_samples};
    }

    Accumulator acc;
    if (const auto* down = std::get_if<DownlinkGaussianTail>(&model)) {
        if (down->b == 0.0) return RateEstimate{rci(down->eta0), 0.0, n_samples};
        RngStream stream = rng;
        for (std::size_t i = 0; i < n_samples; ++i) acc.add(rci(sample_downlink(*down, stream)));
    } else {
        const auto& up = std::get<UplinkPointingFade>(model);
        for (std::size_t i = 0; i < n_samples; ++i) {
            const double t = (static_cast<double>(i) + 0.5) * up.fade_coherence_time;
            acc.add(rci(sample_uplink(up, rng, t)));
        }
    }
    return acc.finish();
}

double mean_rate(const OpticalChannelModel& model, std::size_t n_samples, const RngStream& rng) {
    return estimate_rate(model, n_samples, rng).mean;
}

RateSurface::RateSurface(std::vector<double> tx_waists, std::vector<double> rx_radii, double distance, double b)
    : tx_waists_(std::move(tx_waists)),
      rx_radii_(std::move(rx_radii)),
      distance_(distance),
      b_(b),
      values_(tx_waists_.size() * rx_radii_.size(), 0.0) {}

RatePoint RateSurface::point(std::size_t i, std::size_t j) const {
    return RatePoint{tx_waists_[i], rx_radii_[j], distance_, b_, at(i, j)};
}

std::vector<RatePoint> RateSurface::points() const {
    std::vector<RatePoint> out;
    out.reserve(values_.size());
    for (std::size_t i = 0; i < rows(); ++i)
        for (std::size_t j = 0; j < cols(); ++j) out.push_back(point(i, j));
    return out;
}

RateSurface sweep(const SweepConfig& config) {
    if (config.tx_waists.empty() || config.rx_radii.empty()) throw std::invalid_argument("sweep axes must be non-empty");
    if (!(config.distance > 0.0)) throw std::invalid_argument("sweep distance must be > 0");
    if (!(config.b >= 0.0)) throw std::invalid_argument("sweep deviation b must be >= 0");
    if (config.n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    for (double w : config.tx_waists)
        if (!(w > 0.0)) throw std::invalid_argument("tx waists must be > 0");
    for (double r : config.rx_radii)
        if (!(r > 0.0)) throw std::invalid_argument("rx radii must be > 0");

    RateSurface surface(config.tx_waists, config.rx_radii, config.distance, config.b);
    const std::size_t total = surface.rows() * surface.cols();

    auto evaluate = [&](std::size_t k) {
        const std::size_t i = k / surface.cols();
        const std::size_t j = k % surface.cols();
        const BeamParams beam{config.tx_waists[i], config.wavelength};
        const DownlinkGaussianTail model{diffraction_transmittance(beam, config.rx_radii[j], config.distance),
                                         config.b};
        const RngStream rng(config.seed, StreamKey{stream_tag::kRates, i, j});
        surface.at(i, j) = mean_rate(model, config.n_samples, rng);
    };

    unsigned threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
    if (threads <= 1) {
        for (std::size_t k = 0; k < total; ++k) evaluate(k);
        return surface;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t k = next.fetch_add(1); k < total && !failed; k = next.fetch_add(1)) {
                    try {
                        evaluate(k);
                    } catch (...) {
                        if (!failed.exchange(true)) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
    return surface;
}

}  // namespace sqn
