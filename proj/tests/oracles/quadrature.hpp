#pragma once

// Independent numerical oracles for the test suites. Nothing here calls into
// the library.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

namespace sqn::oracle {

struct GaussLegendre {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule by Newton iteration on P_n.
inline GaussLegendre gauss_legendre(std::size_t n) {
    GaussLegendre rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) p0 = 1.0;
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute the derivative at the converged node.
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
            p0 = p1;
            p1 = pk;
        }
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.weights[i] = w;
        rule.nodes[n - 1 - i] = x;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

template <typename F>
double integrate(const GaussLegendre& rule, double a, double b, F&& f) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return half * sum;
}

/// -log2(1 - eta), written out independently of the library.
inline double pure_loss_rci(double eta) { return eta <= 0.0 ? 0.0 : -std::log2(1.0 - eta); }

/// E[rci(eta0 * max(0, 1 - |G|))], G ~ N(0, b^2), by quadrature over the
/// half-normal density on [0, min(1, 40 b)].
inline double downlink_mean_rci(double eta0, double b, const GaussLegendre& rule) {
    const double upper = std::min(1.0, 40.0 * b);
    const double norm = 2.0 / (b * std::sqrt(2.0 * std::numbers::pi));
    return integrate(rule, 0.0, upper, [&](double g) {
        return pure_loss_rci(eta0 * (1.0 - g)) * norm * std::exp(-0.5 * g * g / (b * b));
    });
}

/// E[exp(-2 r^2 / w^2)] for r ~ Rayleigh(sigma), by quadrature on [0, 40 sigma].
inline double rayleigh_overlap_mean(double w, double sigma, const GaussLegendre& rule) {
    return integrate(rule, 0.0, 40.0 * sigma, [&](double r) {
        return r / (sigma * sigma) * std::exp(-0.5 * r * r / (sigma * sigma)) * std::exp(-2.0 * r * r / (w * w));
    });
}

/// Gaussian-beam diffraction transmittance, restated from first principles.
inline double gaussian_aperture_eta(double w0, double rx, double z, double lambda = 1.55e-6) {
    const double zr = std::numbers::pi * w0 * w0 / lambda;
    const double w = w0 * std::sqrt(1.0 + (z / zr) * (z / zr));
    return 1.0 - std::exp(-2.0 * rx * rx / (w * w));
}

inline double to_db(double eta) { return -10.0 * std::log10(eta); }

}  // namespace sqn::oracle
