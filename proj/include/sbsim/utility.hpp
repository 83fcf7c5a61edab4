#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sbsim/rng.hpp"

namespace sbsim {

/// Link geometry and channel statistics shared by all utility evaluations.
struct LinkGeometry {
    std::vector<double> distances; // meters, one per user
    double d_backhaul = 0.0;       // meters
    double alpha = 0.0;            // path-loss exponent
    double sigma2 = 0.0;           // noise power, watts
    double mu = 0.0;               // Rayleigh gain rate parameter

    void validate() const;
};

/// Constants of the battery-dependent efficiency exponent, a > b > 0.
struct EfficiencyExponentParams {
    double a = 0.18;
    double b = 0.03;

    void validate() const;
};

/// Efficiency exponent a + (b - a) * e / e_max: a at empty, b at full.
double g_exponent(double e, const EfficiencyExponentParams& params,
                  double e_max);

/// Received SNR P * h2 / (d^alpha * sigma2).
double snr(double power, double h2, double d, double alpha, double sigma2);

/// Upper incomplete gamma Gamma(0, x) = E1(x) for x > 0.
/// Power series below 1, continued fraction above; underflows to 0 for
/// very large x. Throws std::domain_error for x <= 0.
double exp_gamma0(double x);

/// Fused e^x * Gamma(0, x). Finite and positive down to x ~ 1e-300 where
/// the separate factors would overflow.
double expx_gamma0(double x);

/// Instantaneous utility sum_i W_i log2(1 + gamma_i) / (sum_i P_i)^g(e).
/// Zero whenever all powers are zero.
double instantaneous_utility(std::span<const double> bandwidths,
                             std::span<const double> powers,
                             std::span<const double> h2s, double e,
                             const LinkGeometry& geom,
                             const EfficiencyExponentParams& params,
                             double e_max);

/// Rayleigh-averaged utility in closed form:
/// sum_i W_i e^{x_i} Gamma(0, x_i) / (ln 2 * (sum_i P_i)^g(e)),
/// x_i = mu d_i^alpha sigma2 / P_i. Users with P_i = 0 contribute nothing.
double average_utility(std::span<const double> bandwidths,
                       std::span<const double> powers, double e,
                       const LinkGeometry& geom,
                       const EfficiencyExponentParams& params, double e_max);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo estimate of the channel-averaged utility: draws
/// h2 ~ Exponential(mu) per user per sample and averages the
/// instantaneous numerator over the fixed denominator.
McEstimate mc_average_utility(std::span<const double> bandwidths,
                              std::span<const double> powers, double e,
                              const LinkGeometry& geom,
                              const EfficiencyExponentParams& params,
                              double e_max, RngStream& rng,
                              std::size_t n_samples);

/// sum_i W_i log2(1 + gamma_i), bits per second.
double sum_throughput(std::span<const double> bandwidths,
                      std::span<const double> powers,
                      std::span<const double> h2s, const LinkGeometry& geom);

} // namespace sbsim
