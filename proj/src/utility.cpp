#include "sbsim/utility.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sbsim {

namespace {

constexpr double kEulerGamma = 0.5772156649015328606;
constexpr double kLn2 = 0.6931471805599453094;

// Continued fraction for e^x * E1(x), x > 1 (modified Lentz).
double expx_e1_cf(double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    double b = x + 1.0;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 200; ++i) {
        double a = -static_cast<double>(i) * static_cast<double>(i);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        double del = c * d;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    return h; // converged for all practical x > 1 well before the cap
}

// Power series for E1(x), 0 < x <= 1.
double e1_series(double x) {
    double sum = 0.0;
    double term = 1.0;
    for (int k = 1; k <= 80; ++k) {
        term *= -x / static_cast<double>(k);
        double contrib = -term / static_cast<double>(k);
        sum += contrib;
        if (std::fabs(contrib) < 1e-18 * (std::fabs(sum) + 1e-30)) break;
    }
    return -kEulerGamma - std::log(x) + sum;
}

double total(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

void check_vectors(std::span<const double> bandwidths,
                   std::span<const double> powers,
                   const LinkGeometry& geom) {
    if (bandwidths.size() != powers.size() ||
        powers.size() != geom.distances.size())
        throw std::invalid_argument("utility: vector lengths disagree");
    for (double p : powers)
        if (p < 0.0)
            throw std::invalid_argument("utility: negative transmit power");
}

} // namespace

void LinkGeometry::validate() const {
    for (double d : distances)
        if (!(d > 0.0))
            throw std::invalid_argument("LinkGeometry: distances must be > 0");
    if (!(d_backhaul > 0.0))
        throw std::invalid_argument("LinkGeometry: d_backhaul must be > 0");
    if (!(sigma2 > 0.0))
        throw std::invalid_argument("LinkGeometry: sigma2 must be > 0");
    if (!(mu > 0.0))
        throw std::invalid_argument("LinkGeometry: mu must be > 0");
}

void EfficiencyExponentParams::validate() const {
    if (!(a > b && b > 0.0))
        throw std::invalid_argument(
            "EfficiencyExponentParams: constraint a > b > 0 violated");
}

double g_exponent(double e, const EfficiencyExponentParams& params,
                  double e_max) {
    return params.a + (params.b - params.a) * e / e_max;
}

double snr(double power, double h2, double d, double alpha, double sigma2) {
    return power * h2 / (std::pow(d, alpha) * sigma2);
}

double exp_gamma0(double x) {
    if (!(x > 0.0)) throw std::domain_error("exp_gamma0: requires x > 0");
    if (x <= 1.0) return e1_series(x);
    return std::exp(-x) * expx_e1_cf(x); // 0 once e^{-x} underflows
}

double expx_gamma0(double x) {
    if (!(x > 0.0)) throw std::domain_error("expx_gamma0: requires x > 0");
    if (x <= 1.0) return std::exp(x) * e1_series(x);
    return expx_e1_cf(x);
}

double instantaneous_utility(std::span<const double> bandwidths,
                             std::span<const double> powers,
                             std::span<const double> h2s, double e,
                             const LinkGeometry& geom,
                             const EfficiencyExponentParams& params,
                             double e_max) {
    check_vectors(bandwidths, powers, geom);
    if (h2s.size() != powers.size())
        throw std::invalid_argument("utility: gain vector length disagrees");
    const double p_sum = total(powers);
    if (p_sum == 0.0) return 0.0;

    double num = 0.0;
    for (std::size_t i = 0; i < powers.size(); ++i) {
        double gamma_i = snr(powers[i], h2s[i], geom.distances[i], geom.alpha,
                             geom.sigma2);
        num += bandwidths[i] * std::log2(1.0 + gamma_i);
    }
    return num / std::pow(p_sum, g_exponent(e, params, e_max));
}

double average_utility(std::span<const double> bandwidths,
                       std::span<const double> powers, double e,
                       const LinkGeometry& geom,
                       const EfficiencyExponentParams& params, double e_max) {
    check_vectors(bandwidths, powers, geom);
    const double p_sum = total(powers);
    if (p_sum == 0.0) return 0.0;

    double num = 0.0;
    for (std::size_t i = 0; i < powers.size(); ++i) {
        if (powers[i] == 0.0) continue; // limit of the closed form as P -> 0
        double x = geom.mu * std::pow(geom.distances[i], geom.alpha) *
                   geom.sigma2 / powers[i];
        num += bandwidths[i] * expx_gamma0(x);
    }
    return num / (kLn2 * std::pow(p_sum, g_exponent(e, params, e_max)));
}

McEstimate mc_average_utility(std::span<const double> bandwidths,
                              std::span<const double> powers, double e,
                              const LinkGeometry& geom,
                              const EfficiencyExponentParams& params,
                              double e_max, RngStream& rng,
                              std::size_t n_samples) {
    check_vectors(bandwidths, powers, geom);
    if (n_samples < 1)
        throw std::invalid_argument("mc_average_utility: need samples");
    const double p_sum = total(powers);
    if (p_sum == 0.0) return {0.0, 0.0};

    const double denom = std::pow(p_sum, g_exponent(e, params, e_max));
    double mean = 0.0, m2 = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        double num = 0.0;
        for (std::size_t i = 0; i < powers.size(); ++i) {
            double h2 = rng.exponential(geom.mu);
            double gamma_i = snr(powers[i], h2, geom.distances[i], geom.alpha,
                                 geom.sigma2);
            num += bandwidths[i] * std::log2(1.0 + gamma_i);
        }
        double v = num / denom;
        double delta = v - mean;
        mean += delta / static_cast<double>(s + 1);
        m2 += delta * (v - mean);
    }
    double se = 0.0;
    if (n_samples > 1)
        se = std::sqrt(m2 / (static_cast<double>(n_samples) *
                             static_cast<double>(n_samples - 1)));
    return {mean, se};
}

double sum_throughput(std::span<const double> bandwidths,
                      std::span<const double> powers,
                      std::span<const double> h2s, const LinkGeometry& geom) {
    check_vectors(bandwidths, powers, geom);
    if (h2s.size() != powers.size())
        throw std::invalid_argument("utility: gain vector length disagrees");
    double sum = 0.0;
    for (std::size_t i = 0; i < powers.size(); ++i) {
        double gamma_i = snr(powers[i], h2s[i], geom.distances[i], geom.alpha,
                             geom.sigma2);
        sum += bandwidths[i] * std::log2(1.0 + gamma_i);
    }
    return sum;
}

} // namespace sbsim
