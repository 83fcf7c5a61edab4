#include "sbsim/popularity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sbsim {

namespace {

// Kahan-compensated sum of 1/j^s for j in [lo, hi].
double power_sum(std::size_t lo, std::size_t hi, double s) {
    double sum = 0.0, c = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) {
        double term = std::pow(static_cast<double>(j), -s);
        double y = term - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    return sum;
}

} // namespace

ZipfCatalog::ZipfCatalog(double s, std::size_t catalog_size,
                         std::size_t cache_size)
    : s_(s), r_(catalog_size), m_(cache_size) {
    if (!(s > 1.0))
        throw std::invalid_argument("ZipfCatalog: decay exponent must be > 1");
    if (r_ < 1)
        throw std::invalid_argument("ZipfCatalog: catalog size must be >= 1");
    if (m_ > r_)
        throw std::invalid_argument("ZipfCatalog: cache size exceeds catalog");

    const double norm = power_sum(1, r_, s_);
    cdf_.resize(r_);
    double sum = 0.0, c = 0.0;
    for (std::size_t j = 1; j <= r_; ++j) {
        double term = std::pow(static_cast<double>(j), -s_) / norm;
        double y = term - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
        cdf_[j - 1] = sum;
    }
}

double zipf_pmf(std::size_t rank, const ZipfCatalog& cat) {
    if (rank < 1 || rank > cat.catalog_size())
        throw std::domain_error("zipf_pmf: rank out of range");
    const auto& cdf = cat.cdf();
    if (rank == 1) return cdf[0];
    return cdf[rank - 1] - cdf[rank - 2];
}

double miss_probability(const ZipfCatalog& cat) {
    const std::size_t m = cat.cache_size();
    const std::size_t r = cat.catalog_size();
    if (m == 0) return 1.0;
    if (m == r) return 0.0;
    // Direct tail sum over the pmf keeps the value exact at large R where
    // 1 - cdf[m-1] would lose digits to cancellation.
    const double norm = power_sum(1, r, cat.decay_exponent());
    return power_sum(m + 1, r, cat.decay_exponent()) / norm;
}

double backhaul_access_probability(double eps_m, std::size_t n_users) {
    if (eps_m < 0.0 || eps_m > 1.0)
        throw std::invalid_argument(
            "backhaul_access_probability: eps_m outside [0,1]");
    if (n_users < 1)
        throw std::invalid_argument(
            "backhaul_access_probability: need at least one user");
    return 1.0 - std::pow(1.0 - eps_m, static_cast<double>(n_users));
}

RequestDraw sample_requests(RngStream& rng, const ZipfCatalog& cat,
                            std::size_t n_users) {
    RequestDraw out;
    out.ranks.resize(n_users);
    const auto& cdf = cat.cdf();
    for (std::size_t i = 0; i < n_users; ++i) {
        double u = rng.uniform01();
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::size_t rank =
            std::min<std::size_t>(cat.catalog_size(),
                                  static_cast<std::size_t>(it - cdf.begin()) + 1);
        out.ranks[i] = rank;
        if (rank > cat.cache_size()) out.miss = true;
    }
    return out;
}

} // namespace sbsim
