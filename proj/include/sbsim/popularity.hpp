#pragma once

#include <cstddef>
#include <vector>

#include "sbsim/rng.hpp"

namespace sbsim {

/// Zipf content-popularity catalog with a top-M cache.
///
/// Rank j (1-based) has probability (1/j^s) / sum_{r=1..R} 1/r^s. The cache
/// always holds the M most popular files, so a request misses iff its rank
/// exceeds M. Immutable after construction; safe for shared reads.
class ZipfCatalog {
  public:
    /// s > 1, R >= 1, 0 <= M <= R.
    ZipfCatalog(double s, std::size_t catalog_size, std::size_t cache_size);

    double decay_exponent() const { return s_; }
    std::size_t catalog_size() const { return r_; }
    std::size_t cache_size() const { return m_; }
    const std::vector<double>& cdf() const { return cdf_; }

  private:
    double s_;
    std::size_t r_;
    std::size_t m_;
    std::vector<double> cdf_; // cdf_[j-1] = P(rank <= j)
};

/// Probability of rank j (1-based). Throws std::domain_error out of range.
double zipf_pmf(std::size_t rank, const ZipfCatalog& cat);

/// Probability a single request misses the top-M cache.
double miss_probability(const ZipfCatalog& cat);

/// Probability at least one of n_users independent requests misses,
/// 1 - (1 - eps_m)^n_users.
double backhaul_access_probability(double eps_m, std::size_t n_users);

struct RequestDraw {
    std::vector<std::size_t> ranks; // one per user, 1-based
    bool miss = false;              // true iff any rank exceeds the cache
};

/// Draw one rank per user by inverse-CDF lookup on the catalog.
RequestDraw sample_requests(RngStream& rng, const ZipfCatalog& cat,
                            std::size_t n_users);

} // namespace sbsim
