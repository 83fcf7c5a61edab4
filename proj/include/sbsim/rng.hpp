#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sbsim {

/// Deterministic stream of doubles/variates backed by std::mt19937_64.
///
/// Streams are derived from a root seed plus a name and lane index, so a
/// simulation can give channels, requests and energy arrivals independent
/// streams that do not shift when an unrelated stream draws more values.
/// All variates are generated by inversion from the engine's raw 64-bit
/// output, which the standard pins down bit-exactly, so runs reproduce
/// across platforms.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    /// Derive the stream for (root, name, lane). Same inputs, same stream.
    static RngStream derive(std::uint64_t root_seed, std::string_view name,
                            std::uint64_t lane = 0);

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01();

    /// Uniform double in (0, 1] (never exactly zero; safe for log()).
    double uniform01_open_low();

    /// Exponential with rate mu (mean 1/mu), by inversion.
    double exponential(double mu);

    std::uint64_t next_u64() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used for seed derivation and content hashing.
std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a over arbitrary bytes.
std::uint64_t fnv1a64(const void* data, std::size_t n,
                      std::uint64_t h = 1469598103934665603ULL);

} // namespace sbsim
