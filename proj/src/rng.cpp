#include "sbsim/rng.hpp"

#include <cmath>

namespace sbsim {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

RngStream RngStream::derive(std::uint64_t root_seed, std::string_view name,
                            std::uint64_t lane) {
    std::uint64_t tag = fnv1a64(name.data(), name.size());
    std::uint64_t seed = splitmix64(root_seed ^ splitmix64(tag + lane));
    return RngStream(seed);
}

double RngStream::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform01_open_low() {
    return 1.0 - uniform01();
}

double RngStream::exponential(double mu) {
    return -std::log(uniform01_open_low()) / mu;
}

} // namespace sbsim
