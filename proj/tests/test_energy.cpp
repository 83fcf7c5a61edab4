#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sbsim/energy.hpp"

using namespace sbsim;

TEST_CASE("step energy arithmetic") {
    CHECK(step_energy(2.0, 0.8, 1e-3, 0.0, 2.0) ==
          doctest::Approx(1.9992).epsilon(1e-14));
    CHECK(step_energy(2.0, 0.0, 1e-3, 0.08, 2.0) == 2.0); // clamp at capacity
    CHECK(step_energy(0.5, 0.4, 1e-3, 0.16, 2.0) ==
          doctest::Approx(0.6596).epsilon(1e-14));
    CHECK_THROWS_AS(step_energy(0.0005, 0.8, 1e-3, 0.0, 2.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(step_energy(1.0, 0.1, 1e-3, -0.1, 2.0),
                    std::invalid_argument);
}

TEST_CASE("harvest distribution") {
    auto none = build_harvest_distribution(0.0, 1e-3, 0.08);
    CHECK(none.k_max == 0);
    REQUIRE(none.pmf.size() == 1);
    CHECK(none.pmf[0] == 1.0);

    auto h = build_harvest_distribution(2.0, 1e-3, 0.08);
    // Poisson(0.002) mass at zero, pinned from direct evaluation
    CHECK(h.pmf[0] == doctest::Approx(0.9980019986673331).epsilon(1e-9));

    auto slow = build_harvest_distribution(0.1, 1e-3, 0.08);
    CHECK(slow.pmf[0] == doctest::Approx(0.9999000049998333).epsilon(1e-9));

    for (double lam : {0.1, 1.0, 2.0, 100.0}) {
        auto d = build_harvest_distribution(lam, 1e-3, 0.08);
        double sum = 0.0;
        for (double p : d.pmf) sum += p;
        CHECK(std::fabs(sum - 1.0) < 1e-15);
        // truncated mean within the tail bound of the exact mean
        CHECK(std::fabs(d.mean_energy() - lam * 1e-3 * 0.08) < 1e-10);
    }
    CHECK_THROWS_AS(build_harvest_distribution(1.0, 1e-3, 0.08, 0.0),
                    std::invalid_argument);
}

TEST_CASE("grid quantization") {
    EnergyGrid grid(2.0, 2001);
    CHECK(grid.delta_e == doctest::Approx(0.001).epsilon(1e-15));

    SUBCASE("grid points are exact") {
        for (std::size_t i : {0UL, 1UL, 500UL, 2000UL}) {
            auto q = quantize(grid.energy_at(i), grid);
            CHECK(q.lo == i);
            CHECK(q.w_lo == 1.0);
        }
    }
    SUBCASE("midpoints split evenly") {
        auto q = quantize(0.0015, grid);
        CHECK(q.lo == 1);
        CHECK(q.hi == 2);
        CHECK(q.w_lo == doctest::Approx(0.5).epsilon(1e-9));
    }
    SUBCASE("reconstruction is exact") {
        RngStream rng(5);
        for (int i = 0; i < 1000; ++i) {
            double e = rng.uniform01() * grid.e_max;
            auto q = quantize(e, grid);
            double back = q.w_lo * grid.energy_at(q.lo) +
                          q.w_hi * grid.energy_at(q.hi);
            CHECK(std::fabs(back - e) <= 1e-15 * grid.e_max);
        }
    }
    SUBCASE("domain errors") {
        CHECK_THROWS_AS(quantize(-0.1, grid), std::domain_error);
        CHECK_THROWS_AS(quantize(2.1, grid), std::domain_error);
    }
}

TEST_CASE("transition rows") {
    EnergyGrid grid(2.0, 2001);

    SUBCASE("absorbing when idle with no harvest") {
        auto none = build_harvest_distribution(0.0, 1e-3, 0.08);
        auto row = build_transition_row(700, 0.0, grid, none);
        REQUIRE(row.entries.size() == 1);
        CHECK(row.entries[0].first == 700);
        CHECK(row.entries[0].second == 1.0);
    }
    SUBCASE("top cell clamps") {
        auto h = build_harvest_distribution(2.0, 1e-3, 0.08);
        auto row = build_transition_row(2000, 0.0, grid, h);
        REQUIRE(row.entries.size() == 1);
        CHECK(row.entries[0].first == 2000);
        CHECK(row.entries[0].second == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("rows are stochastic and expectation-preserving") {
        auto h = build_harvest_distribution(2.0, 1e-3, 0.08);
        RngStream rng(11);
        for (int rep = 0; rep < 200; ++rep) {
            std::size_t s = static_cast<std::size_t>(rng.uniform01() * 2000);
            double e = grid.energy_at(s);
            double power = std::min(0.8, e / 1e-3) * rng.uniform01();
            auto row = build_transition_row(s, power, grid, h);
            CHECK(std::fabs(row.sum() - 1.0) < 1e-12);
            for (const auto& [idx, w] : row.entries) {
                CHECK(idx < grid.n_cells);
                CHECK(w >= 0.0);
            }
            // continuous-space oracle for the mean
            double expect = 0.0;
            for (std::size_t k = 0; k < h.pmf.size(); ++k)
                expect += h.pmf[k] *
                          std::min(e - power * 1e-3 +
                                       static_cast<double>(k) * h.q_energy,
                                   grid.e_max);
            CHECK(std::fabs(row.mean_energy(grid) - expect) < 1e-12);
        }
    }
    SUBCASE("monotone in power and starting energy") {
        auto h = build_harvest_distribution(1.0, 1e-3, 0.08);
        double prev = 1e9;
        for (double p : {0.0, 0.2, 0.4, 0.6, 0.8}) {
            auto row = build_transition_row(1000, p, grid, h);
            double m = row.mean_energy(grid);
            CHECK(m <= prev + 1e-15);
            prev = m;
        }
        prev = -1.0;
        for (std::size_t s : {100UL, 500UL, 900UL, 1300UL}) {
            auto row = build_transition_row(s, 0.5, grid, h);
            double m = row.mean_energy(grid);
            CHECK(m >= prev);
            prev = m;
        }
    }
    SUBCASE("infeasible power rejected") {
        auto h = build_harvest_distribution(1.0, 1e-3, 0.08);
        CHECK_THROWS_AS(build_transition_row(0, 0.8, grid, h),
                        std::invalid_argument);
    }
}

TEST_CASE("simulated trajectories stay in range") {
    EnergyGrid grid(2.0, 2001);
    auto h = build_harvest_distribution(2.0, 1e-3, 0.08);
    RngStream rng(21);
    double e = 2.0;
    for (int t = 0; t < 20000; ++t) {
        double power = std::min(0.8, e / 1e-3) * rng.uniform01();
        double harvested =
            static_cast<double>(sample_arrivals(rng, h)) * h.q_energy;
        e = step_energy(e, power, 1e-3, harvested, grid.e_max);
        CHECK(e >= 0.0);
        CHECK(e <= grid.e_max);
    }
}

TEST_CASE("arrival sampling matches the pmf") {
    auto h = build_harvest_distribution(2000.0, 1e-3, 0.01); // lt = 2
    RngStream rng(31);
    const std::size_t draws = 400000;
    std::vector<std::size_t> counts(h.pmf.size(), 0);
    for (std::size_t i = 0; i < draws; ++i) ++counts[sample_arrivals(rng, h)];
    for (std::size_t k = 0; k < h.pmf.size(); ++k) {
        double p = h.pmf[k];
        double freq = static_cast<double>(counts[k]) /
                      static_cast<double>(draws);
        double se = std::sqrt(p * (1.0 - p) / static_cast<double>(draws));
        CHECK(std::fabs(freq - p) < 4.5 * se + 1e-9);
    }
}
