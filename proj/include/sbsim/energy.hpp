#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "sbsim/rng.hpp"

namespace sbsim {

/// Uniform discretization of the battery interval [0, e_max].
/// Grid point i sits at energy i * delta_e; the last point is exactly e_max.
struct EnergyGrid {
    double e_max = 0.0;     // joules
    std::size_t n_cells = 0;
    double delta_e = 0.0;   // joules per cell

    EnergyGrid(double e_max_j, std::size_t cells);

    double energy_at(std::size_t index) const;
};

/// Two-point interpolation weights for a continuous energy on the grid.
/// Weighted grid energies average back to the input exactly.
struct Quantized {
    std::size_t lo = 0;
    std::size_t hi = 0;
    double w_lo = 1.0;
    double w_hi = 0.0;
};

Quantized quantize(double energy_j, const EnergyGrid& grid);

/// Truncated Poisson law over per-slot harvested-energy increments.
/// pmf[k] is the probability of k arrivals; the last entry absorbs the
/// tail so the mass sums to one exactly.
struct HarvestDistribution {
    double lambda_rate = 0.0; // arrivals per second
    double slot_t = 0.0;      // seconds
    double q_energy = 0.0;    // joules per arrival
    std::size_t k_max = 0;
    std::vector<double> pmf;

    double mean_energy() const; // expected harvested joules per slot
};

HarvestDistribution build_harvest_distribution(double lambda_rate,
                                               double slot_t, double q_energy,
                                               double tail_tol = 1e-12);

/// Battery recursion: min(e - total_power * slot_t + harvested, e_max).
/// Throws std::invalid_argument if the drain exceeds stored energy.
double step_energy(double e, double total_power, double slot_t,
                   double harvested, double e_max);

/// Sparse next-state distribution over grid indices.
struct TransitionRow {
    std::vector<std::pair<std::size_t, double>> entries;

    double sum() const;
    /// Expected next energy under the row's grid distribution.
    double mean_energy(const EnergyGrid& grid) const;
};

/// Row for a slot starting at an arbitrary stored energy. The drain happens
/// first, then each possible arrival count splits its mass onto the two
/// bracketing grid points.
TransitionRow transition_row_from_energy(double e, double total_power,
                                         const EnergyGrid& grid,
                                         const HarvestDistribution& harvest);

/// Row for a slot starting on a grid point.
TransitionRow build_transition_row(std::size_t grid_index, double total_power,
                                   const EnergyGrid& grid,
                                   const HarvestDistribution& harvest);

/// Sample an arrival count from the truncated pmf by inversion.
std::size_t sample_arrivals(RngStream& rng, const HarvestDistribution& harvest);

} // namespace sbsim
