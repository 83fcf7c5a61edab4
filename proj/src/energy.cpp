#include "sbsim/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sbsim {

EnergyGrid::EnergyGrid(double e_max_j, std::size_t cells)
    : e_max(e_max_j), n_cells(cells) {
    if (!(e_max > 0.0))
        throw std::invalid_argument("EnergyGrid: e_max must be positive");
    if (n_cells < 2)
        throw std::invalid_argument("EnergyGrid: need at least two cells");
    delta_e = e_max / static_cast<double>(n_cells - 1);
}

double EnergyGrid::energy_at(std::size_t index) const {
    if (index >= n_cells)
        throw std::out_of_range("EnergyGrid: index out of range");
    if (index == n_cells - 1) return e_max;
    return static_cast<double>(index) * delta_e;
}

Quantized quantize(double energy_j, const EnergyGrid& grid) {
    if (energy_j < -1e-15 * grid.e_max ||
        energy_j > grid.e_max * (1.0 + 1e-12))
        throw std::domain_error("quantize: energy outside [0, e_max]");
    energy_j = std::clamp(energy_j, 0.0, grid.e_max);

    double pos = energy_j / grid.delta_e;
    auto lo = static_cast<std::size_t>(pos);
    if (lo >= grid.n_cells - 1)
        return {grid.n_cells - 1, grid.n_cells - 1, 1.0, 0.0};
    double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) return {lo, lo, 1.0, 0.0};
    return {lo, lo + 1, 1.0 - frac, frac};
}

double HarvestDistribution::mean_energy() const {
    double m = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k)
        m += static_cast<double>(k) * q_energy * pmf[k];
    return m;
}

HarvestDistribution build_harvest_distribution(double lambda_rate,
                                               double slot_t, double q_energy,
                                               double tail_tol) {
    if (lambda_rate < 0.0)
        throw std::invalid_argument("harvest: lambda must be >= 0");
    if (!(slot_t > 0.0))
        throw std::invalid_argument("harvest: slot duration must be positive");
    if (q_energy < 0.0)
        throw std::invalid_argument("harvest: q must be >= 0");
    if (!(tail_tol > 0.0 && tail_tol < 1.0))
        throw std::invalid_argument("harvest: tail_tol must be in (0,1)");

    HarvestDistribution h;
    h.lambda_rate = lambda_rate;
    h.slot_t = slot_t;
    h.q_energy = q_energy;

    const double lt = lambda_rate * slot_t;
    if (lt == 0.0) {
        h.k_max = 0;
        h.pmf = {1.0};
        return h;
    }

    double term = std::exp(-lt); // Poisson(lt) mass at k
    double cum = 0.0;
    std::size_t k = 0;
    while (1.0 - (cum + term) >= tail_tol) {
        h.pmf.push_back(term);
        cum += term;
        ++k;
        term *= lt / static_cast<double>(k);
    }
    h.pmf.push_back(1.0 - cum); // absorb the tail at k_max
    h.k_max = k;
    return h;
}

double step_energy(double e, double total_power, double slot_t,
                   double harvested, double e_max) {
    const double drain = total_power * slot_t;
    if (drain > e * (1.0 + 1e-12) + 1e-18)
        throw std::invalid_argument(
            "step_energy: drain exceeds stored energy");
    if (harvested < 0.0)
        throw std::invalid_argument("step_energy: negative harvest");
    double next = std::min(e - drain + harvested, e_max);
    return std::max(next, 0.0);
}

double TransitionRow::sum() const {
    double s = 0.0;
    for (const auto& [idx, w] : entries) s += w;
    return s;
}

double TransitionRow::mean_energy(const EnergyGrid& grid) const {
    double m = 0.0;
    for (const auto& [idx, w] : entries) m += w * grid.energy_at(idx);
    return m;
}

TransitionRow transition_row_from_energy(double e, double total_power,
                                         const EnergyGrid& grid,
                                         const HarvestDistribution& harvest) {
    const double drain = total_power * harvest.slot_t;
    if (drain > e * (1.0 + 1e-12) + 1e-18)
        throw std::invalid_argument(
            "transition row: infeasible power for stored energy");
    const double after_drain = std::max(e - drain, 0.0);

    TransitionRow row;
    row.entries.reserve(2 * harvest.pmf.size());
    for (std::size_t k = 0; k < harvest.pmf.size(); ++k) {
        const double pk = harvest.pmf[k];
        if (pk == 0.0) continue;
        double next = std::min(
            after_drain + static_cast<double>(k) * harvest.q_energy,
            grid.e_max);
        Quantized qz = quantize(next, grid);
        row.entries.emplace_back(qz.lo, pk * qz.w_lo);
        if (qz.w_hi > 0.0) row.entries.emplace_back(qz.hi, pk * qz.w_hi);
    }

    std::sort(row.entries.begin(), row.entries.end());
    std::vector<std::pair<std::size_t, double>> merged;
    merged.reserve(row.entries.size());
    for (const auto& ent : row.entries) {
        if (!merged.empty() && merged.back().first == ent.first)
            merged.back().second += ent.second;
        else
            merged.push_back(ent);
    }
    row.entries = std::move(merged);
    return row;
}

TransitionRow build_transition_row(std::size_t grid_index, double total_power,
                                   const EnergyGrid& grid,
                                   const HarvestDistribution& harvest) {
    return transition_row_from_energy(grid.energy_at(grid_index), total_power,
                                      grid, harvest);
}

std::size_t sample_arrivals(RngStream& rng,
                            const HarvestDistribution& harvest) {
    double u = rng.uniform01();
    double cum = 0.0;
    for (std::size_t k = 0; k + 1 < harvest.pmf.size(); ++k) {
        cum += harvest.pmf[k];
        if (u < cum) return k;
    }
    return harvest.pmf.size() - 1;
}

} // namespace sbsim
