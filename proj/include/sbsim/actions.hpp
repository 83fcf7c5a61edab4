#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sbsim/config.hpp"
#include "sbsim/energy.hpp"

namespace sbsim {

/// One feasible transmit choice: per-user downlink powers plus the averaged
/// backhaul budget that a cache miss would add on top.
struct Action {
    std::vector<double> per_user_powers; // watts, downlink
    double backhaul_budget = 0.0;        // watts; the averaged-rule P_b
    double total_power = 0.0; // sum P_i + eps * backhaul_budget (expected)

    double downlink_total() const;
    /// Drain when a miss is actually served: sum P_i + backhaul_budget.
    double worst_case_power() const;
    bool is_idle() const { return downlink_total() == 0.0; }
};

/// All candidate actions, sorted by ascending total_power so that a
/// first-wins argmax breaks ties toward the lowest-power action.
struct ActionSet {
    std::vector<Action> actions;
    ActionMode mode = ActionMode::EqualSplit;
    std::size_t levels = 0;
    double eps_backhaul = 0.0; // backhaul access probability used to build

    std::size_t size() const { return actions.size(); }
};

/// Build the action set for a config. Equal-split mode spreads the total
/// downlink budget [0, P_max - P_b] evenly over `power_levels` levels and
/// splits each level equally across users; exhaustive mode enumerates the
/// per-user grid (guarded to n_users <= 3).
ActionSet build_action_set(const SystemConfig& config);

/// Indices of actions usable at a grid state: the slot's worst-case drain
/// must fit both the stored energy and the P_max cap (which implies the
/// eps-weighted constraint on total_power). The idle action always remains.
std::vector<std::size_t> feasible_actions(std::size_t grid_index,
                                          const ActionSet& set,
                                          const EnergyGrid& grid,
                                          double slot_t);

/// Next-state distribution of an action from a continuous starting energy:
/// the eps-weighted mixture of the served-miss and no-miss drains.
TransitionRow action_transition_row(double e, const Action& action,
                                    double eps_backhaul,
                                    const EnergyGrid& grid,
                                    const HarvestDistribution& harvest);

} // namespace sbsim
