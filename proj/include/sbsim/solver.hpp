#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sbsim/actions.hpp"
#include "sbsim/config.hpp"
#include "sbsim/energy.hpp"
#include "sbsim/utility.hpp"

namespace sbsim {

/// Converged state values plus the convergence record.
struct ValueFunction {
    std::vector<double> values;
    std::size_t iterations = 0;
    double residual = std::numeric_limits<double>::infinity();
    std::vector<double> residual_history; // sup-norm change per sweep
};

/// Chosen action index per grid state.
struct Policy {
    std::vector<std::size_t> action_index;
};

struct SolveResult {
    ValueFunction value;
    Policy policy;
};

using TransitionBuilder =
    std::function<TransitionRow(std::size_t state, const Action&)>;
using StateActionUtility =
    std::function<double(std::size_t state, const Action&)>;

/// Jacobi value iteration from V = 0 until the sup-norm change drops below
/// theta; the policy is the argmax against the converged values with ties
/// broken toward the lowest total power (the action ordering). Throws if
/// max_iterations is hit before convergence.
SolveResult value_iteration(const EnergyGrid& grid, const ActionSet& actions,
                            const TransitionBuilder& transitions,
                            const StateActionUtility& avg_utility,
                            double discount, double theta,
                            std::size_t max_iterations, double slot_t);

/// Online action choice for one slot.
struct LookaheadChoice {
    std::size_t action_index = 0;
    double backhaul_power_w = 0.0; // spent this slot if a miss is served
};

/// The assembled MDP for a configuration: grid, harvesting law, action set
/// and the channel-averaged utility, plus the online one-step lookahead.
class DpProblem {
  public:
    DpProblem(SystemConfig config, std::vector<double> distances);

    const SystemConfig& config() const { return config_; }
    const std::vector<double>& distances() const { return distances_; }
    const EnergyGrid& grid() const { return grid_; }
    const HarvestDistribution& harvest() const { return harvest_; }
    const ActionSet& actions() const { return actions_; }
    const LinkGeometry& geometry() const { return geometry_; }
    double eps_backhaul() const { return actions_.eps_backhaul; }

    /// Closed-form channel-averaged utility of an action at stored energy e.
    double avg_utility_of(const Action& action, double e) const;

    SolveResult solve() const;

    /// Maximizer of realized instantaneous utility plus discounted expected
    /// next-state value. When a miss cannot be served within the power and
    /// energy budget the all-zero action is returned.
    LookaheadChoice one_step_lookahead(double e, std::span<const double> h2s,
                                       double h2_b, bool miss,
                                       const ValueFunction& v) const;

  private:
    SystemConfig config_;
    std::vector<double> distances_;
    EnergyGrid grid_;
    HarvestDistribution harvest_;
    ActionSet actions_;
    LinkGeometry geometry_;
    std::vector<double> bandwidths_;
    std::vector<double> avg_numerators_; // per action, closed-form numerator
};

/// Versioned JSON snapshot of a solve, sufficient to re-run simulations
/// without touching the solver again.
struct PolicySnapshot {
    std::uint64_t solver_hash = 0;
    double e_max_j = 0.0;
    std::size_t n_cells = 0;
    double discount = 0.0;
    double theta = 0.0;
    ActionSet actions;
    SolveResult result;
};

void save_snapshot(const std::string& path, const PolicySnapshot& snap);
PolicySnapshot load_snapshot(const std::string& path);

} // namespace sbsim
