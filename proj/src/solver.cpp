#include "sbsim/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sbsim/parallel.hpp"
#include "sbsim/popularity.hpp"

namespace sbsim {

namespace {

constexpr double kLn2 = 0.6931471805599453094;

// Flattened sparse rows for the hot loop.
struct Compiled {
    std::vector<std::vector<std::size_t>> feasible; // per state
    std::vector<double> utility;                    // state * nA + a
    std::vector<std::size_t> row_begin;             // state * nA + a -> offset
    std::vector<std::size_t> row_end;
    std::vector<std::size_t> col;
    std::vector<double> weight;
};

Compiled compile(const EnergyGrid& grid, const ActionSet& actions,
                 const TransitionBuilder& transitions,
                 const StateActionUtility& avg_utility, double slot_t) {
    const std::size_t ns = grid.n_cells;
    const std::size_t na = actions.size();
    Compiled c;
    c.feasible.resize(ns);
    c.utility.assign(ns * na, 0.0);
    c.row_begin.assign(ns * na, 0);
    c.row_end.assign(ns * na, 0);

    std::vector<std::vector<TransitionRow>> rows(ns);
    parallel_for(ns, [&](std::size_t s) {
        c.feasible[s] = feasible_actions(s, actions, grid, slot_t);
        rows[s].resize(c.feasible[s].size());
        for (std::size_t k = 0; k < c.feasible[s].size(); ++k) {
            std::size_t a = c.feasible[s][k];
            rows[s][k] = transitions(s, actions.actions[a]);
            c.utility[s * na + a] = avg_utility(s, actions.actions[a]);
        }
    });

    std::size_t total = 0;
    for (std::size_t s = 0; s < ns; ++s)
        for (const auto& r : rows[s]) total += r.entries.size();
    c.col.reserve(total);
    c.weight.reserve(total);
    for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t k = 0; k < c.feasible[s].size(); ++k) {
            std::size_t a = c.feasible[s][k];
            c.row_begin[s * na + a] = c.col.size();
            for (const auto& [idx, w] : rows[s][k].entries) {
                c.col.push_back(idx);
                c.weight.push_back(w);
            }
            c.row_end[s * na + a] = c.col.size();
        }
    }
    return c;
}

} // namespace

SolveResult value_iteration(const EnergyGrid& grid, const ActionSet& actions,
                            const TransitionBuilder& transitions,
                            const StateActionUtility& avg_utility,
                            double discount, double theta,
                            std::size_t max_iterations, double slot_t) {
    if (!(discount >= 0.0 && discount < 1.0))
        throw std::invalid_argument("value_iteration: discount in [0,1)");
    if (!(theta > 0.0))
        throw std::invalid_argument("value_iteration: theta must be > 0");

    const std::size_t ns = grid.n_cells;
    const std::size_t na = actions.size();
    Compiled c = compile(grid, actions, transitions, avg_utility, slot_t);

    auto backed_up = [&](std::size_t s, std::size_t a,
                         const std::vector<double>& v) {
        double cont = 0.0;
        for (std::size_t i = c.row_begin[s * na + a]; i < c.row_end[s * na + a];
             ++i)
            cont += c.weight[i] * v[c.col[i]];
        return c.utility[s * na + a] + discount * cont;
    };

    ValueFunction vf;
    vf.values.assign(ns, 0.0);
    std::vector<double> next(ns, 0.0);
    std::vector<double> deltas(ns, 0.0);

    for (std::size_t m = 1; m <= max_iterations; ++m) {
        parallel_for(ns, [&](std::size_t s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a : c.feasible[s])
                best = std::max(best, backed_up(s, a, vf.values));
            next[s] = best;
            deltas[s] = std::fabs(best - vf.values[s]);
        });
        vf.values.swap(next);
        vf.residual = *std::max_element(deltas.begin(), deltas.end());
        vf.residual_history.push_back(vf.residual);
        vf.iterations = m;
        if (vf.residual < theta) break;
        if (m == max_iterations)
            throw std::runtime_error(
                "value_iteration: max iterations reached without meeting "
                "theta (residual " +
                std::to_string(vf.residual) + ")");
    }

    Policy pol;
    pol.action_index.assign(ns, 0);
    parallel_for(ns, [&](std::size_t s) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_a = c.feasible[s].front();
        for (std::size_t a : c.feasible[s]) {
            double q = backed_up(s, a, vf.values);
            if (q > best) { // strict: ties stay with the lowest total power
                best = q;
                best_a = a;
            }
        }
        pol.action_index[s] = best_a;
    });

    return {std::move(vf), std::move(pol)};
}

DpProblem::DpProblem(SystemConfig config, std::vector<double> distances)
    : config_(std::move(config)),
      distances_(std::move(distances)),
      grid_(config_.e_max_j, config_.grid_cells),
      harvest_(build_harvest_distribution(config_.harvest_rate_hz,
                                          config_.slot_t_s,
                                          config_.harvest_q_j,
                                          config_.harvest_tail_tol)),
      actions_(build_action_set(config_)),
      geometry_(config_.make_geometry(distances_)),
      bandwidths_(config_.n_users, config_.bandwidth_hz) {
    if (distances_.size() != config_.n_users)
        throw std::invalid_argument(
            "DpProblem: distance count must match n_users");
    avg_numerators_.reserve(actions_.size());
    for (const Action& a : actions_.actions) {
        double num = 0.0;
        for (std::size_t i = 0; i < a.per_user_powers.size(); ++i) {
            if (a.per_user_powers[i] == 0.0) continue;
            double x = geometry_.mu *
                       std::pow(geometry_.distances[i], geometry_.alpha) *
                       geometry_.sigma2 / a.per_user_powers[i];
            num += bandwidths_[i] * expx_gamma0(x);
        }
        avg_numerators_.push_back(num / kLn2);
    }
}

double DpProblem::avg_utility_of(const Action& action, double e) const {
    return average_utility(bandwidths_, action.per_user_powers, e, geometry_,
                           config_.g_params, config_.e_max_j);
}

SolveResult DpProblem::solve() const {
    const double eps = actions_.eps_backhaul;
    TransitionBuilder transitions = [&](std::size_t s, const Action& a) {
        return action_transition_row(grid_.energy_at(s), a, eps, grid_,
                                     harvest_);
    };
    StateActionUtility util = [&](std::size_t s, const Action& a) {
        double dl = a.downlink_total();
        if (dl == 0.0) return 0.0;
        // same closed form as avg_utility_of, via the cached numerators
        double g = g_exponent(grid_.energy_at(s), config_.g_params,
                              config_.e_max_j);
        std::size_t idx = static_cast<std::size_t>(&a - actions_.actions.data());
        return avg_numerators_[idx] / std::pow(dl, g);
    };
    return value_iteration(grid_, actions_, transitions, util,
                           config_.discount, config_.theta,
                           config_.max_iterations, config_.slot_t_s);
}

LookaheadChoice DpProblem::one_step_lookahead(double e,
                                              std::span<const double> h2s,
                                              double h2_b, bool miss,
                                              const ValueFunction& v) const {
    if (v.values.size() != grid_.n_cells)
        throw std::invalid_argument(
            "one_step_lookahead: value function does not match the grid");
    const double cap = std::min(config_.p_max_w, e / config_.slot_t_s);
    const double db_alpha_s2 =
        std::pow(geometry_.d_backhaul, geometry_.alpha) * geometry_.sigma2;

    double charge = 0.0;
    if (miss) {
        if (config_.backhaul_accounting == BackhaulAccounting::Realized) {
            // Serving a miss needs gamma_min at the core with the realized
            // backhaul channel; otherwise the slot idles entirely.
            if (h2_b <= 0.0 ||
                cap * h2_b / db_alpha_s2 < config_.gamma_min_linear())
                return {0, 0.0};
            charge = config_.gamma_min_linear() * db_alpha_s2 / h2_b;
        } else {
            charge = config_.backhaul_power_avg_w();
        }
    }

    auto continuation = [&](double drain_w) {
        TransitionRow row =
            transition_row_from_energy(e, drain_w, grid_, harvest_);
        double cont = 0.0;
        for (const auto& [idx, w] : row.entries) cont += w * v.values[idx];
        return cont;
    };

    double best = config_.discount * continuation(0.0); // idle action
    std::size_t best_a = 0;
    for (std::size_t a = 1; a < actions_.size(); ++a) {
        const Action& act = actions_.actions[a];
        double drain_w = act.downlink_total() + (miss ? charge : 0.0);
        if (drain_w > cap * (1.0 + 1e-12)) continue;
        double u = instantaneous_utility(bandwidths_, act.per_user_powers,
                                         h2s, e, geometry_, config_.g_params,
                                         config_.e_max_j);
        double score = u + config_.discount * continuation(drain_w);
        if (score > best) {
            best = score;
            best_a = a;
        }
    }
    double spent =
        (best_a != 0 && miss) ? charge : 0.0;
    return {best_a, spent};
}

void save_snapshot(const std::string& path, const PolicySnapshot& snap) {
    nlohmann::json j;
    j["format"] = "sbsim-policy";
    j["version"] = 1;
    j["solver_hash"] = snap.solver_hash;
    j["grid"] = {{"e_max_j", snap.e_max_j}, {"n_cells", snap.n_cells}};
    j["discount"] = snap.discount;
    j["theta"] = snap.theta;
    j["action_set"] = {
        {"mode", snap.actions.mode == ActionMode::EqualSplit ? "equal_split"
                                                             : "exhaustive"},
        {"levels", snap.actions.levels},
        {"eps_backhaul", snap.actions.eps_backhaul}};
    auto& acts = j["action_set"]["actions"];
    acts = nlohmann::json::array();
    for (const Action& a : snap.actions.actions)
        acts.push_back({{"powers", a.per_user_powers},
                        {"backhaul_budget", a.backhaul_budget},
                        {"total_power", a.total_power}});
    j["iterations"] = snap.result.value.iterations;
    j["residual"] = snap.result.value.residual;
    j["values"] = snap.result.value.values;
    j["policy"] = snap.result.policy.action_index;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("snapshot: cannot write " + path);
    out << j.dump(1) << '\n';
}

PolicySnapshot load_snapshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("snapshot: cannot open " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("format", "") != "sbsim-policy")
        throw std::runtime_error("snapshot: unrecognized format in " + path);
    if (j.value("version", 0) != 1)
        throw std::runtime_error("snapshot: unsupported version in " + path);

    PolicySnapshot snap;
    snap.solver_hash = j.at("solver_hash").get<std::uint64_t>();
    snap.e_max_j = j.at("grid").at("e_max_j").get<double>();
    snap.n_cells = j.at("grid").at("n_cells").get<std::size_t>();
    snap.discount = j.at("discount").get<double>();
    snap.theta = j.at("theta").get<double>();
    const auto& aset = j.at("action_set");
    snap.actions.mode = aset.at("mode").get<std::string>() == "exhaustive"
                            ? ActionMode::Exhaustive
                            : ActionMode::EqualSplit;
    snap.actions.levels = aset.at("levels").get<std::size_t>();
    snap.actions.eps_backhaul = aset.at("eps_backhaul").get<double>();
    for (const auto& ja : aset.at("actions")) {
        Action a;
        a.per_user_powers = ja.at("powers").get<std::vector<double>>();
        a.backhaul_budget = ja.at("backhaul_budget").get<double>();
        a.total_power = ja.at("total_power").get<double>();
        snap.actions.actions.push_back(std::move(a));
    }
    snap.result.value.values = j.at("values").get<std::vector<double>>();
    snap.result.value.iterations = j.at("iterations").get<std::size_t>();
    snap.result.value.residual = j.at("residual").get<double>();
    snap.result.policy.action_index =
        j.at("policy").get<std::vector<std::size_t>>();

    if (snap.result.value.values.size() != snap.n_cells ||
        snap.result.policy.action_index.size() != snap.n_cells)
        throw std::runtime_error("snapshot: inconsistent sizes in " + path);
    for (std::size_t idx : snap.result.policy.action_index)
        if (idx >= snap.actions.actions.size())
            throw std::runtime_error("snapshot: policy references a missing "
                                     "action in " +
                                     path);
    return snap;
}

} // namespace sbsim
