#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sbsim/experiments.hpp"

namespace {

sbsim::SystemConfig load_or_default(const std::string& path) {
    if (path.empty()) {
        sbsim::SystemConfig cfg;
        cfg.validate();
        return cfg;
    }
    return sbsim::load_config(path);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-harvesting cache-equipped small-cell power control: "
                 "value-iteration solver and slot simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string snapshot_path;
    std::string policy_name = "dp";
    std::uint64_t seed = 0;
    std::size_t slots = 0;
    bool seed_set = false, slots_set = false;

    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--snapshot", snapshot_path, "policy snapshot path");
    app.add_option("--policy", policy_name, "dp or baseline")
        ->check(CLI::IsMember({"dp", "baseline"}));
    auto* seed_opt = app.add_option("--seed", seed, "root RNG seed override");
    auto* slots_opt = app.add_option("--slots", slots, "slot count override");

    auto* solve = app.add_subcommand("solve", "run value iteration and save "
                                              "a policy snapshot");
    auto* simulate =
        app.add_subcommand("simulate", "simulate one run with a trace");
    auto* fig2 = app.add_subcommand("fig2", "energy-dynamics trace");
    auto* fig3 = app.add_subcommand("fig3", "remaining energy vs users");
    auto* fig4 = app.add_subcommand("fig4", "throughput vs baseline");
    auto* fig5 = app.add_subcommand("fig5", "cache/harvest trade-off mesh");
    auto* validate =
        app.add_subcommand("validate", "run the oracle/property suite");

    CLI11_PARSE(app, argc, argv);
    seed_set = seed_opt->count() > 0;
    slots_set = slots_opt->count() > 0;

    try {
        sbsim::SystemConfig cfg = load_or_default(config_path);
        if (seed_set) cfg.root_seed = seed;
        if (slots_set) cfg.n_slots = slots;
        cfg.validate();

        sbsim::PolicyKind policy = policy_name == "dp"
                                       ? sbsim::PolicyKind::DpLookahead
                                       : sbsim::PolicyKind::BaselineMaxPower;

        if (solve->parsed()) {
            std::string snap = snapshot_path;
            if (snap.empty()) {
                std::filesystem::create_directories(out_dir);
                snap = (std::filesystem::path(out_dir) / "policy.json")
                           .string();
            }
            sbsim::run_solve(cfg, snap, std::cout);
        } else if (simulate->parsed()) {
            sbsim::run_simulate(cfg, policy, snapshot_path, out_dir,
                                std::cout);
        } else if (fig2->parsed()) {
            sbsim::run_fig2(cfg, out_dir, std::cout);
        } else if (fig3->parsed()) {
            sbsim::run_fig3(cfg, out_dir, std::cout);
        } else if (fig4->parsed()) {
            sbsim::run_fig4(cfg, out_dir, std::cout);
        } else if (fig5->parsed()) {
            sbsim::run_fig5(cfg, out_dir, std::cout);
        } else if (validate->parsed()) {
            int failures = sbsim::run_validate_suite(std::cout);
            return failures == 0 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
