#include "fes/app/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Overrides {
    std::string config;
    std::optional<double> tau, eps;
    std::optional<long> horizon;
    std::optional<std::uint64_t> seed;
    bool plot = false;
    std::string out;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON configuration file")->required();
    cmd->add_option("--tau", o.tau, "sampling period");
    cmd->add_option("--eps", o.eps, "relaxation in (0, 1]");
    cmd->add_option("--horizon", o.horizon, "number of samples");
    cmd->add_option("--seed", o.seed, "occupancy seed");
    cmd->add_flag("--plot", o.plot, "write SVG figures");
    cmd->add_option("--out", o.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feedback equilibrium seeking lab"};
    app.require_subcommand(1);
    Overrides o;
    auto* simulate = app.add_subcommand("simulate", "run the closed loop and write the trajectory");
    auto* certify = app.add_subcommand("certify", "evaluate the small-gain certificate at (tau, eps)");
    auto* sweep = app.add_subcommand("sweep", "map the certified region over a (tau, eps) grid");
    auto* compare = app.add_subcommand("compare", "building: feedback optimization against the baselines");
    for (auto* c : {simulate, certify, sweep, compare}) add_common(c, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return fes::app::kConfigFailure;
    }

    fes::app::RunConfig cfg;
    try {
        cfg = fes::app::load_config(o.config);
    } catch (const fes::Error& e) {
        std::cerr << "config: " << e.what() << '\n';
        return fes::app::kConfigFailure;
    }
    if (o.tau) cfg.tau = o.tau;
    if (o.eps) cfg.eps = o.eps;
    if (o.horizon) cfg.horizon = o.horizon;
    if (o.seed) cfg.seed = o.seed;
    if (o.plot) cfg.plot = true;
    if (!o.out.empty()) cfg.output_dir = o.out;

    try {
        if (simulate->parsed()) return fes::app::cmd_simulate(cfg, std::cout, std::cerr);
        if (certify->parsed()) return fes::app::cmd_certify(cfg, std::cout, std::cerr);
        if (sweep->parsed()) return fes::app::cmd_sweep(cfg, std::cout, std::cerr);
        return fes::app::cmd_compare(cfg, std::cout, std::cerr);
    } catch (const fes::Error& e) {
        std::cerr << e.what() << '\n';
        return fes::app::kConfigFailure;
    }
}
