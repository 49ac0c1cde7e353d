#include <CLI11.hpp>
#include <iostream>

#include "delay_spde/cli.hpp"

using delay_spde::RunConfig;

int main(int argc, char** argv) {
    CLI::App app{"delay_spde: numerical laboratory for stochastic evolution equations with "
                 "infinite delay"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int paths = 0;
    std::string out_dir;

    app.add_option("--config", config_path, "configuration file (sectioned key = value text)");
    app.add_option("--seed", seed, "override stochastics.seed")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--paths", paths, "override stochastics.paths");
    app.add_option("--out", out_dir, "override outputs.directory");

    auto* simulate = app.add_subcommand("simulate", "solve the configured problem, emit CSVs");
    auto* verify = app.add_subcommand("verify", "run the invariant suites, print a verdict table");
    auto* convergence = app.add_subcommand("convergence", "coupled-noise refinement study");
    simulate->fallthrough();
    verify->fallthrough();
    convergence->fallthrough();
    int levels = 3;
    bool strict = false;
    bool spatial = false;
    convergence->add_option("--levels", levels, "number of dt levels (>= 3)");
    convergence->add_flag("--strict", strict, "exit nonzero on non-monotone error decay");
    convergence->add_flag("--spatial", spatial, "also refine the mode count");
    auto* bench = app.add_subcommand("gamma-bench", "gamma-norm estimator benchmarks");
    bench->fallthrough();

    CLI11_PARSE(app, argc, argv);

    RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = RunConfig::load(config_path);
        if (seed_set) cfg.seed = seed;
        if (paths > 0) cfg.paths = paths;
        if (!out_dir.empty()) cfg.directory = out_dir;
        cfg.validate();

        if (simulate->parsed()) return delay_spde::cmd_simulate(cfg);
        if (verify->parsed()) return delay_spde::cmd_verify(cfg);
        if (convergence->parsed()) return delay_spde::cmd_convergence(cfg, levels, strict, spatial);
        if (bench->parsed()) return delay_spde::cmd_gamma_bench(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
