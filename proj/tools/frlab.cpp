#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "frlab/cache.hpp"
#include "frlab/config.hpp"
#include "frlab/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for heat kernels, Riesz transforms and"
                 " Calderon-Zygmund decompositions on fractal graphs"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 1;

    const char* names[] = {"build-graph", "heat-kernel", "fit-exponents",
                           "riesz-ratios", "estimates", "czd", "walk-exit",
                           "counterexample", "full-suite"};
    for (const char* name : names) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment config file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--jobs", jobs, "worker threads for Monte Carlo runs");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        std::ifstream in(config_path);
        if (!in)
            throw frlab::resource_error("cannot open config file " + config_path);
        frlab::ExperimentConfig cfg = frlab::load_experiment_config(in);
        if (seed_set) cfg.seed = seed;

        frlab::Runner runner(cfg, out_dir, jobs);
        runner.set_input_digest("config", frlab::file_digest(config_path));
        return runner.dispatch(app.get_subcommands().front()->get_name());
    } catch (const std::exception& e) {
        std::cerr << "frlab: " << e.what() << '\n';
        return 1;
    }
}
