// Command-line runner for the phase-locked OPO scenarios.

#include "opo/errors.hpp"
#include "opo/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stochastic simulator of a phase-difference-locked above-threshold OPO"};
    app.require_subcommand(0, 1);

    bool emit_defaults = false;
    app.add_flag("--emit-defaults", emit_defaults, "Print the calibrated default config and exit");

    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    unsigned workers = 0;
    auto* run = app.add_subcommand("run", "Run the scenario described by a config file");
    run->add_option("config", config, "Scenario config file")->required();
    run->add_option("--seed", seed, "Override the config seed");
    run->add_option("--out", out_dir, "Directory for CSV output");
    run->add_option("--workers", workers, "Worker threads (0 = one per hardware thread)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    if (emit_defaults) {
        std::cout << opo::harness::serialize_scenario(opo::harness::experiment_defaults());
        return 0;
    }
    if (!*run) {
        std::cerr << app.help();
        return kConfigError;
    }

    opo::harness::Scenario scenario;
    try {
        scenario = opo::harness::load_scenario(config);
        if (seed) {
            scenario.seed = *seed;
        }
        scenario.validate();
    } catch (const opo::ServoUnstable& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        const auto report = opo::harness::run(scenario, {out_dir, workers});
        opo::harness::print_report(std::cout, report);
    } catch (const opo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return 0;
}
