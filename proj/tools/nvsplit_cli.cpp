#include "nvsplit/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Splitting schemes for SDEs and SPDEs: weak-error studies"};
    std::string command;
    nvsplit::RunOptions options;
    std::uint64_t seed = 0;

    app.add_option("command", command, "convergence | supermartingale | hjm-demo | list-models | selftest")
        ->required();
    app.add_option("--config", options.config, "experiment config (JSON)");
    app.add_option("--out", options.out, "output directory")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "overrides the config seed");
    app.add_option("--workers", options.workers, "worker threads; does not change results")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_flag("--debug-hjm-norm", options.debug_hjm_norm, "also report the |h|^2 variant of the curve norm");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(nvsplit::ExitStatus::Config);
    }
    if (seed_opt->count() > 0) options.seed = seed;

    const auto cmd = nvsplit::parse_command(command);
    if (!cmd) {
        std::cerr << "{\"status\":\"error\",\"kind\":\"argument\",\"exit_code\":2,\"message\":\"unknown command '"
                  << command << "'\"}\n";
        return static_cast<int>(nvsplit::ExitStatus::Config);
    }
    return nvsplit::run(*cmd, options, std::cout, std::cerr);
}
