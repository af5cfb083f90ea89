#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cmaflow/harness.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::string out;
    long seed = -1;
    int jobs = 1;
};

void add_common(CLI::App* app, CommonArgs& args) {
    app->add_option("--config", args.config, "experiment config file")->required();
    app->add_option("--out", args.out, "output directory (overrides [output] dir)");
    app->add_option("--seed", args.seed, "seed override for randomized property tests");
    app->add_option("--jobs", args.jobs, "max concurrent cascade flows");
}

int execute(const CommonArgs& args, const char* forced_kind) {
    try {
        cmaflow::Config cfg = cmaflow::Config::parse_file(args.config);
        if (forced_kind) cfg.override_value("experiment", "kind", forced_kind);
        std::optional<long> seed;
        if (args.seed >= 0) seed = args.seed;
        cmaflow::ExperimentResult res =
            cmaflow::run_experiment(cfg, args.out, seed, std::max(args.jobs, 1));
        for (const auto& line : res.summary_lines) std::printf("%s\n", line.c_str());
        std::printf("bundle: %s\n", res.out_dir.c_str());
        return res.all_pass ? 0 : 1;
    } catch (const cmaflow::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime error: %s\n", e.what());
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-difference laboratory for the degenerate parabolic complex "
                 "Monge-Ampere flow"};
    app.require_subcommand(1);

    CommonArgs run_args, cascade_args, converge_args, verify_args;
    CLI::App* run = app.add_subcommand("run", "single flow with monitors");
    add_common(run, run_args);
    CLI::App* cascade = app.add_subcommand("cascade", "approximation cascade over levels");
    add_common(cascade, cascade_args);
    CLI::App* converge = app.add_subcommand("converge", "refinement studies in h and dt");
    add_common(converge, converge_args);
    CLI::App* verify = app.add_subcommand("verify", "property and invariant suite");
    add_common(verify, verify_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (run->parsed()) return execute(run_args, "run");
    if (cascade->parsed()) return execute(cascade_args, "cascade");
    if (converge->parsed()) return execute(converge_args, "converge");
    if (verify->parsed()) return execute(verify_args, "verify");
    return 2;
}
