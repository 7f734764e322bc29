// Command-line driver for the swarmlink simulator. Talks to the core purely
// through the public C API.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "swarmlink/swarmlink.h"

namespace {

struct Options {
    std::string config_path;
    std::string out_dir = ".";
    std::string matrix = "single";
    uint64_t seed = 0;
    int n_robots = -1;
    int links = -1;
    double failure_prob = -1.0;
    int max_steps = -1;
    int sample_every = -1;
    int n_seeds = -1;
    std::string name;
};

// Config handle from file (when given) plus CLI overrides; flag beats file
// beats built-in default.
sl_config* build_config(const Options& opt, std::string& error) {
    char err[256] = {0};
    sl_config* config = nullptr;
    if (!opt.config_path.empty()) {
        config = sl_config_load(opt.config_path.c_str(), err, sizeof(err));
        if (config == nullptr) {
            error = err;
            return nullptr;
        }
    } else {
        config = sl_config_create();
    }

    auto apply = [&](const char* key, const std::string& value) {
        if (error.empty() && sl_config_set(config, key, value.c_str()) != SL_OK)
            error = std::string("bad value for --") + key;
    };
    if (opt.n_robots >= 0) apply("n_robots", std::to_string(opt.n_robots));
    if (opt.links >= 0) apply("links_per_target", std::to_string(opt.links));
    if (opt.failure_prob >= 0.0) apply("failure_probability", std::to_string(opt.failure_prob));
    if (opt.max_steps >= 0) apply("max_steps", std::to_string(opt.max_steps));
    if (opt.sample_every >= 0) apply("sample_every", std::to_string(opt.sample_every));
    if (opt.n_seeds >= 0) apply("n_seeds", std::to_string(opt.n_seeds));
    if (!opt.name.empty()) apply("name", opt.name);
    apply("output_dir", opt.out_dir);

    if (!error.empty()) {
        sl_config_free(config);
        return nullptr;
    }
    char verr[256] = {0};
    if (sl_config_validate(config, verr, sizeof(verr)) != SL_OK) {
        error = verr;
        sl_config_free(config);
        return nullptr;
    }
    return config;
}

int cmd_run(const Options& opt) {
    std::string error;
    sl_config* config = build_config(opt, error);
    if (config == nullptr) {
        std::fprintf(stderr, "error: %s\n", error.c_str());
        return 1;
    }
    char err[256] = {0};
    sl_sim* sim = sl_sim_create(config, opt.seed, err, sizeof(err));
    if (sim == nullptr) {
        std::fprintf(stderr, "error: %s\n", err);
        sl_config_free(config);
        return 1;
    }
    sl_run_report report{};
    sl_status rc = sl_sim_run(sim, opt.out_dir.c_str(), &report);
    if (rc != SL_OK) {
        std::fprintf(stderr, "error: %s\n", sl_status_str(rc));
        sl_sim_free(sim);
        sl_config_free(config);
        return 1;
    }
    // A failed mission is a valid result; it is recorded in the outputs.
    std::printf("seed=%" PRIu64 " success=%d completion_step=%d steps=%d dead=%d\n", opt.seed,
                report.success, report.completion_step, report.steps_executed,
                report.dead_robots);
    sl_sim_free(sim);
    sl_config_free(config);
    return 0;
}

int cmd_sweep(const Options& opt) {
    std::string error;
    sl_config* config = build_config(opt, error);
    if (config == nullptr) {
        std::fprintf(stderr, "error: %s\n", error.c_str());
        return 1;
    }
    char err[256] = {0};
    sl_status rc = sl_run_sweep(config, opt.matrix.c_str(), opt.out_dir.c_str(), err, sizeof(err));
    sl_config_free(config);
    if (rc != SL_OK) {
        std::fprintf(stderr, "error: %s\n", err[0] ? err : sl_status_str(rc));
        return 1;
    }
    std::printf("sweep '%s' written to %s (summary.csv + per-run files)\n", opt.matrix.c_str(),
                opt.out_dir.c_str());
    return 0;
}

int cmd_baseline(const Options& opt) {
    std::string error;
    sl_config* config = build_config(opt, error);
    if (config == nullptr) {
        std::fprintf(stderr, "error: %s\n", error.c_str());
        return 1;
    }
    int steps = 0;
    sl_status rc = sl_optimal_baseline(config, opt.seed, &steps);
    sl_config_free(config);
    if (rc != SL_OK) {
        std::fprintf(stderr, "error: %s\n", sl_status_str(rc));
        return 1;
    }
    std::printf("optimal_baseline_steps=%d\n", steps);
    return 0;
}

int cmd_validate(const Options& opt) {
    std::string error;
    sl_config* config = build_config(opt, error);
    if (config == nullptr) {
        std::fprintf(stderr, "invalid: %s\n", error.c_str());
        return 1;
    }
    sl_config_free(config);
    std::printf("config ok\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"swarmlink: failure-tolerant connectivity-maintenance swarm simulator"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&opt](CLI::App* cmd, bool needs_config) {
        auto* config_opt = cmd->add_option("--config", opt.config_path, "config file path");
        if (needs_config) config_opt->required();
        cmd->add_option("--seed", opt.seed, "random seed");
        cmd->add_option("--n-robots", opt.n_robots, "override robot count");
        cmd->add_option("--links", opt.links, "override links per target");
        cmd->add_option("--failure-prob", opt.failure_prob, "override failure probability");
        cmd->add_option("--max-steps", opt.max_steps, "override step budget");
        cmd->add_option("--sample-every", opt.sample_every, "metrics sampling period");
        cmd->add_option("--n-seeds", opt.n_seeds, "seeds per sweep config");
        cmd->add_option("--name", opt.name, "run name used in output file names");
        cmd->add_option("--out", opt.out_dir, "output directory");
    };

    auto* run = app.add_subcommand("run", "run one experiment and write metrics");
    add_common(run, false);
    auto* sweep = app.add_subcommand("sweep", "run a configuration matrix");
    add_common(sweep, false);
    sweep->add_option("--matrix", opt.matrix, "single | nominal | faults")
        ->check(CLI::IsMember({"single", "nominal", "faults"}));
    auto* baseline = app.add_subcommand("baseline", "print the straight-line optimal step count");
    add_common(baseline, false);
    auto* validate = app.add_subcommand("validate", "check a config and exit");
    add_common(validate, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (run->parsed()) return cmd_run(opt);
    if (sweep->parsed()) return cmd_sweep(opt);
    if (baseline->parsed()) return cmd_baseline(opt);
    if (validate->parsed()) return cmd_validate(opt);
    return 2;
}
