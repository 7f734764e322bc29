#include "swarmlink/swarmlink.h"

#include <cstring>
#include <exception>
#include <filesystem>
#include <string>

#include "engine.hpp"
#include "harness.hpp"
#include "params.hpp"

using swarmlink::ExperimentConfig;
using swarmlink::Simulation;

struct sl_config {
    ExperimentConfig impl;
};

struct sl_sim {
    Simulation impl;
    explicit sl_sim(const ExperimentConfig& config, uint64_t seed) : impl(config, seed) {}
};

namespace {

void write_error(char* err, size_t err_len, const char* what) {
    if (err == nullptr || err_len == 0) return;
    std::strncpy(err, what, err_len - 1);
    err[err_len - 1] = '\0';
}

template <typename Fn>
sl_status guarded(Fn&& fn, char* err = nullptr, size_t err_len = 0) {
    try {
        fn();
        return SL_OK;
    } catch (const std::invalid_argument& e) {
        write_error(err, err_len, e.what());
        return SL_ERR_BAD_CONFIG;
    } catch (const std::exception& e) {
        write_error(err, err_len, e.what());
        return SL_ERR_RUNTIME;
    }
}

}  // namespace

extern "C" {

const char* sl_version(void) { return "1.0.0"; }

const char* sl_status_str(sl_status status) {
    switch (status) {
        case SL_OK: return "ok";
        case SL_ERR_INVALID_ARGUMENT: return "invalid argument";
        case SL_ERR_BAD_CONFIG: return "bad configuration";
        case SL_ERR_IO: return "i/o error";
        case SL_ERR_RUNTIME: return "runtime error";
    }
    return "unknown";
}

sl_config* sl_config_create(void) { return new sl_config(); }

sl_config* sl_config_load(const char* path, char* err, size_t err_len) {
    if (path == nullptr) {
        write_error(err, err_len, "path is null");
        return nullptr;
    }
    sl_config* config = nullptr;
    sl_status rc = guarded(
        [&] { config = new sl_config{swarmlink::load_config_file(path)}; }, err, err_len);
    return rc == SL_OK ? config : nullptr;
}

sl_config* sl_config_parse(const char* text, char* err, size_t err_len) {
    if (text == nullptr) {
        write_error(err, err_len, "text is null");
        return nullptr;
    }
    sl_config* config = nullptr;
    sl_status rc = guarded(
        [&] { config = new sl_config{swarmlink::parse_config_text(text)}; }, err, err_len);
    return rc == SL_OK ? config : nullptr;
}

sl_status sl_config_set(sl_config* config, const char* key, const char* value) {
    if (config == nullptr || key == nullptr || value == nullptr) return SL_ERR_INVALID_ARGUMENT;
    return guarded([&] { swarmlink::config_set_field(config->impl, key, value); });
}

sl_status sl_config_get(const sl_config* config, const char* key, char* out, size_t out_len) {
    if (config == nullptr || key == nullptr || out == nullptr || out_len == 0)
        return SL_ERR_INVALID_ARGUMENT;
    return guarded([&] {
        std::string value = swarmlink::config_get_field(config->impl, key);
        if (value.size() + 1 > out_len) throw std::runtime_error("output buffer too small");
        std::memcpy(out, value.c_str(), value.size() + 1);
    });
}

sl_status sl_config_validate(const sl_config* config, char* err, size_t err_len) {
    if (config == nullptr) return SL_ERR_INVALID_ARGUMENT;
    return guarded([&] { swarmlink::validate_config(config->impl); }, err, err_len);
}

sl_status sl_config_save(const sl_config* config, const char* path) {
    if (config == nullptr || path == nullptr) return SL_ERR_INVALID_ARGUMENT;
    sl_status rc = guarded([&] { swarmlink::save_config_file(config->impl, path); });
    return rc == SL_ERR_RUNTIME ? SL_ERR_IO : rc;
}

void sl_config_free(sl_config* config) { delete config; }

sl_sim* sl_sim_create(const sl_config* config, uint64_t seed, char* err, size_t err_len) {
    if (config == nullptr) {
        write_error(err, err_len, "config is null");
        return nullptr;
    }
    sl_sim* sim = nullptr;
    sl_status rc = guarded([&] { sim = new sl_sim(config->impl, seed); }, err, err_len);
    return rc == SL_OK ? sim : nullptr;
}

sl_status sl_sim_step(sl_sim* sim) {
    if (sim == nullptr) return SL_ERR_INVALID_ARGUMENT;
    return guarded([&] { sim->impl.step(); });
}

int sl_sim_step_count(const sl_sim* sim) {
    return sim == nullptr ? -1 : sim->impl.world().step;
}

int sl_sim_succeeded(const sl_sim* sim) {
    if (sim == nullptr) return 0;
    return sim->impl.succeeded() ? 1 : 0;
}

int sl_sim_robot_count(const sl_sim* sim) {
    return sim == nullptr ? 0 : static_cast<int>(sim->impl.world().robots.size());
}

sl_status sl_sim_robot(const sl_sim* sim, int index, sl_robot_info* out) {
    if (sim == nullptr || out == nullptr) return SL_ERR_INVALID_ARGUMENT;
    const auto& robots = sim->impl.world().robots;
    if (index < 0 || index >= static_cast<int>(robots.size())) return SL_ERR_INVALID_ARGUMENT;
    const auto& r = robots[index];
    out->id = r.id;
    out->x = r.pose.x;
    out->y = r.pose.y;
    out->theta = r.pose.theta;
    out->role = static_cast<int>(r.role);
    out->alive = r.alive ? 1 : 0;
    return SL_OK;
}

double sl_sim_lambda2(const sl_sim* sim) {
    if (sim == nullptr) return -1.0;
    return sim->impl.record_metrics().lambda2;
}

sl_status sl_sim_run(sl_sim* sim, const char* out_dir, sl_run_report* report) {
    if (sim == nullptr) return SL_ERR_INVALID_ARGUMENT;
    return guarded([&] {
        swarmlink::RunResult result = sim->impl.run();
        if (out_dir != nullptr) {
            std::filesystem::create_directories(out_dir);
            std::string stem = std::string(out_dir) + "/" + sim->impl.config().name + "_seed" +
                               std::to_string(sim->impl.world().rng_seed);
            swarmlink::write_metrics_csv(stem + ".csv", result.records);
            swarmlink::write_report_json(stem + ".report.json", result.report);
        }
        if (report != nullptr) {
            report->success = result.report.success ? 1 : 0;
            report->completion_step = result.report.completion_step;
            report->steps_executed = result.report.steps_executed;
            report->dead_robots = result.report.dead_robots;
        }
    });
}

void sl_sim_free(sl_sim* sim) { delete sim; }

sl_status sl_optimal_baseline(const sl_config* config, uint64_t seed, int* steps_out) {
    if (config == nullptr || steps_out == nullptr) return SL_ERR_INVALID_ARGUMENT;
    return guarded([&] { *steps_out = swarmlink::optimal_baseline(config->impl, seed); });
}

sl_status sl_run_sweep(const sl_config* config, const char* matrix, const char* out_dir,
                       char* err, size_t err_len) {
    if (config == nullptr || matrix == nullptr || out_dir == nullptr)
        return SL_ERR_INVALID_ARGUMENT;
    return guarded(
        [&] {
            ExperimentConfig base = config->impl;
            base.output_dir = out_dir;
            std::vector<ExperimentConfig> configs;
            std::string kind = matrix;
            if (kind == "single") {
                configs = {base};
            } else if (kind == "nominal") {
                configs = swarmlink::nominal_matrix(base);
            } else if (kind == "faults") {
                configs = swarmlink::fault_matrix(base);
            } else {
                throw std::invalid_argument("unknown matrix '" + kind +
                                            "' (expected single, nominal, or faults)");
            }
            for (auto& c : configs) c.output_dir = out_dir;
            swarmlink::run_sweep(configs, true, out_dir);
        },
        err, err_len);
}

}  // extern "C"
