/* Public C interface to the swarmlink connectivity-maintenance simulator.
 *
 * All entry points return sl_status (SL_OK on success) or a handle that is
 * NULL on failure; when a char buffer is supplied, a human-readable error is
 * written into it. Handles are opaque and must be released with the matching
 * _free call. Handles are not thread-safe; distinct handles may be used from
 * distinct threads freely.
 */
#ifndef SWARMLINK_H
#define SWARMLINK_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SL_API __declspec(dllexport)
#else
#define SL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sl_status {
    SL_OK = 0,
    SL_ERR_INVALID_ARGUMENT = 1,
    SL_ERR_BAD_CONFIG = 2,
    SL_ERR_IO = 3,
    SL_ERR_RUNTIME = 4,
} sl_status;

typedef struct sl_config sl_config;
typedef struct sl_sim sl_sim;

typedef struct sl_robot_info {
    int id;
    double x;
    double y;
    double theta;
    int role;  /* 0 root, 1 free, 2 networker, 3 worker */
    int alive;
} sl_robot_info;

typedef struct sl_run_report {
    int success;
    int completion_step;
    int steps_executed;
    int dead_robots;
} sl_run_report;

SL_API const char* sl_version(void);
SL_API const char* sl_status_str(sl_status status);

/* ---- configuration ---- */

SL_API sl_config* sl_config_create(void);
SL_API sl_config* sl_config_load(const char* path, char* err, size_t err_len);
SL_API sl_config* sl_config_parse(const char* text, char* err, size_t err_len);
SL_API sl_status sl_config_set(sl_config* config, const char* key, const char* value);
SL_API sl_status sl_config_get(const sl_config* config, const char* key, char* out,
                               size_t out_len);
SL_API sl_status sl_config_validate(const sl_config* config, char* err, size_t err_len);
SL_API sl_status sl_config_save(const sl_config* config, const char* path);
SL_API void sl_config_free(sl_config* config);

/* ---- single simulation ---- */

SL_API sl_sim* sl_sim_create(const sl_config* config, uint64_t seed, char* err, size_t err_len);
SL_API sl_status sl_sim_step(sl_sim* sim);
SL_API int sl_sim_step_count(const sl_sim* sim);
SL_API int sl_sim_succeeded(const sl_sim* sim);
SL_API int sl_sim_robot_count(const sl_sim* sim);
SL_API sl_status sl_sim_robot(const sl_sim* sim, int index, sl_robot_info* out);
SL_API double sl_sim_lambda2(const sl_sim* sim);

/* Runs to termination, optionally writing <name>_seed<k>.csv and a JSON
 * report under out_dir (pass NULL to skip files). */
SL_API sl_status sl_sim_run(sl_sim* sim, const char* out_dir, sl_run_report* report);
SL_API void sl_sim_free(sl_sim* sim);

/* ---- harness ---- */

/* Straight-line lower bound on completion steps for this config and seed. */
SL_API sl_status sl_optimal_baseline(const sl_config* config, uint64_t seed, int* steps_out);

/* Runs seeds 0..n_seeds-1 over a named matrix: "single" (the config as-is),
 * "nominal" (20/1, 40/2, 60/3, 80/4), or "faults" (N in {40,80}, 2 links,
 * p in 0..0.7). Per-run metrics plus summary.csv land under out_dir. */
SL_API sl_status sl_run_sweep(const sl_config* config, const char* matrix, const char* out_dir,
                              char* err, size_t err_len);

#ifdef __cplusplus
}
#endif

#endif /* SWARMLINK_H */
