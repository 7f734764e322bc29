#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace swarmlink {

namespace {

int median_int(std::vector<int> v) {
    if (v.empty()) return -1;
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

double median_double(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

}  // namespace

int sweep_thread_budget() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("SWARMLINK_THREADS")) {
        int cap = std::atoi(env);
        if (cap >= 1) hw = std::min(hw, cap);
    }
    return hw;
}

int optimal_baseline(const ExperimentConfig& config, uint64_t seed) {
    WorldState world = spawn_initial(config, seed);
    const auto& p = config.control;

    // Slot layout: per target ray, relays at d_s, 2*d_s, ... plus the worker
    // on the target itself, repeated per required link.
    struct Slot {
        Vec2 position;
        int worker_id = -1;  // pre-assigned worker slots are not up for grabs
    };
    std::vector<Slot> slots;
    for (const auto& target : world.targets) {
        Vec2 dir = target.position.position().normalized();
        double dist = target.position.position().norm();
        int relays = std::max(0, static_cast<int>(std::ceil(dist / p.safe_distance)) - 1);
        int worker_id = -1;
        for (const auto& r : world.robots)
            if (r.role == Role::Worker && r.assigned_target == target.id) worker_id = r.id;
        slots.push_back({target.position.position(), worker_id});
        for (int link = 0; link < target.required_links; ++link)
            for (int k = 1; k <= relays; ++k)
                slots.push_back({dir * (p.safe_distance * k), -1});
    }

    std::vector<bool> taken(world.robots.size(), false);
    taken[0] = true;  // root stays put
    for (const auto& slot : slots)
        if (slot.worker_id >= 0) taken[slot.worker_id] = true;

    double worst = 0.0;
    for (const auto& slot : slots) {
        if (slot.worker_id >= 0) {
            worst = std::max(worst,
                             distance(world.robots[slot.worker_id].pose.position(), slot.position));
            continue;
        }
        int best = -1;
        double best_dist = 0.0;
        for (const auto& r : world.robots) {
            if (taken[r.id]) continue;
            double d = distance(r.pose.position(), slot.position);
            if (best < 0 || d < best_dist) {
                best = r.id;
                best_dist = d;
            }
        }
        if (best < 0) break;  // fewer robots than slots: bound from assigned ones
        taken[best] = true;
        worst = std::max(worst, best_dist);
    }
    return static_cast<int>(std::ceil(worst / (p.max_speed * p.dt)));
}

RunStats summarize_run(uint64_t seed, const RunResult& result, const ExperimentConfig& config) {
    RunStats stats;
    stats.seed = seed;
    stats.success = result.report.success;
    stats.completion_step = result.report.completion_step;
    stats.dead_robots = result.report.dead_robots;

    std::vector<int> busiest;
    std::vector<int> medians;
    stats.min_sampled_lambda2 = std::numeric_limits<double>::max();
    for (const auto& rec : result.records) {
        busiest.push_back(rec.max_bw);
        medians.push_back(rec.median_bw);
        stats.peak_bw = std::max(stats.peak_bw, rec.max_bw);
        stats.min_sampled_lambda2 = std::min(stats.min_sampled_lambda2, rec.lambda2);
        stats.final_lambda2 = rec.lambda2;
    }
    if (result.records.empty()) stats.min_sampled_lambda2 = 0.0;
    stats.median_busiest_bw = median_int(busiest);
    stats.median_robot_bw = median_int(medians);

    if (!result.records.empty()) {
        const auto& last = result.records.back();
        stats.links_satisfied =
            last.total_links >= config.n_targets * config.links_per_target &&
            last.targets_reached == config.n_targets;
    }
    return stats;
}

SweepResult run_sweep(const std::vector<ExperimentConfig>& matrix, bool write_files,
                      const std::string& summary_dir) {
    struct Task {
        size_t config_index;
        uint64_t seed;
    };
    std::vector<Task> tasks;
    for (size_t c = 0; c < matrix.size(); ++c) {
        validate_config(matrix[c]);
        for (int s = 0; s < matrix[c].n_seeds; ++s)
            tasks.push_back({c, static_cast<uint64_t>(s)});
    }

    std::vector<RunResult> results(tasks.size());
    std::atomic<size_t> next{0};
    int threads = std::min<int>(sweep_thread_budget(), std::max<size_t>(tasks.size(), 1));
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            while (true) {
                size_t i = next.fetch_add(1);
                if (i >= tasks.size()) return;
                Simulation sim(matrix[tasks[i].config_index], tasks[i].seed);
                results[i] = sim.run();
            }
        });
    }
    for (auto& t : pool) t.join();

    SweepResult sweep;
    for (size_t c = 0; c < matrix.size(); ++c) {
        const ExperimentConfig& config = matrix[c];
        ConfigSummary summary;
        summary.name = config.name;
        summary.n_robots = config.n_robots;
        summary.links_per_target = config.links_per_target;
        summary.failure_probability = config.failure_probability;

        std::vector<int> completions;
        std::vector<int> baselines;
        std::vector<int> busiest_meds;
        std::vector<double> final_l2;
        for (size_t i = 0; i < tasks.size(); ++i) {
            if (tasks[i].config_index != c) continue;
            RunStats stats = summarize_run(tasks[i].seed, results[i], config);
            ++summary.n_runs;
            if (stats.success) {
                ++summary.n_success;
                completions.push_back(stats.completion_step);
            }
            summary.peak_bw = std::max(summary.peak_bw, stats.peak_bw);
            busiest_meds.push_back(stats.median_busiest_bw);
            final_l2.push_back(stats.final_lambda2);
            baselines.push_back(optimal_baseline(config, tasks[i].seed));
            summary.runs.push_back(stats);

            if (write_files) {
                std::filesystem::create_directories(config.output_dir);
                std::string stem = config.output_dir + "/" + config.name + "_seed" +
                                   std::to_string(tasks[i].seed);
                write_metrics_csv(stem + ".csv", results[i].records);
                write_report_json(stem + ".report.json", results[i].report);
            }
        }
        summary.success_rate =
            summary.n_runs > 0 ? static_cast<double>(summary.n_success) / summary.n_runs : 0.0;
        summary.median_completion = median_int(completions);
        if (!completions.empty()) {
            summary.min_completion = *std::min_element(completions.begin(), completions.end());
            summary.max_completion = *std::max_element(completions.begin(), completions.end());
        }
        summary.optimal_baseline_steps = median_int(baselines);
        summary.median_busiest_bw = median_int(busiest_meds);
        summary.median_final_lambda2 = median_double(final_l2);
        sweep.summaries.push_back(std::move(summary));
    }

    if (write_files) {
        std::filesystem::create_directories(summary_dir);
        std::ofstream out(summary_dir + "/summary.csv");
        out << summary_csv(sweep);
    }
    return sweep;
}

std::string summary_csv(const SweepResult& sweep) {
    std::ostringstream os;
    os << "name,n_robots,links_per_target,failure_probability,n_runs,n_success,success_rate,"
          "median_completion,min_completion,max_completion,optimal_baseline,peak_bw,"
          "median_busiest_bw,median_final_lambda2\n";
    for (const auto& s : sweep.summaries) {
        char rate[32];
        std::snprintf(rate, sizeof(rate), "%.3f", s.success_rate);
        char l2[32];
        std::snprintf(l2, sizeof(l2), "%.9g", s.median_final_lambda2);
        os << s.name << "," << s.n_robots << "," << s.links_per_target << ","
           << s.failure_probability << "," << s.n_runs << "," << s.n_success << "," << rate << ","
           << s.median_completion << "," << s.min_completion << "," << s.max_completion << ","
           << s.optimal_baseline_steps << "," << s.peak_bw << "," << s.median_busiest_bw << ","
           << l2 << "\n";
    }
    return os.str();
}

std::vector<ExperimentConfig> nominal_matrix(const ExperimentConfig& base) {
    std::vector<ExperimentConfig> matrix;
    const int robots[] = {20, 40, 60, 80};
    const int links[] = {1, 2, 3, 4};
    for (int i = 0; i < 4; ++i) {
        ExperimentConfig c = base;
        c.n_robots = robots[i];
        c.links_per_target = links[i];
        c.failure_probability = 0.0;
        c.name = "n" + std::to_string(robots[i]) + "_l" + std::to_string(links[i]);
        matrix.push_back(c);
    }
    return matrix;
}

std::vector<ExperimentConfig> fault_matrix(const ExperimentConfig& base) {
    std::vector<ExperimentConfig> matrix;
    const int robots[] = {40, 80};
    for (int n : robots) {
        for (int tenth = 0; tenth <= 7; ++tenth) {
            ExperimentConfig c = base;
            c.n_robots = n;
            c.links_per_target = 2;
            c.failure_probability = tenth / 10.0;
            std::ostringstream name;
            name << "n" << n << "_l2_p0." << tenth;
            c.name = name.str();
            matrix.push_back(c);
        }
    }
    return matrix;
}

}  // namespace swarmlink
