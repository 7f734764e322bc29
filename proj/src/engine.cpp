#include "engine.hpp"

#include <algorithm>
#include <cassert>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "kinematics.hpp"
#include "rng.hpp"

namespace swarmlink {

namespace {

constexpr double kRobotRadius = 0.1;
constexpr double kMinSeparation = 2.0 * kRobotRadius;
constexpr uint64_t kFaultStream = 0x9e3779b97f4a7c15ull;

std::vector<ChainDef> build_chain_table(const std::vector<Target>& targets) {
    std::vector<ChainDef> chains;
    uint8_t next = 0;
    for (const auto& t : targets)
        for (int link = 0; link < t.required_links; ++link)
            chains.push_back({next++, t.id});
    return chains;
}

}  // namespace

FaultPlan FaultPlan::draw(int n_robots, double probability, int max_steps, uint64_t seed) {
    FaultPlan plan;
    plan.failure_probability = probability;
    plan.fates.resize(n_robots);
    Rng rng(seed ^ kFaultStream);
    for (int i = 0; i < n_robots; ++i) {
        bool fails = rng.next_double() < probability;
        int step = static_cast<int>(rng.next_below(static_cast<uint64_t>(std::max(1, max_steps))));
        plan.fates[i] = {fails, step};  // both drawn so the stream shape is fixed
    }
    return plan;
}

bool FaultPlan::eligible(Role role) const {
    return std::find(eligible_roles.begin(), eligible_roles.end(), role) != eligible_roles.end();
}

WorldState spawn_initial(const ExperimentConfig& config, uint64_t seed) {
    validate_config(config);
    const auto& p = config.control;

    WorldState world;
    world.rng_seed = seed;
    world.targets = config.make_targets();
    world.obstacles = config.obstacles;

    Rng rng(seed);
    const int n = config.n_robots;
    double spread = std::clamp(0.55 * std::sqrt(static_cast<double>(n)), 1.8, 3.0);
    spread = std::min(spread, config.arena_half_extent - 0.5);

    world.robots.resize(n);
    world.robots[0].id = 0;
    world.robots[0].role = Role::Root;
    world.robots[0].previous_role = Role::Root;
    world.robots[0].pose = Pose2D(0.0, 0.0, 0.0);

    int rejections = 0;
    auto place_all = [&]() {
        for (int i = 1; i < n; ++i) {
            while (true) {
                double r = spread * std::sqrt(rng.next_double());
                double a = rng.uniform(-M_PI, M_PI);
                Pose2D candidate(r * std::cos(a), r * std::sin(a), rng.uniform(-M_PI, M_PI));
                bool clear = true;
                for (int j = 0; j < i; ++j) {
                    if (distance(candidate.position(), world.robots[j].pose.position()) <
                        kMinSeparation + 0.05) {
                        clear = false;
                        break;
                    }
                }
                if (clear) {
                    world.robots[i].id = i;
                    world.robots[i].role = Role::Free;
                    world.robots[i].previous_role = Role::Free;
                    world.robots[i].pose = candidate;
                    break;
                }
                if (++rejections >= 10000)
                    throw std::runtime_error("spawn failed: arena too dense for robot count");
            }
        }
    };

    while (true) {
        place_all();
        std::vector<Pose2D> poses;
        std::vector<bool> alive(n, true);
        for (const auto& r : world.robots) poses.push_back(r.pose);
        if (is_connected_bfs(build_graph(poses, alive, p.comm_range))) break;
        if (++rejections >= 10000)
            throw std::runtime_error("spawn failed: could not draw a connected cluster");
    }

    // Worker assignment: nearest free robot per target, in target-id order.
    auto chains = build_chain_table(world.targets);
    for (const auto& target : world.targets) {
        int best = -1;
        double best_dist = 0.0;
        for (const auto& r : world.robots) {
            if (r.role != Role::Free) continue;
            double d = distance(r.pose.position(), target.position.position());
            if (best < 0 || d < best_dist) {
                best = r.id;
                best_dist = d;
            }
        }
        if (best < 0) throw std::runtime_error("not enough free robots for worker assignment");
        RobotState& worker = world.robots[best];
        worker.previous_role = worker.role;
        worker.role = Role::Worker;
        worker.assigned_target = target.id;
        for (const auto& chain : chains) {
            if (chain.target_id != target.id) continue;
            ChainLink link;
            link.chain_id = chain.chain_id;
            link.parent_id = worker.links.empty() ? 0 : -1;  // first slot tethers to the root
            worker.links.push_back(link);
        }
    }
    return world;
}

Simulation::Simulation(const ExperimentConfig& config, uint64_t seed)
    : config_(config),
      world_(spawn_initial(config, seed)),
      faults_(FaultPlan::draw(config.n_robots, config.failure_probability, config.max_steps, seed)),
      chains_(build_chain_table(world_.targets)),
      inboxes_(config.n_robots),
      bytes_sent_(config.n_robots, 0),
      root_home_(world_.robots[0].pose.position()) {}

Simulation::Simulation(const ExperimentConfig& config, WorldState world)
    : config_(config),
      world_(std::move(world)),
      faults_(FaultPlan::draw(static_cast<int>(world_.robots.size()), config.failure_probability,
                              config.max_steps, world_.rng_seed)),
      chains_(build_chain_table(world_.targets)),
      inboxes_(world_.robots.size()),
      bytes_sent_(world_.robots.size(), 0),
      root_home_(world_.robots.empty() ? Vec2{} : world_.robots[0].pose.position()) {}

ControlContext Simulation::make_context(int robot_id) const {
    ControlContext ctx;
    ctx.now = world_.step;
    ctx.params = &config_.control;
    ctx.targets = &world_.targets;
    ctx.chains = &chains_;
    ctx.root_home = root_home_;
    ctx.root_id = 0;
    ctx.obstacles = &step_obstacles_;
    ctx.inbox = &inboxes_[robot_id];
    return ctx;
}

void Simulation::deliver() {
    for (auto& inbox : inboxes_) inbox.clear();
    for (const Envelope& env : world_.pending_envelopes) {
        for (auto& robot : world_.robots) {
            if (!robot.alive || robot.id == env.sender_id) continue;
            // Delivery locality: receivers must sit within comm range of the
            // sender's position at send time.
            if (distance(env.sender_position.position(), robot.pose.position()) <=
                config_.control.comm_range)
                inboxes_[robot.id].push_back(env);
        }
    }
    world_.pending_envelopes.clear();
}

void Simulation::resolve_collisions() {
    auto& robots = world_.robots;
    for (int sweep = 0; sweep < 4; ++sweep) {
        bool moved = false;
        for (size_t i = 0; i < robots.size(); ++i) {
            for (size_t j = i + 1; j < robots.size(); ++j) {
                if (!robots[i].alive && !robots[j].alive) continue;
                Vec2 pi = robots[i].pose.position();
                Vec2 pj = robots[j].pose.position();
                double d = distance(pi, pj);
                if (d >= kMinSeparation) continue;
                Vec2 dir = d < 1e-9 ? collision_direction(static_cast<int>(i))
                                    : (pj - pi).normalized();
                double overlap = kMinSeparation - d + 1e-6;
                if (robots[i].alive && robots[j].alive) {
                    robots[i].pose.x -= dir.x * overlap * 0.5;
                    robots[i].pose.y -= dir.y * overlap * 0.5;
                    robots[j].pose.x += dir.x * overlap * 0.5;
                    robots[j].pose.y += dir.y * overlap * 0.5;
                } else if (robots[i].alive) {
                    robots[i].pose.x -= dir.x * overlap;
                    robots[i].pose.y -= dir.y * overlap;
                } else {
                    robots[j].pose.x += dir.x * overlap;
                    robots[j].pose.y += dir.y * overlap;
                }
                moved = true;
            }
        }
        if (!moved) break;
    }
    double e = config_.arena_half_extent;
    for (auto& r : robots) {
        r.pose.x = std::clamp(r.pose.x, -e, e);
        r.pose.y = std::clamp(r.pose.y, -e, e);
    }
}

void Simulation::apply_faults() {
    for (auto& robot : world_.robots) {
        if (!robot.alive || robot.id == 0) continue;
        const FaultFate& fate = faults_.fates[robot.id];
        if (fate.fails && fate.fail_step == world_.step && faults_.eligible(robot.role))
            robot.alive = false;
    }
}

void Simulation::kill_robot(int id) {
    if (id > 0 && id < static_cast<int>(world_.robots.size())) world_.robots[id].alive = false;
}

void Simulation::collect_outboxes() {
    std::fill(bytes_sent_.begin(), bytes_sent_.end(), 0);
    for (auto& robot : world_.robots) {
        if (!robot.alive) {
            robot.outbox.clear();
            continue;
        }
        for (auto& msg : robot.outbox) {
            bytes_sent_[robot.id] += static_cast<int>(wire_size(msg));
            world_.pending_envelopes.push_back(
                {robot.id, robot.pose, std::move(msg), world_.step});
        }
        robot.outbox.clear();
    }
}

void Simulation::step() {
    step_obstacles_ = world_.obstacles;
    for (const auto& r : world_.robots)
        if (!r.alive) step_obstacles_.push_back({r.pose.position(), kRobotRadius});

    deliver();

    for (auto& robot : world_.robots) {
        if (!robot.alive) continue;
        run_controller(robot, make_context(robot.id));
    }

    for (auto& robot : world_.robots) {
        if (!robot.alive) continue;
        if (std::find(pinned_.begin(), pinned_.end(), robot.id) != pinned_.end()) continue;
        UnicycleInput input =
            track_velocity(robot.pose, {robot.commanded_velocity}, config_.control);
        robot.pose = integrate(robot.pose, input, config_.control.dt);
    }

    resolve_collisions();
    apply_faults();
    collect_outboxes();
    ++world_.step;
}

TargetLinkReport Simulation::link_report() const {
    return count_target_links(world_.robots, world_.targets, config_.control);
}

bool Simulation::succeeded() const {
    TargetLinkReport report = link_report();
    for (const auto& target : world_.targets) {
        if (!report.targets_reached.at(target.id)) return false;
        if (report.links_per_target.at(target.id) < target.required_links) return false;
    }
    return true;
}

MetricsRecord Simulation::record_metrics() const {
    MetricsRecord rec;
    rec.step = world_.step;

    std::vector<Pose2D> poses;
    std::vector<bool> alive;
    for (const auto& r : world_.robots) {
        poses.push_back(r.pose);
        alive.push_back(r.alive);
        if (!r.alive) continue;
        ++rec.alive;
        switch (r.role) {
            case Role::Free: ++rec.n_free; break;
            case Role::Networker: ++rec.n_networker; break;
            case Role::Worker: ++rec.n_worker; break;
            case Role::Root: break;
        }
    }
    rec.lambda2 = rec.alive > 0 ? fiedler_value(build_graph(poses, alive, config_.control.comm_range))
                                : 0.0;

    std::vector<int> bw;
    for (const auto& r : world_.robots)
        if (r.alive) bw.push_back(bytes_sent_[r.id]);
    if (!bw.empty()) {
        std::sort(bw.begin(), bw.end());
        rec.min_bw = bw.front();
        rec.max_bw = bw.back();
        rec.median_bw = bw[bw.size() / 2];
    }

    TargetLinkReport links = link_report();
    for (const auto& [id, reached] : links.targets_reached)
        if (reached) ++rec.targets_reached;
    for (const auto& [id, count] : links.links_per_target) rec.total_links += count;
    return rec;
}

RunResult Simulation::run() {
    RunResult result;
    TerminationReport& report = result.report;
    for (const auto& t : world_.targets) report.first_reach_step.emplace_back(t.id, -1);

    bool done = false;
    while (!done) {
        step();
        int executed = world_.step - 1;

        TargetLinkReport links = link_report();
        bool all_ok = true;
        for (const auto& t : world_.targets) {
            bool ok = links.targets_reached.at(t.id) &&
                      links.links_per_target.at(t.id) >= t.required_links;
            all_ok = all_ok && ok;
            if (ok) {
                for (auto& [id, step_reached] : report.first_reach_step)
                    if (id == t.id && step_reached < 0) step_reached = executed;
            }
        }

        bool sampled = executed % config_.sample_every == 0;
        if (all_ok && !report.success) {
            report.success = true;
            report.completion_step = executed;
        }
        done = all_ok || world_.step >= config_.max_steps;
        if (sampled || done) result.records.push_back(record_metrics());
        if (done) break;
    }

    report.steps_executed = world_.step;
    report.reason = report.success ? "all targets reached with required links"
                                   : "max_steps exceeded";
    for (const auto& chain : chains_) {
        int count = 0;
        for (const auto& r : world_.robots)
            if (r.alive && r.role == Role::Networker && !r.links.empty() &&
                r.links.front().chain_id == chain.chain_id)
                ++count;
        report.robots_per_chain.emplace_back(chain.chain_id, count);
    }
    for (const auto& r : world_.robots)
        if (!r.alive) ++report.dead_robots;
    report.resource_exhausted_events = world_.robots[0].root.resource_exhausted_events;
    return result;
}

std::string metrics_csv_header() {
    return "step,lambda2,alive,n_free,n_networker,n_worker,max_bw,median_bw,min_bw,"
           "targets_reached,total_links";
}

std::string metrics_csv_row(const MetricsRecord& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%d,%d,%d,%d,%d,%d,%d,%d,%d", r.step, r.lambda2,
                  r.alive, r.n_free, r.n_networker, r.n_worker, r.max_bw, r.median_bw, r.min_bw,
                  r.targets_reached, r.total_links);
    return buf;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write metrics file '" + path + "'");
    out << metrics_csv_header() << "\n";
    for (const auto& r : records) out << metrics_csv_row(r) << "\n";
}

std::string report_to_json(const TerminationReport& report) {
    nlohmann::json doc;
    doc["success"] = report.success;
    doc["completion_step"] = report.completion_step;
    doc["steps_executed"] = report.steps_executed;
    doc["reason"] = report.reason;
    doc["dead_robots"] = report.dead_robots;
    doc["resource_exhausted_events"] = report.resource_exhausted_events;
    nlohmann::json reach = nlohmann::json::object();
    for (const auto& [id, step] : report.first_reach_step) reach[std::to_string(id)] = step;
    doc["first_reach_step"] = reach;
    nlohmann::json per_chain = nlohmann::json::object();
    for (const auto& [chain, count] : report.robots_per_chain)
        per_chain[std::to_string(chain)] = count;
    doc["robots_per_chain"] = per_chain;
    return doc.dump(2);
}

void write_report_json(const std::string& path, const TerminationReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report file '" + path + "'");
    out << report_to_json(report) << "\n";
}

}  // namespace swarmlink
