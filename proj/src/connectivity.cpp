#include "connectivity.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace swarmlink {

ConnectivityGraph build_graph(const std::vector<Pose2D>& positions, const std::vector<bool>& alive,
                              double comm_range) {
    if (positions.size() != alive.size())
        throw std::invalid_argument("positions and alive must have equal length");

    ConnectivityGraph g;
    for (size_t i = 0; i < positions.size(); ++i)
        if (alive[i]) g.node_ids.push_back(static_cast<int>(i));
    g.n = static_cast<int>(g.node_ids.size());
    if (g.n == 0) throw std::invalid_argument("no alive robots to build a graph from");

    g.adjacency.assign(static_cast<size_t>(g.n) * g.n, 0);
    g.degree.assign(g.n, 0);
    for (int i = 0; i < g.n; ++i) {
        const Vec2 pi = positions[g.node_ids[i]].position();
        for (int j = i + 1; j < g.n; ++j) {
            const Vec2 pj = positions[g.node_ids[j]].position();
            if (distance(pi, pj) <= comm_range) {
                g.adjacency[static_cast<size_t>(i) * g.n + j] = 1;
                g.adjacency[static_cast<size_t>(j) * g.n + i] = 1;
                ++g.degree[i];
                ++g.degree[j];
                g.edges.emplace_back(i, j);
            }
        }
    }
    return g;
}

std::vector<double> jacobi_eigenvalues(std::vector<double> a, int n) {
    if (n <= 0) return {};
    auto at = [&a, n](int i, int j) -> double& { return a[static_cast<size_t>(i) * n + j]; };

    double scale = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(at(i, j)));
    if (scale == 0.0) return std::vector<double>(n, 0.0);

    const double stop = 1e-14 * scale;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) off += std::abs(at(p, q));
        if (off < stop) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = at(p, q);
                if (std::abs(apq) < stop / (n * n)) continue;
                double theta = 0.5 * (at(q, q) - at(p, p)) / apq;
                double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                if (theta < 0.0) t = -t;
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;

                double app = at(p, p), aqq = at(q, q);
                at(p, p) = app - t * apq;
                at(q, q) = aqq + t * apq;
                at(p, q) = 0.0;
                at(q, p) = 0.0;
                for (int k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(p, k) = at(k, p);
                    at(k, q) = s * akp + c * akq;
                    at(q, k) = at(k, q);
                }
            }
        }
    }

    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = at(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

double fiedler_value(const ConnectivityGraph& graph) {
    if (graph.n <= 1) return 0.0;
    std::vector<double> laplacian(static_cast<size_t>(graph.n) * graph.n, 0.0);
    for (int i = 0; i < graph.n; ++i) {
        laplacian[static_cast<size_t>(i) * graph.n + i] = graph.degree[i];
        for (int j = 0; j < graph.n; ++j)
            if (i != j && graph.at(i, j))
                laplacian[static_cast<size_t>(i) * graph.n + j] = -1.0;
    }
    return jacobi_eigenvalues(std::move(laplacian), graph.n)[1];
}

bool is_connected_bfs(const ConnectivityGraph& graph) {
    if (graph.n <= 1) return graph.n == 1;
    std::vector<bool> seen(graph.n, false);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = true;
    int reached = 1;
    while (!frontier.empty()) {
        int u = frontier.front();
        frontier.pop();
        for (int v = 0; v < graph.n; ++v) {
            if (!seen[v] && graph.at(u, v)) {
                seen[v] = true;
                ++reached;
                frontier.push(v);
            }
        }
    }
    return reached == graph.n;
}

namespace {

// Walk one labeled chain from the worker to the root. Intact means every
// member alive and every hop within comm range.
bool chain_intact(const std::vector<RobotState>& robots, const RobotState& worker,
                  const ChainLink& link, double comm_range) {
    if (link.parent_id < 0) return false;
    std::vector<bool> visited(robots.size(), false);
    const RobotState* current = &worker;
    visited[worker.id] = true;
    int hops = 0;
    int next_id = link.parent_id;
    while (true) {
        if (next_id < 0 || next_id >= static_cast<int>(robots.size())) return false;
        if (visited[next_id]) return false;
        const RobotState& next = robots[next_id];
        if (!next.alive) return false;
        if (distance(current->pose.position(), next.pose.position()) > comm_range) return false;
        if (next.role == Role::Root) return true;
        if (next.role != Role::Networker) return false;
        visited[next_id] = true;
        current = &next;
        next_id = next.links.empty() ? -1 : next.links.front().parent_id;
        if (++hops > static_cast<int>(robots.size())) return false;
    }
}

}  // namespace

TargetLinkReport count_target_links(const std::vector<RobotState>& robots,
                                    const std::vector<Target>& targets,
                                    const ControlParams& params) {
    TargetLinkReport report;
    for (const auto& target : targets) {
        report.links_per_target[target.id] = 0;
        report.targets_reached[target.id] = false;
        const RobotState* worker = nullptr;
        for (const auto& r : robots) {
            if (r.alive && r.role == Role::Worker && r.assigned_target == target.id) {
                worker = &r;
                break;
            }
        }
        if (worker == nullptr) continue;  // unreached, not an error

        report.targets_reached[target.id] =
            distance(worker->pose.position(), target.position.position()) <= params.move_threshold;
        int intact = 0;
        for (const auto& link : worker->links)
            if (chain_intact(robots, *worker, link, params.comm_range)) ++intact;
        report.links_per_target[target.id] = intact;
    }
    return report;
}

ConnectivityReport evaluate_constraints(const std::vector<RobotState>& robots,
                                        const std::vector<Target>& targets,
                                        const ControlParams& params) {
    ConnectivityReport report;
    std::vector<Pose2D> positions;
    std::vector<bool> alive;
    positions.reserve(robots.size());
    alive.reserve(robots.size());
    for (const auto& r : robots) {
        positions.push_back(r.pose);
        alive.push_back(r.alive);
        if (r.alive && r.role == Role::Networker) ++report.backbone_robot_count;
    }
    ConnectivityGraph graph = build_graph(positions, alive, params.comm_range);
    report.lambda2 = fiedler_value(graph);
    report.is_connected = report.lambda2 > kConnectivityTol;

    TargetLinkReport links = count_target_links(robots, targets, params);
    report.links_per_target = std::move(links.links_per_target);
    report.targets_reached = std::move(links.targets_reached);
    return report;
}

}  // namespace swarmlink
