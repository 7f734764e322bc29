#pragma once

#include <map>
#include <vector>

#include "params.hpp"
#include "robot.hpp"

namespace swarmlink {

// Snapshot of the communication graph over the alive robots. Node k of the
// graph is robot node_ids[k]; adjacency is row-major n*n.
struct ConnectivityGraph {
    int n = 0;
    std::vector<uint8_t> adjacency;
    std::vector<int> degree;
    std::vector<std::pair<int, int>> edges;
    std::vector<int> node_ids;

    uint8_t at(int i, int j) const { return adjacency[static_cast<size_t>(i) * n + j]; }
};

struct ConnectivityReport {
    double lambda2 = 0.0;
    bool is_connected = false;
    std::map<int, int> links_per_target;
    std::map<int, bool> targets_reached;
    int backbone_robot_count = 0;  // alive networkers
};

// Tolerance below which lambda2 is treated as zero (eigensolver noise floor).
constexpr double kConnectivityTol = 1e-8;

// Disc graph over alive positions: edge iff distance <= comm_range. Throws if
// no robot is alive.
ConnectivityGraph build_graph(const std::vector<Pose2D>& positions, const std::vector<bool>& alive,
                              double comm_range);

// Eigenvalues of a dense symmetric matrix (row-major n*n), ascending, by
// cyclic Jacobi rotations.
std::vector<double> jacobi_eigenvalues(std::vector<double> matrix, int n);

// Second-smallest eigenvalue of L = D - A; 0 for a single node.
double fiedler_value(const ConnectivityGraph& graph);

bool is_connected_bfs(const ConnectivityGraph& graph);

// Chain accounting only (no spectral work): per-target intact labeled chains
// and reach flags. A chain is intact when the walk worker -> parents -> root
// crosses only alive robots with every hop <= comm_range.
struct TargetLinkReport {
    std::map<int, int> links_per_target;
    std::map<int, bool> targets_reached;
};
TargetLinkReport count_target_links(const std::vector<RobotState>& robots,
                                    const std::vector<Target>& targets,
                                    const ControlParams& params);

// Full observer report: graph spectrum plus the chain accounting above.
ConnectivityReport evaluate_constraints(const std::vector<RobotState>& robots,
                                        const std::vector<Target>& targets,
                                        const ControlParams& params);

}  // namespace swarmlink
