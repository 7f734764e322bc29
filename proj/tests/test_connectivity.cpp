#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "connectivity.hpp"
#include "rng.hpp"

using namespace swarmlink;

namespace {

ConnectivityGraph grid_graph(const std::vector<Vec2>& points, double range) {
    std::vector<Pose2D> poses;
    for (const auto& p : points) poses.emplace_back(p.x, p.y, 0.0);
    return build_graph(poses, std::vector<bool>(points.size(), true), range);
}

ConnectivityGraph complete_graph(int n) {
    // Unit-spacing cluster well inside range.
    std::vector<Vec2> pts;
    for (int i = 0; i < n; ++i) pts.push_back({0.01 * i, 0.0});
    return grid_graph(pts, 1.0);
}

ConnectivityGraph path_graph(int n) {
    std::vector<Vec2> pts;
    for (int i = 0; i < n; ++i) pts.push_back({1.0 * i, 0.0});
    return grid_graph(pts, 1.0);
}

ConnectivityGraph random_geometric(Rng& rng, int n, double side, double range) {
    std::vector<Vec2> pts;
    for (int i = 0; i < n; ++i) pts.push_back({rng.uniform(0, side), rng.uniform(0, side)});
    return grid_graph(pts, range);
}

std::vector<double> laplacian_of(const ConnectivityGraph& g) {
    std::vector<double> m(static_cast<size_t>(g.n) * g.n, 0.0);
    for (int i = 0; i < g.n; ++i) {
        m[static_cast<size_t>(i) * g.n + i] = g.degree[i];
        for (int j = 0; j < g.n; ++j)
            if (i != j && g.at(i, j)) m[static_cast<size_t>(i) * g.n + j] = -1.0;
    }
    return m;
}

}  // namespace

TEST_CASE("disc graph edges follow the range threshold") {
    auto one_edge = grid_graph({{0, 0}, {1.9, 0}}, 2.0);
    CHECK(one_edge.edges.size() == 1);

    auto no_edge = grid_graph({{0, 0}, {2.1, 0}}, 2.0);
    CHECK(no_edge.edges.empty());

    auto line = grid_graph({{0, 0}, {1.5, 0}, {3.0, 0}}, 2.0);
    REQUIRE(line.edges.size() == 2);
    CHECK(line.at(0, 1) == 1);
    CHECK(line.at(1, 2) == 1);
    CHECK(line.at(0, 2) == 0);
}

TEST_CASE("graph excludes dead robots and rejects an empty node set") {
    std::vector<Pose2D> poses = {Pose2D(0, 0, 0), Pose2D(1, 0, 0), Pose2D(2, 0, 0)};
    auto g = build_graph(poses, {true, false, true}, 2.5);
    CHECK(g.n == 2);
    CHECK(g.node_ids == std::vector<int>{0, 2});
    CHECK_THROWS_AS(build_graph(poses, {false, false, false}, 2.5), std::invalid_argument);
}

TEST_CASE("adjacency is symmetric with zero diagonal and degrees match row sums") {
    Rng rng(3);
    auto g = random_geometric(rng, 25, 10.0, 2.0);
    for (int i = 0; i < g.n; ++i) {
        CHECK(g.at(i, i) == 0);
        int row_sum = 0;
        for (int j = 0; j < g.n; ++j) {
            CHECK(g.at(i, j) == g.at(j, i));
            row_sum += g.at(i, j);
        }
        CHECK(row_sum == g.degree[i]);
    }
}

TEST_CASE("fiedler value of the 2-path is 2") {
    CHECK(fiedler_value(path_graph(2)) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("two isolated nodes have zero fiedler value") {
    auto g = grid_graph({{0, 0}, {5, 0}}, 1.0);
    CHECK(fiedler_value(g) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("complete graph spectrum: lambda2(K_n) = n") {
    for (int n = 2; n <= 10; ++n)
        CHECK(fiedler_value(complete_graph(n)) == doctest::Approx(double(n)).epsilon(1e-10));
}

TEST_CASE("path graph spectrum: lambda2 = 2(1 - cos(pi/n))") {
    for (int n = 2; n <= 10; ++n) {
        double expected = 2.0 * (1.0 - std::cos(M_PI / n));
        CHECK(fiedler_value(path_graph(n)) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("single node graph has lambda2 = 0") {
    CHECK(fiedler_value(path_graph(1)) == 0.0);
}

TEST_CASE("bfs connectivity basics") {
    CHECK(is_connected_bfs(path_graph(5)));
    auto disjoint = grid_graph({{0, 0}, {1, 0}, {10, 0}, {11, 0}}, 2.0);
    CHECK_FALSE(is_connected_bfs(disjoint));
}

TEST_CASE("lambda2 > tol agrees with bfs on 100 random geometric graphs") {
    Rng rng(2024);
    int connected = 0;
    for (int trial = 0; trial < 100; ++trial) {
        int n = 2 + static_cast<int>(rng.next_below(29));
        auto g = random_geometric(rng, n, 8.0, 2.0);
        bool by_bfs = is_connected_bfs(g);
        bool by_lambda = fiedler_value(g) > kConnectivityTol;
        CHECK(by_bfs == by_lambda);
        connected += by_bfs ? 1 : 0;
    }
    // The sweep must exercise both outcomes to mean anything.
    CHECK(connected > 5);
    CHECK(connected < 95);
}

TEST_CASE("laplacian eigenvalues are nonnegative to solver precision") {
    Rng rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        auto g = random_geometric(rng, 3 + static_cast<int>(rng.next_below(20)), 6.0, 2.0);
        auto eig = jacobi_eigenvalues(laplacian_of(g), g.n);
        for (double v : eig) CHECK(v >= -1e-9);
        CHECK(std::abs(eig.front()) <= 1e-9);  // constant vector is always in the kernel
    }
}

TEST_CASE("adding an edge never decreases lambda2") {
    Rng rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 4 + static_cast<int>(rng.next_below(12));
        auto g = random_geometric(rng, n, 5.0, 1.5);
        double before = fiedler_value(g);

        std::vector<std::pair<int, int>> missing;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (!g.at(i, j)) missing.emplace_back(i, j);
        if (missing.empty()) continue;
        auto [i, j] = missing[rng.next_below(missing.size())];
        g.adjacency[static_cast<size_t>(i) * n + j] = 1;
        g.adjacency[static_cast<size_t>(j) * n + i] = 1;
        ++g.degree[i];
        ++g.degree[j];

        CHECK(fiedler_value(g) >= before - 1e-9);
    }
}

TEST_CASE("jacobi matches a hand-computed 3x3 spectrum") {
    // det(A - xI) = 0 for A = [[2,1,0],[1,2,1],[0,1,2]]: x = 2, 2 +/- sqrt(2).
    std::vector<double> m = {2, 1, 0, 1, 2, 1, 0, 1, 2};
    auto eig = jacobi_eigenvalues(m, 3);
    CHECK(eig[0] == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-12));
    CHECK(eig[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(eig[2] == doctest::Approx(2.0 + std::sqrt(2.0)).epsilon(1e-12));
}

namespace {

// Minimal world: root(0) at origin, a chain of networkers, worker at the end.
std::vector<RobotState> make_chain_world(const std::vector<double>& xs, int target_id,
                                         uint8_t chain_id) {
    std::vector<RobotState> robots(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        robots[i].id = static_cast<int>(i);
        robots[i].pose = Pose2D(xs[i], 0.0, 0.0);
        robots[i].alive = true;
    }
    robots[0].role = Role::Root;
    for (size_t i = 1; i + 1 < xs.size(); ++i) {
        robots[i].role = Role::Networker;
        ChainLink link;
        link.chain_id = chain_id;
        link.parent_id = static_cast<int>(i) - 1;
        robots[i].links.push_back(link);
    }
    auto& worker = robots.back();
    worker.role = Role::Worker;
    worker.assigned_target = target_id;
    ChainLink link;
    link.chain_id = chain_id;
    link.parent_id = static_cast<int>(xs.size()) - 2;
    worker.links.push_back(link);
    return robots;
}

}  // namespace

TEST_CASE("worker on target with an intact chain counts one link") {
    auto robots = make_chain_world({0.0, 1.4, 2.8, 4.2}, 0, 0);
    std::vector<Target> targets(1);
    targets[0].id = 0;
    targets[0].position = Pose2D(4.2, 0, 0);
    targets[0].required_links = 1;

    ControlParams params;
    auto report = count_target_links(robots, targets, params);
    CHECK(report.targets_reached.at(0));
    CHECK(report.links_per_target.at(0) == 1);
}

TEST_CASE("a dead networker with no bridge breaks the chain") {
    auto robots = make_chain_world({0.0, 1.4, 2.8, 4.2}, 0, 0);
    robots[2].alive = false;
    std::vector<Target> targets(1);
    targets[0].id = 0;
    targets[0].position = Pose2D(4.2, 0, 0);

    ControlParams params;
    auto report = count_target_links(robots, targets, params);
    CHECK(report.links_per_target.at(0) == 0);
}

TEST_CASE("hops beyond comm range break the chain even when everyone is alive") {
    auto robots = make_chain_world({0.0, 2.5, 4.2}, 0, 0);
    ControlParams params;  // comm_range 2.0
    std::vector<Target> targets(1);
    targets[0].id = 0;
    targets[0].position = Pose2D(4.2, 0, 0);
    CHECK(count_target_links(robots, targets, params).links_per_target.at(0) == 0);
}

TEST_CASE("a target with no assigned worker reports unreached, not an error") {
    std::vector<RobotState> robots(1);
    robots[0].role = Role::Root;
    std::vector<Target> targets(1);
    targets[0].id = 3;
    targets[0].position = Pose2D(4, 0, 0);
    ControlParams params;
    auto report = count_target_links(robots, targets, params);
    CHECK_FALSE(report.targets_reached.at(3));
    CHECK(report.links_per_target.at(3) == 0);
}

TEST_CASE("evaluate_constraints combines spectrum, reach, and backbone census") {
    auto robots = make_chain_world({0.0, 1.4, 2.8, 4.2}, 0, 0);
    std::vector<Target> targets(1);
    targets[0].id = 0;
    targets[0].position = Pose2D(4.2, 0, 0);
    ControlParams params;

    auto report = evaluate_constraints(robots, targets, params);
    CHECK(report.is_connected);
    CHECK(report.lambda2 > kConnectivityTol);
    CHECK(report.backbone_robot_count == 2);
    CHECK(report.targets_reached.at(0));

    robots[2].alive = false;  // splits the line: {0,1} vs {3}
    auto broken = evaluate_constraints(robots, targets, params);
    CHECK_FALSE(broken.is_connected);
    CHECK(broken.lambda2 <= kConnectivityTol);
}
