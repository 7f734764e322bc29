#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "controllers.hpp"
#include "rng.hpp"

using namespace swarmlink;
using Kind = RequestResponseMessage::Kind;

namespace {

// Scenario scaffolding: one robot under test plus a synthetic inbox.
struct Bench {
    ControlParams params;
    std::vector<Target> targets;
    std::vector<ChainDef> chains;
    std::vector<Obstacle> obstacles;
    std::vector<Envelope> inbox;
    int now = 100;

    Bench() {
        Target t;
        t.id = 0;
        t.position = Pose2D(5.0, 0.0, 0.0);
        t.required_links = 1;
        targets.push_back(t);
        chains.push_back({0, 0});
    }

    ControlContext ctx() {
        ControlContext c;
        c.now = now;
        c.params = &params;
        c.targets = &targets;
        c.chains = &chains;
        c.root_home = {0.0, 0.0};
        c.root_id = 0;
        c.obstacles = &obstacles;
        c.inbox = &inbox;
        return c;
    }

    void hear_status(int sender, Vec2 pos, Role role, bool need = false,
                     uint8_t chain = kNoChain) {
        StatusMessage s;
        s.current_role = role;
        s.previous_role = role;
        s.parent_need = need;
        s.target_chain = chain;
        inbox.push_back({sender, Pose2D(pos.x, pos.y, 0.0), s, now - 1});
    }

    void hear(int sender, Vec2 pos, Message msg) {
        inbox.push_back({sender, Pose2D(pos.x, pos.y, 0.0), std::move(msg), now - 1});
    }
};

RobotState make_worker(uint8_t chain, int parent, Vec2 pos = {0, 0}) {
    RobotState r;
    r.id = 10;
    r.role = Role::Worker;
    r.previous_role = Role::Free;
    r.pose = Pose2D(pos.x, pos.y, 0.0);
    r.assigned_target = 0;
    ChainLink link;
    link.chain_id = chain;
    link.parent_id = parent;
    link.parent_linked = true;
    r.links.push_back(link);
    return r;
}

RobotState make_networker(uint8_t chain, int parent, int child, Vec2 pos) {
    RobotState r;
    r.id = 5;
    r.role = Role::Networker;
    r.previous_role = Role::Free;
    r.pose = Pose2D(pos.x, pos.y, 0.0);
    r.assigned_target = 0;
    ChainLink link;
    link.chain_id = chain;
    link.parent_id = parent;
    link.parent_linked = true;
    r.links.push_back(link);
    r.child.child_id = child;
    r.child.child_linked = true;
    return r;
}

bool outbox_has(const RobotState& r, Kind kind) {
    for (const auto& msg : r.outbox)
        if (const auto* rr = std::get_if<RequestResponseMessage>(&msg))
            if (rr->kind == kind) return true;
    return false;
}

const RequestResponseMessage* outbox_find(const RobotState& r, Kind kind) {
    for (const auto& msg : r.outbox)
        if (const auto* rr = std::get_if<RequestResponseMessage>(&msg))
            if (rr->kind == kind) return rr;
    return nullptr;
}

}  // namespace

TEST_CASE("spring law: rest length, stretch, compression") {
    Vec2 toward{1.0, 0.0};
    CHECK(spring_velocity(1.4, toward, 0.8, 1.4).norm() == doctest::Approx(0.0));

    Vec2 stretched = spring_velocity(2.0, toward, 0.8, 1.4);
    CHECK(stretched.x == doctest::Approx(0.48));  // attraction toward the neighbor
    CHECK(stretched.y == doctest::Approx(0.0));

    Vec2 compressed = spring_velocity(1.0, toward, 0.8, 1.4);
    CHECK(compressed.x == doctest::Approx(-0.32));  // repulsion away
}

TEST_CASE("lennard-jones: zero at rest distance, attraction beyond") {
    // Bracket vanishes when d equals delta.
    CHECK(lj_velocity({0, 0}, {0.5, 0}, 60.0, 0.5).norm() == doctest::Approx(0.0).epsilon(1e-12));

    // d = 2*delta: (1/16 - 1/4) < 0, net attraction toward the neighbor.
    Vec2 u = lj_velocity({0, 0}, {1.0, 0}, 60.0, 0.5);
    CHECK(u.x > 0.0);
    CHECK(u.y == doctest::Approx(0.0));
    CHECK(u.x == doctest::Approx(-60.0 * (0.0625 - 0.25)).epsilon(1e-9));

    // Inside the rest distance the interaction repels.
    CHECK(lj_velocity({0, 0}, {0.3, 0}, 60.0, 0.5).x < 0.0);
}

TEST_CASE("obstacle avoidance: empty, head-on, symmetric pair") {
    ControlParams p;
    CHECK(obstacle_avoidance(Pose2D(0, 0, 0), {}, p.obstacle_gain, p.comm_range, p.max_speed)
              .norm() == 0.0);

    std::vector<Obstacle> ahead = {{{0.5, 0.0}, 0.1}};
    Vec2 u = obstacle_avoidance(Pose2D(0, 0, 0), ahead, p.obstacle_gain, p.comm_range, p.max_speed);
    CHECK(u.x < 0.0);
    CHECK(u.y == doctest::Approx(0.0));

    std::vector<Obstacle> pair = {{{0.5, 0.3}, 0.1}, {{0.5, -0.3}, 0.1}};
    Vec2 v = obstacle_avoidance(Pose2D(0, 0, 0), pair, p.obstacle_gain, p.comm_range, p.max_speed);
    CHECK(v.y == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(v.x < 0.0);

    // Inside an obstacle: full-speed push outward.
    std::vector<Obstacle> overlapping = {{{0.05, 0.0}, 0.2}};
    Vec2 w =
        obstacle_avoidance(Pose2D(0, 0, 0), overlapping, p.obstacle_gain, p.comm_range, p.max_speed);
    CHECK(w.norm() == doctest::Approx(p.max_speed));
    CHECK(w.x < 0.0);
}

TEST_CASE("worker gate uses strict inequality") {
    CHECK(worker_gate_open({1.39, 1.2}, 1.4));
    CHECK_FALSE(worker_gate_open({1.4}, 1.4));
    CHECK_FALSE(worker_gate_open({1.39, 1.4}, 1.4));
    CHECK_FALSE(worker_gate_open({}, 1.4));
}

TEST_CASE("worker at the gate boundary commands the zero vector") {
    Bench bench;
    bench.targets[0].position = Pose2D(5.0, 0.0, 0.0);  // 5 m ahead
    RobotState worker = make_worker(0, 5, {0, 0});
    bench.hear_status(5, {-1.4, 0.0}, Role::Networker, false, 0);  // parent at exactly d_s

    run_controller(worker, bench.ctx());
    CHECK(worker.commanded_velocity.norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("worker inside the gate advances on the target") {
    Bench bench;
    RobotState worker = make_worker(0, 5, {0, 0});
    bench.hear_status(5, {-1.0, 0.0}, Role::Networker, false, 0);  // compressed spring

    run_controller(worker, bench.ctx());
    // Spring repulsion (+x) plus target attraction (+x), clamped to max speed.
    CHECK(worker.commanded_velocity.x > 0.0);
    CHECK(worker.commanded_velocity.norm() == doctest::Approx(1.0));
}

TEST_CASE("worker with a parent in [d_s, d_c) commands the pure spring sum") {
    Bench bench;
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        double d = rng.uniform(1.4, 1.7 - 1e-6);
        double angle = rng.uniform(-M_PI, M_PI);
        Vec2 parent_pos{d * std::cos(angle), d * std::sin(angle)};

        Bench b;
        RobotState worker = make_worker(0, 5, {0, 0});
        b.hear_status(5, parent_pos, Role::Networker, false, 0);
        run_controller(worker, b.ctx());

        Vec2 expected = spring_velocity(d, parent_pos.normalized(), b.params.spring_gain,
                                        b.params.safe_distance);
        CHECK(worker.commanded_velocity.x == doctest::Approx(expected.x).epsilon(1e-9));
        CHECK(worker.commanded_velocity.y == doctest::Approx(expected.y).epsilon(1e-9));
    }
}

TEST_CASE("worker beyond critical distance performs the emergency maneuver") {
    Bench bench;
    RobotState worker = make_worker(0, 5, {0, 0});
    bench.hear_status(5, {-1.8, 0.0}, Role::Networker, false, 0);  // 1.8 > d_c

    run_controller(worker, bench.ctx());
    Vec2 u = worker.commanded_velocity;
    CHECK(u.x == doctest::Approx(-0.8 * (1.8 - 1.4)));  // solely toward that parent
    CHECK(u.y == doctest::Approx(0.0));
}

TEST_CASE("emergency branch fires exactly when some parent reaches d_c") {
    Rng rng(7);
    for (int trial = 0; trial < 60; ++trial) {
        double d1 = rng.uniform(0.5, 2.2);
        double d2 = rng.uniform(0.5, 2.2);
        Bench b;
        b.targets[0].required_links = 2;
        b.chains.push_back({1, 0});
        RobotState worker = make_worker(0, 5, {0, 0});
        ChainLink second;
        second.chain_id = 1;
        second.parent_id = 6;
        second.parent_linked = true;
        worker.links.push_back(second);
        b.hear_status(5, {-d1, 0.0}, Role::Networker, false, 0);
        b.hear_status(6, {0.0, d2}, Role::Networker, false, 1);
        run_controller(worker, b.ctx());

        bool emergency = d1 >= b.params.critical_distance || d2 >= b.params.critical_distance;
        Vec2 u = worker.commanded_velocity;
        if (emergency) {
            // Pure attraction toward the farthest over-critical parent.
            Vec2 dir = d1 >= d2 ? Vec2{-1.0, 0.0} : Vec2{0.0, 1.0};
            double worst = std::max(d1, d2);
            CHECK(u.x == doctest::Approx(dir.x * 0.8 * (worst - 1.4)).epsilon(1e-9));
            CHECK(u.y == doctest::Approx(dir.y * 0.8 * (worst - 1.4)).epsilon(1e-9));
        } else {
            Vec2 springs = spring_velocity(d1, {-1, 0}, 0.8, 1.4) +
                           spring_velocity(d2, {0, 1}, 0.8, 1.4);
            if (worker_gate_open({d1, d2}, 1.4))
                springs += (b.targets[0].position.position() - worker.pose.position()) *
                           b.params.target_gain;
            springs = springs.clamped(b.params.max_speed);
            CHECK(u.x == doctest::Approx(springs.x).epsilon(1e-9));
            CHECK(u.y == doctest::Approx(springs.y).epsilon(1e-9));
        }
    }
}

TEST_CASE("dismantling worker beside the root broadcasts completion") {
    Bench bench;
    RobotState worker = make_worker(0, 5, {1.3, 0.0});  // root home is the origin
    worker.dismantling = true;

    run_controller(worker, bench.ctx());
    CHECK(outbox_has(worker, Kind::DismantleComplete));
    CHECK(worker.role == Role::Free);  // reverts after announcing
}

TEST_CASE("stretched worker recruits the nearest free robot") {
    Bench bench;
    RobotState worker = make_worker(0, 0, {1.5, 0.0});  // tethered to the root, stretched
    bench.hear_status(7, {1.8, 0.5}, Role::Free);
    bench.hear_status(8, {3.0, 0.0}, Role::Free);

    run_controller(worker, bench.ctx());
    const auto* req = outbox_find(worker, Kind::JoinRequest);
    REQUIRE(req != nullptr);
    CHECK(req->addressee == 7);  // nearest
    CHECK(req->chain_id == 0);
    CHECK(worker.links[0].pending_id == 7);
}

TEST_CASE("worker holds and signals need when no free robot is in view") {
    Bench bench;
    RobotState worker = make_worker(0, 0, {1.5, 0.0});
    run_controller(worker, bench.ctx());
    CHECK(outbox_find(worker, Kind::JoinRequest) == nullptr);

    bool need = false;
    for (const auto& msg : worker.outbox)
        if (const auto* s = std::get_if<StatusMessage>(&msg)) need = s->parent_need;
    CHECK(need);
}

TEST_CASE("networker at rest between parent and child holds position") {
    Bench bench;
    RobotState net = make_networker(0, 0, 9, {1.4, 0.0});
    bench.hear_status(9, {2.8, 0.0}, Role::Worker, false, 0);  // child at d_s; parent is root

    run_controller(net, bench.ctx());
    CHECK(net.commanded_velocity.norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("networker beyond critical distance ignores the child spring") {
    Bench bench;
    RobotState net = make_networker(0, 2, 9, {0.0, 0.0});
    bench.hear_status(2, {-1.75, 0.0}, Role::Networker, false, 0);
    bench.hear_status(9, {1.0, 0.0}, Role::Worker, false, 0);  // compressed child spring

    run_controller(net, bench.ctx());
    Vec2 u = net.commanded_velocity;
    CHECK(u.x == doctest::Approx(-0.8 * (1.75 - 1.4)));
    CHECK(u.y == doctest::Approx(0.0));
}

TEST_CASE("networker with both neighbors stretched sums two attractive springs") {
    Bench bench;
    bench.obstacles.push_back({{0.0, -0.4}, 0.1});  // would repel if the gate allowed it
    RobotState net = make_networker(0, 2, 9, {0.0, 0.0});
    bench.hear_status(2, {-1.6, 0.0}, Role::Networker, false, 0);
    bench.hear_status(9, {0.0, 1.6}, Role::Worker, false, 0);

    run_controller(net, bench.ctx());
    Vec2 u = net.commanded_velocity;
    // f = 0 (neither side inside d_s), so the obstacle term is disabled.
    CHECK(u.x == doctest::Approx(-0.8 * 0.2).epsilon(1e-9));
    CHECK(u.y == doctest::Approx(0.8 * 0.2).epsilon(1e-9));
}

TEST_CASE("root-adjacent networker extends the chain when stretched and needed") {
    Bench bench;
    RobotState net = make_networker(0, 0, 9, {1.5, 0.0});
    bench.hear_status(9, {2.9, 0.0}, Role::Worker, true, 0);  // child relays parent need
    bench.hear_status(4, {0.4, 0.4}, Role::Free);

    run_controller(net, bench.ctx());
    const auto* req = outbox_find(net, Kind::JoinRequest);
    REQUIRE(req != nullptr);
    CHECK(req->addressee == 4);
    CHECK(req->join_role == Role::Networker);

    // Without the relayed need there is no recruitment.
    RobotState quiet = make_networker(0, 0, 9, {1.5, 0.0});
    Bench calm;
    calm.hear_status(9, {2.9, 0.0}, Role::Worker, false, 0);
    calm.hear_status(4, {0.4, 0.4}, Role::Free);
    run_controller(quiet, calm.ctx());
    CHECK(outbox_find(quiet, Kind::JoinRequest) == nullptr);
}

TEST_CASE("free robot at LJ rest distance from the root does not move") {
    Bench bench;
    RobotState free_bot;
    free_bot.id = 3;
    free_bot.pose = Pose2D(0.5, 0.0, 0.0);
    bench.hear_status(0, {0.0, 0.0}, Role::Root);

    run_controller(free_bot, bench.ctx());
    CHECK(free_bot.commanded_velocity.norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("free robot beyond LJ rest distance is attracted") {
    Bench bench;
    RobotState free_bot;
    free_bot.id = 3;
    free_bot.pose = Pose2D(1.0, 0.0, 0.0);  // 2*delta from the root
    bench.hear_status(0, {0.0, 0.0}, Role::Root);

    run_controller(free_bot, bench.ctx());
    CHECK(free_bot.commanded_velocity.x < 0.0);
}

TEST_CASE("free robot accepts a join request and becomes a networker") {
    Bench bench;
    RobotState free_bot;
    free_bot.id = 3;
    free_bot.pose = Pose2D(0.5, 0.2, 0.0);
    RequestResponseMessage req;
    req.kind = Kind::JoinRequest;
    req.sender = 7;
    req.addressee = 3;
    req.chain_id = 0;
    req.target_id = 0;
    req.join_role = Role::Networker;
    bench.hear(7, {1.5, 0.0}, req);

    run_controller(free_bot, bench.ctx());
    CHECK(free_bot.role == Role::Networker);
    CHECK(free_bot.previous_role == Role::Free);
    CHECK(free_bot.child.child_id == 7);
    CHECK(free_bot.links.size() == 1);
    CHECK(free_bot.links[0].parent_id == 0);  // splices in beside the root
    CHECK(outbox_has(free_bot, Kind::JoinAccept));
}

TEST_CASE("simultaneous join requests: lowest sender wins, others rejected") {
    Bench bench;
    RobotState free_bot;
    free_bot.id = 3;
    RequestResponseMessage a;
    a.kind = Kind::JoinRequest;
    a.sender = 9;
    a.addressee = 3;
    a.chain_id = 0;
    RequestResponseMessage b = a;
    b.sender = 4;
    bench.hear(9, {1.0, 0.0}, a);
    bench.hear(4, {0.0, 1.0}, b);

    run_controller(free_bot, bench.ctx());
    const auto* accept = outbox_find(free_bot, Kind::JoinAccept);
    REQUIRE(accept != nullptr);
    CHECK(accept->addressee == 4);
    const auto* reject = outbox_find(free_bot, Kind::JoinReject);
    REQUIRE(reject != nullptr);
    CHECK(reject->addressee == 9);
    CHECK(free_bot.child.child_id == 4);
}

TEST_CASE("join request carrying the worker role creates a replacement worker") {
    Bench bench;
    bench.targets[0].required_links = 1;
    RobotState free_bot;
    free_bot.id = 3;
    RequestResponseMessage req;
    req.kind = Kind::JoinRequest;
    req.sender = 6;
    req.addressee = 3;
    req.chain_id = 0;
    req.target_id = 0;
    req.join_role = Role::Worker;
    bench.hear(6, {2.0, 0.0}, req);

    run_controller(free_bot, bench.ctx());
    CHECK(free_bot.role == Role::Worker);
    CHECK(free_bot.assigned_target == 0);
    REQUIRE(free_bot.links.size() == 1);
    CHECK(free_bot.links[0].parent_id == 6);  // the requester is the tip networker
}

TEST_CASE("root seeds a parent strand for every configured chain") {
    Bench bench;
    bench.chains.push_back({1, 0});
    RobotState root;
    root.id = 0;
    root.role = Role::Root;
    root.previous_role = Role::Root;

    run_controller(root, bench.ctx());
    CHECK(root.commanded_velocity.norm() == 0.0);

    int seeds = 0;
    for (const auto& msg : root.outbox) {
        if (const auto* strand = std::get_if<StrandInfoMessage>(&msg)) {
            CHECK(strand->direction == Topic::ParentStrand);
            CHECK(strand->ids == std::vector<int>{0});
            ++seeds;
        }
    }
    CHECK(seeds == 2);
}

TEST_CASE("dismantle choice picks the least-robot unfinished chain") {
    std::map<uint8_t, RootChainView> chains;
    chains[1] = {3, 90, 95, true};   // chain A: 3 members, need fresh
    chains[2] = {5, 90, 96, true};   // chain B: 5 members, need fresh
    CHECK(choose_dismantle_chain(chains, 100, 50) == 1);

    chains[2].last_need_step = 10;  // B's need went stale: only one candidate left
    CHECK(choose_dismantle_chain(chains, 100, 50) == -1);
}

TEST_CASE("starved root eventually orders the smallest chain dismantled") {
    Bench bench;
    bench.targets[0].required_links = 1;
    Target second = bench.targets[0];
    second.id = 1;
    second.position = Pose2D(-5.0, 0.0, 0.0);
    bench.targets.push_back(second);
    bench.chains = {{0, 0}, {1, 1}};

    RobotState root;
    root.id = 0;
    root.role = Role::Root;

    // Two needy chains stream child strands and statuses; no free robots.
    StrandInfoMessage small_chain;
    small_chain.direction = Topic::ChildStrand;
    small_chain.chain_id = 0;
    small_chain.ids = {9, 5};
    StrandInfoMessage big_chain;
    big_chain.direction = Topic::ChildStrand;
    big_chain.chain_id = 1;
    big_chain.ids = {8, 6, 7, 4};

    bool ordered = false;
    for (int step = 0; step < 150 && !ordered; ++step) {
        bench.now = 100 + step;
        bench.inbox.clear();
        bench.hear(5, {1.4, 0.0}, small_chain);
        bench.hear(4, {-1.4, 0.0}, big_chain);
        bench.hear_status(5, {1.4, 0.0}, Role::Networker, true, 0);
        bench.hear_status(4, {-1.4, 0.0}, Role::Networker, true, 1);
        run_controller(root, bench.ctx());
        const auto* order = outbox_find(root, Kind::Dismantle);
        if (order != nullptr) {
            CHECK(order->chain_id == 0);  // the 2-member chain goes
            ordered = true;
        }
    }
    CHECK(ordered);
}
