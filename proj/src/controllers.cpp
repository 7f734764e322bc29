#include "controllers.hpp"

#include <algorithm>
#include <cmath>

namespace swarmlink {

namespace {

constexpr double kObstacleInfluence = 1.0;   // meters
constexpr int kHandshakePatience = 60;       // steps before a pending request is abandoned
constexpr int kBridgePatience = 600;         // steps hunting a broken chain before giving up
constexpr int kRelayCooldown = 25;           // per (kind, chain) rebroadcast spacing
constexpr int kRejectCooldown = 50;          // skip a candidate this long after it rejected us
constexpr int kNeedWindow = 50;              // root: how fresh a need signal must be
constexpr double kSeekArrive = 0.5;          // close enough to a failed robot's last position
// Spring equilibria settle asymptotically at the rest length, so an exact
// ">= d_s" trigger would never fire in a noise-free world; a link counts as
// taut slightly before that.
constexpr double kRecruitSlack = 0.03;       // meters

using Kind = RequestResponseMessage::Kind;

struct ViewEntry {
    Vec2 position;
    StatusMessage status;
};

// Per-step digest of the inbox.
struct Ingest {
    std::map<int, ViewEntry> view;              // fresh statuses this step
    std::vector<RequestResponseMessage> requests_to_me;
    bool dismantle_ordered = false;
    bool complete_heard = false;                // DismantleComplete for one of my chains
    uint8_t complete_chain = kNoChain;          // root: which chain completed
};

// Rejection memory keyed into relay_dedupe's key space (0x40 prefix) so a
// spurned requester tries someone else for a while.
bool recently_rejected(const RobotState& self, const ControlContext& ctx, int id) {
    auto it = self.relay_dedupe.find((0x40 << 8) | (id & 0xff));
    return it != self.relay_dedupe.end() && ctx.now - it->second < kRejectCooldown;
}

void note_rejection(RobotState& self, const ControlContext& ctx, int id) {
    self.relay_dedupe[(0x40 << 8) | (id & 0xff)] = ctx.now;
}

std::vector<uint8_t> chains_of_target(const ControlContext& ctx, int target_id) {
    std::vector<uint8_t> out;
    for (const auto& c : *ctx.chains)
        if (c.target_id == target_id) out.push_back(c.chain_id);
    return out;
}

int target_of_chain(const ControlContext& ctx, uint8_t chain_id) {
    for (const auto& c : *ctx.chains)
        if (c.chain_id == chain_id) return c.target_id;
    return -1;
}

bool owns_chain(const RobotState& self, uint8_t chain) {
    return self.link_for_chain(chain) != nullptr ||
           (!self.links.empty() && self.links.front().chain_id == chain);
}

void queue_relay(RobotState& self, const ControlContext& ctx, const RequestResponseMessage& msg) {
    int key = (static_cast<int>(msg.kind) << 8) | msg.chain_id;
    auto it = self.relay_dedupe.find(key);
    if (it != self.relay_dedupe.end() && ctx.now - it->second < kRelayCooldown) return;
    self.relay_dedupe[key] = ctx.now;
    RequestResponseMessage relayed = msg;
    relayed.sender = self.id;
    self.outbox.emplace_back(relayed);
}

// Inbox digestion shared by all roles: refresh the neighbor picture, adopt
// strand info flowing through this robot, surface requests and chain orders.
Ingest ingest_inbox(RobotState& self, const ControlContext& ctx) {
    Ingest in;
    for (const Envelope& env : *ctx.inbox) {
        self.last_pos[env.sender_id] = env.sender_position.position();

        if (const auto* status = std::get_if<StatusMessage>(&env.payload)) {
            self.last_heard[env.sender_id] = ctx.now;
            self.last_status[env.sender_id] = *status;
            in.view[env.sender_id] = {env.sender_position.position(), *status};
            continue;
        }

        if (const auto* strand = std::get_if<StrandInfoMessage>(&env.payload)) {
            if (strand->direction == Topic::ParentStrand) {
                if (self.role == Role::Worker || self.role == Role::Networker) {
                    ChainLink* link = self.link_for_chain(strand->chain_id);
                    if (link != nullptr && link->parent_id == env.sender_id) {
                        if (auto relayed = relay_strand(*strand, self.id))
                            link->parent_strand = relayed->ids;
                    }
                }
            } else {  // child strand, flows worker -> root
                if (self.role == Role::Networker && !self.links.empty() &&
                    self.links.front().chain_id == strand->chain_id &&
                    self.child.child_id == env.sender_id) {
                    if (auto relayed = relay_strand(*strand, self.id))
                        self.child.child_strand = relayed->ids;
                }
                if (self.role == Role::Root) {
                    auto& cv = self.root.chains[strand->chain_id];
                    cv.member_count = static_cast<int>(strand->ids.size());
                    cv.last_strand_step = ctx.now;
                    cv.ever_seen = true;
                }
            }
            continue;
        }

        const auto& rr = std::get<RequestResponseMessage>(env.payload);
        switch (rr.kind) {
            case Kind::JoinRequest:
                if (rr.addressee == self.id) in.requests_to_me.push_back(rr);
                break;
            case Kind::JoinAccept:
            case Kind::JoinReject:
                if (rr.addressee == self.id) {
                    bool accepted = rr.kind == Kind::JoinAccept;
                    for (auto& link : self.links) {
                        if (link.pending_id != rr.sender || link.chain_id != rr.chain_id) continue;
                        if (accepted) {
                            link.parent_id = rr.sender;
                            link.parent_linked = false;
                            link.failed_parent_id = -1;
                            link.seeking_since = -1;
                            self.last_heard[rr.sender] = ctx.now;
                        } else {
                            note_rejection(self, ctx, rr.sender);
                        }
                        link.pending_id = -1;
                        link.pending_since = -1;
                    }
                    if (self.child.pending_id == rr.sender) {
                        if (accepted) {
                            self.child.child_id = rr.sender;
                            self.child.child_linked = true;  // replacement navigates to us
                            self.child.failed_child_id = -1;
                            self.child.seeking_since = -1;
                            self.child.child_strand.clear();
                            self.last_heard[rr.sender] = ctx.now;
                        } else {
                            note_rejection(self, ctx, rr.sender);
                        }
                        self.child.pending_id = -1;
                        self.child.pending_since = -1;
                    }
                }
                break;
            case Kind::Dismantle:
                if (self.role != Role::Root && owns_chain(self, rr.chain_id)) {
                    in.dismantle_ordered = true;
                    queue_relay(self, ctx, rr);
                }
                break;
            case Kind::DismantleComplete:
                if (self.role == Role::Root) {
                    in.complete_heard = true;
                    in.complete_chain = rr.chain_id;
                } else if (owns_chain(self, rr.chain_id)) {
                    in.complete_heard = true;
                    queue_relay(self, ctx, rr);
                }
                break;
            case Kind::Expand:
                // Growth restarts by itself; pass the word along.
                if (self.role != Role::Root && owns_chain(self, rr.chain_id))
                    queue_relay(self, ctx, rr);
                break;
        }
    }
    return in;
}

Vec2 known_position(const RobotState& self, const ControlContext& ctx, int id) {
    if (id == ctx.root_id) return ctx.root_home;
    auto it = self.last_pos.find(id);
    if (it != self.last_pos.end()) return it->second;
    return ctx.root_home;
}

double known_distance(const RobotState& self, const ControlContext& ctx, int id) {
    return distance(self.pose.position(), known_position(self, ctx, id));
}

// Direction a chain should grow in: the root-to-target ray, fanned out a
// little per sibling link so multi-link bundles do not stack on one line.
Vec2 chain_growth_dir(const ControlContext& ctx, int target_id, uint8_t chain_id,
                      const Vec2& fallback) {
    const Target* target = nullptr;
    for (const auto& t : *ctx.targets)
        if (t.id == target_id) target = &t;
    if (target == nullptr) return fallback.normalized();

    int index = 0, count = 0;
    for (const auto& c : *ctx.chains) {
        if (c.target_id != target_id) continue;
        if (c.chain_id == chain_id) index = count;
        ++count;
    }
    Vec2 dir = (target->position.position() - ctx.root_home).normalized();
    double offset = (index - 0.5 * (count - 1)) * 0.25;
    double cos_o = std::cos(offset), sin_o = std::sin(offset);
    return {dir.x * cos_o - dir.y * sin_o, dir.x * sin_o + dir.y * cos_o};
}

Vec2 seek_velocity(const RobotState& self, const ControlContext& ctx, const Vec2& failed_pos,
                   const Vec2& onward) {
    const auto& p = *ctx.params;
    Vec2 goal = failed_pos;
    if (distance(self.pose.position(), failed_pos) < kSeekArrive) goal = onward;
    return (goal - self.pose.position()).normalized() * (p.seek_speed_factor * p.max_speed);
}

// Nearest fresh-view robot passing `pred`, distance ties broken by id.
template <typename Pred>
int nearest_in_view(const RobotState& self, const Ingest& in, Pred pred) {
    int best = -1;
    double best_dist = 0.0;
    for (const auto& [id, entry] : in.view) {
        if (id == self.id || !pred(id, entry)) continue;
        double d = distance(self.pose.position(), entry.position);
        if (best < 0 || d < best_dist - 1e-12) {
            best = id;
            best_dist = d;
        }
    }
    return best;
}

void send_status(RobotState& self, bool need) {
    StatusMessage s;
    s.current_role = self.role;
    s.previous_role = self.previous_role;
    s.parent_need = need;
    s.target_chain = self.status_chain();
    self.outbox.emplace_back(s);
}

void send_join_request(RobotState& self, const ControlContext& ctx, ChainLink& link, int addressee,
                       Role join_role) {
    RequestResponseMessage req;
    req.kind = Kind::JoinRequest;
    req.sender = self.id;
    req.addressee = addressee;
    req.chain_id = link.chain_id;
    req.target_id = self.assigned_target >= 0 ? static_cast<uint8_t>(self.assigned_target)
                                              : kNoChain;
    req.join_role = join_role;
    self.outbox.emplace_back(req);
    link.pending_id = addressee;
    if (link.pending_since < 0) link.pending_since = ctx.now;
}

void revert_to_free(RobotState& self) {
    self.previous_role = self.role;
    self.role = Role::Free;
    self.clear_chain_state();
}

// Failed-parent handling shared by workers and networkers: flip the link into
// seek mode aimed at the parent's last known position.
void start_parent_seek(RobotState& self, const ControlContext& ctx, ChainLink& link) {
    link.failed_parent_id = link.parent_id;
    link.failed_parent_pos = known_position(self, ctx, link.parent_id);
    link.seeking_since = ctx.now;
    link.parent_id = -1;
    link.parent_linked = false;
    link.pending_id = -1;
    link.pending_since = -1;
}

// Candidates rootward of the failed robot, deepest (closest to the break)
// first. The root is always reachable as a last resort.
std::vector<int> parent_seek_candidates(const ChainLink& link, int root_id, int self_id) {
    std::vector<int> out;
    const auto& strand = link.parent_strand;
    auto failed = std::find(strand.begin(), strand.end(), link.failed_parent_id);
    if (failed != strand.end()) {
        for (auto it = strand.begin(); it != failed; ++it)
            if (*it != self_id) out.push_back(*it);
        std::reverse(out.begin(), out.end());  // deepest ancestor first
    }
    if (std::find(out.begin(), out.end(), root_id) == out.end()) out.push_back(root_id);
    return out;
}

// Advance one seeking link: request the deepest visible candidate, fall back
// to replanning through the root once patience runs out. Returns the seek
// movement contribution.
Vec2 drive_parent_seek(RobotState& self, const ControlContext& ctx, const Ingest& in,
                       ChainLink& link) {
    if (ctx.now - link.seeking_since > kBridgePatience) {
        link.parent_id = ctx.root_id;
        link.parent_linked = false;
        link.failed_parent_id = -1;
        link.seeking_since = -1;
        return {};
    }
    if (link.pending_id < 0) {
        for (int candidate : parent_seek_candidates(link, ctx.root_id, self.id)) {
            if (recently_rejected(self, ctx, candidate)) continue;
            if (candidate == ctx.root_id &&
                known_distance(self, ctx, ctx.root_id) <= ctx.params->comm_range) {
                send_join_request(self, ctx, link, candidate, Role::Networker);
                break;
            }
            auto seen = in.view.find(candidate);
            if (seen != in.view.end()) {
                send_join_request(self, ctx, link, candidate, Role::Networker);
                break;
            }
        }
    }
    return seek_velocity(self, ctx, link.failed_parent_pos, ctx.root_home);
}

void process_pending_timeouts(RobotState& self, const ControlContext& ctx) {
    for (auto& link : self.links) {
        if (link.pending_id >= 0 && ctx.now - link.pending_since > kHandshakePatience) {
            note_rejection(self, ctx, link.pending_id);
            link.pending_id = -1;
            link.pending_since = -1;
        }
    }
    if (self.child.pending_id >= 0 && ctx.now - self.child.pending_since > kHandshakePatience) {
        note_rejection(self, ctx, self.child.pending_id);
        self.child.pending_id = -1;
        self.child.pending_since = -1;
    }
}

void broadcast_child_strand_seed(RobotState& self) {
    for (const auto& link : self.links) {
        StrandInfoMessage seed;
        seed.direction = Topic::ChildStrand;
        seed.chain_id = link.chain_id;
        seed.ids = {self.id};
        self.outbox.emplace_back(seed);
    }
}

void rebroadcast_strands(RobotState& self) {
    for (const auto& link : self.links) {
        if (!link.parent_strand.empty()) {
            StrandInfoMessage msg;
            msg.direction = Topic::ParentStrand;
            msg.chain_id = link.chain_id;
            msg.ids = link.parent_strand;
            self.outbox.emplace_back(msg);
        }
    }
    if (!self.child.child_strand.empty() && !self.links.empty()) {
        StrandInfoMessage msg;
        msg.direction = Topic::ChildStrand;
        msg.chain_id = self.links.front().chain_id;
        msg.ids = self.child.child_strand;
        self.outbox.emplace_back(msg);
    }
}

Vec2 obstacle_term(const RobotState& self, const ControlContext& ctx) {
    return obstacle_avoidance(self.pose, *ctx.obstacles, ctx.params->obstacle_gain,
                              ctx.params->comm_range, ctx.params->max_speed);
}

Vec2 spring_to(const RobotState& self, const ControlContext& ctx, int id) {
    Vec2 other = known_position(self, ctx, id);
    Vec2 delta = other - self.pose.position();
    double d = delta.norm();
    if (d < 1e-9)
        return collision_direction(self.id) * (ctx.params->spring_gain * ctx.params->safe_distance);
    return spring_velocity(d, delta.normalized(), ctx.params->spring_gain,
                           ctx.params->safe_distance);
}

// ---------------------------------------------------------------- worker --

void control_worker(RobotState& self, const ControlContext& ctx, Ingest& in) {
    const auto& p = *ctx.params;
    if (in.dismantle_ordered) self.dismantling = true;

    const Target* target = nullptr;
    for (const auto& t : *ctx.targets)
        if (t.id == self.assigned_target) target = &t;

    if (self.dismantling) {
        // Walk home along the chain; announce completion once beside the root.
        Vec2 goal = self.links.empty() || self.links.front().parent_id < 0
                        ? ctx.root_home
                        : known_position(self, ctx, self.links.front().parent_id);
        if (known_distance(self, ctx, ctx.root_id) <= p.safe_distance) {
            RequestResponseMessage done;
            done.kind = Kind::DismantleComplete;
            done.sender = self.id;
            done.chain_id = self.links.empty() ? kNoChain : self.links.front().chain_id;
            done.target_id = static_cast<uint8_t>(std::max(self.assigned_target, 0));
            self.outbox.emplace_back(done);
            send_status(self, false);
            revert_to_free(self);
            return;
        }
        self.commanded_velocity =
            ((goal - self.pose.position()).normalized() * (p.seek_speed_factor * p.max_speed) +
             obstacle_term(self, ctx))
                .clamped(p.max_speed);
        send_status(self, true);
        broadcast_child_strand_seed(self);
        return;
    }

    process_pending_timeouts(self, ctx);

    // Parents gone quiet become repair targets; the root tether is exempt
    // (the root is static and often simply out of range). A parent whose
    // status says it is no longer part of the backbone has defected, not
    // died, but the recovery path is the same.
    std::set<int> watched;
    for (const auto& link : self.links)
        if (link.parent_id > 0) watched.insert(link.parent_id);
    for (int failed : detect_failures(self.last_heard, watched, ctx.now, p.failure_timeout_steps))
        for (auto& link : self.links)
            if (link.parent_id == failed) start_parent_seek(self, ctx, link);
    for (auto& link : self.links) {
        if (link.parent_id <= 0) continue;
        auto seen = in.view.find(link.parent_id);
        if (seen != in.view.end() && seen->second.status.current_role == Role::Free)
            start_parent_seek(self, ctx, link);
    }

    bool reached = target != nullptr &&
                   distance(self.pose.position(), target->position.position()) <= p.move_threshold;

    // Latch arrivals and gather active tether distances.
    std::vector<double> dists;
    for (auto& link : self.links) {
        if (link.parent_id < 0) continue;
        double d = known_distance(self, ctx, link.parent_id);
        if (d <= p.safe_distance + 0.1) link.parent_linked = true;
        dists.push_back(d);
    }

    // Recruit a relay for the first slot still tethered to the root (or not
    // seeded at all), once every live tether is taut.
    bool stretched = !dists.empty();
    for (double d : dists) stretched = stretched && d >= p.safe_distance - kRecruitSlack;
    bool any_seeking = false;
    for (const auto& link : self.links) any_seeking = any_seeking || link.seeking();

    // Unseeded slots are also acquired once the worker is parked on its
    // target; the stretch precondition can never fire there, but the target
    // still lacks links.
    if ((stretched || reached) && !any_seeking) {
        for (size_t k = 0; k < self.links.size(); ++k) {
            auto& link = self.links[k];
            bool prev_ok = k == 0 || self.links[k - 1].parent_linked;
            // A root tether is replaced by a relay only after the worker has
            // actually visited the root's safe-distance neighborhood: chains
            // grow outward from the root, not from wherever the worker spawned.
            bool needs_relay =
                (link.parent_id == -1 && (stretched || reached)) ||
                (link.parent_id == ctx.root_id && link.parent_linked && stretched && !reached);
            if (!needs_relay || !prev_ok || link.pending_id >= 0) continue;

            // An orphaned stub of this chain beats recruiting from scratch.
            int stub = nearest_in_view(self, in, [&](int id, const ViewEntry& e) {
                return e.status.current_role == Role::Networker &&
                       e.status.target_chain == link.chain_id && !recently_rejected(self, ctx, id);
            });
            int recruit = stub >= 0 ? stub
                                    : nearest_in_view(self, in, [&](int id, const ViewEntry& e) {
                                          return e.status.current_role == Role::Free &&
                                                 !recently_rejected(self, ctx, id);
                                      });
            if (recruit >= 0) send_join_request(self, ctx, link, recruit, Role::Networker);
            break;  // one acquisition in flight at a time
        }
    }

    // Movement: repair walk > emergency retraction > gated advance (Eq. 8).
    Vec2 u;
    ChainLink* seeker = nullptr;
    for (auto& link : self.links)
        if (link.seeking()) {
            seeker = &link;
            break;
        }

    if (seeker != nullptr) {
        u = drive_parent_seek(self, ctx, in, *seeker);
        for (const auto& link : self.links)
            if (link.parent_id >= 0 && !link.seeking()) u += spring_to(self, ctx, link.parent_id);
        u += obstacle_term(self, ctx);
    } else if (!dists.empty() &&
               *std::max_element(dists.begin(), dists.end()) >= p.critical_distance) {
        int farthest = -1;
        double worst = -1.0;
        for (const auto& link : self.links) {
            if (link.parent_id < 0) continue;
            double d = known_distance(self, ctx, link.parent_id);
            if (d >= p.critical_distance && d > worst) {
                worst = d;
                farthest = link.parent_id;
            }
        }
        u = spring_to(self, ctx, farthest);  // emergency maneuver toward that parent
    } else {
        for (const auto& link : self.links)
            if (link.parent_id >= 0) u += spring_to(self, ctx, link.parent_id);
        if (worker_gate_open(dists, p.safe_distance) && target != nullptr) {
            u += (target->position.position() - self.pose.position()) * p.target_gain;
            u += obstacle_term(self, ctx);
        }
    }
    self.commanded_velocity = u.clamped(p.max_speed);

    bool incomplete = false;
    for (const auto& link : self.links)
        incomplete = incomplete || link.parent_id == -1 || link.seeking();
    send_status(self, !reached || incomplete);
    broadcast_child_strand_seed(self);
    rebroadcast_strands(self);
}

// ------------------------------------------------------------- networker --

void maybe_accept_as_parent(RobotState& self, const ControlContext& ctx, Ingest& in) {
    if (in.requests_to_me.empty()) return;
    std::sort(in.requests_to_me.begin(), in.requests_to_me.end(),
              [](const auto& a, const auto& b) { return a.sender < b.sender; });

    bool child_unhealthy = self.child.child_id < 0 || self.child.seeking();
    if (!child_unhealthy && self.child.child_id >= 0) {
        auto heard = self.last_heard.find(self.child.child_id);
        child_unhealthy =
            heard == self.last_heard.end() ||
            ctx.now - heard->second > ctx.params->failure_timeout_steps;
    }

    bool accepted_one = false;
    for (const auto& req : in.requests_to_me) {
        RequestResponseMessage reply;
        reply.sender = self.id;
        reply.addressee = req.sender;
        reply.chain_id = req.chain_id;
        reply.target_id = req.target_id;
        bool chain_matches = !self.links.empty() && self.links.front().chain_id == req.chain_id;
        if (!accepted_one && chain_matches && child_unhealthy) {
            reply.kind = Kind::JoinAccept;
            self.child.child_id = req.sender;
            self.child.child_linked = true;  // bridge: the seeker comes to us
            self.child.failed_child_id = -1;
            self.child.seeking_since = -1;
            self.child.child_strand.clear();
            self.last_heard[req.sender] = ctx.now;
            accepted_one = true;
        } else {
            reply.kind = Kind::JoinReject;
        }
        self.outbox.emplace_back(reply);
    }
}

void control_networker(RobotState& self, const ControlContext& ctx, Ingest& in) {
    const auto& p = *ctx.params;
    if (in.dismantle_ordered) self.dismantling = true;
    if (self.links.empty()) {  // degenerate; nothing to relay for
        revert_to_free(self);
        send_status(self, false);
        return;
    }
    ChainLink& link = self.links.front();

    maybe_accept_as_parent(self, ctx, in);

    if (self.dismantling) {
        if (in.complete_heard &&
            known_distance(self, ctx, ctx.root_id) <= p.comm_range) {
            send_status(self, false);
            revert_to_free(self);
            return;
        }
        Vec2 goal = link.parent_id >= 0 ? known_position(self, ctx, link.parent_id) : ctx.root_home;
        self.commanded_velocity =
            ((goal - self.pose.position()).normalized() * (p.seek_speed_factor * p.max_speed) +
             obstacle_term(self, ctx))
                .clamped(p.max_speed);
        send_status(self, false);
        rebroadcast_strands(self);
        return;
    }

    process_pending_timeouts(self, ctx);

    // Failure watch over both chain neighbors. A parent that now reports the
    // free role has defected; recover the same way as from silence.
    std::set<int> watched;
    if (link.parent_id > 0) watched.insert(link.parent_id);
    if (self.child.child_id >= 0) watched.insert(self.child.child_id);
    auto failed = detect_failures(self.last_heard, watched, ctx.now, p.failure_timeout_steps);

    if (link.parent_id > 0 && failed.count(link.parent_id)) start_parent_seek(self, ctx, link);
    if (link.parent_id > 0 && !link.seeking()) {
        auto seen = in.view.find(link.parent_id);
        if (seen != in.view.end() && seen->second.status.current_role == Role::Free)
            start_parent_seek(self, ctx, link);
    }
    if (self.child.child_id >= 0 && failed.count(self.child.child_id)) {
        self.child.failed_child_id = self.child.child_id;
        self.child.failed_child_pos = known_position(self, ctx, self.child.child_id);
        self.child.seeking_since = ctx.now;
        self.child.child_id = -1;
        self.child.child_linked = false;
    }

    // Update relayed need from the child's status.
    if (self.child.child_id >= 0) {
        auto seen = in.view.find(self.child.child_id);
        if (seen != in.view.end()) self.child_need = seen->second.status.parent_need;
    }

    // A recruit that never linked and left no strand is a dead end.
    if (self.child.seeking() && self.child.child_strand.empty() && !self.child.child_linked) {
        send_status(self, false);
        revert_to_free(self);
        return;
    }

    // Dead child handling: descendants to re-bridge with, or a lost worker to
    // replace (only the target's first chain recruits the replacement).
    bool lost_worker = false;
    if (self.child.seeking()) {
        const auto& strand = self.child.child_strand;
        bool descendants =
            !strand.empty() &&
            std::find(strand.begin(), strand.end(), self.child.failed_child_id) != strand.begin();
        if (!descendants && !strand.empty() && strand.front() == self.child.failed_child_id) {
            auto chains = chains_of_target(ctx, self.assigned_target);
            lost_worker = !chains.empty() && chains.front() == link.chain_id;
        }
        if (ctx.now - self.child.seeking_since > kBridgePatience) {
            send_status(self, false);
            revert_to_free(self);
            return;
        }
    }
    if (lost_worker && self.child.pending_id < 0) {
        int recruit = nearest_in_view(self, in, [&](int id, const ViewEntry& e) {
            return e.status.current_role == Role::Free && !recently_rejected(self, ctx, id);
        });
        if (recruit >= 0) {
            RequestResponseMessage req;
            req.kind = Kind::JoinRequest;
            req.sender = self.id;
            req.addressee = recruit;
            req.chain_id = link.chain_id;
            req.target_id = static_cast<uint8_t>(std::max(self.assigned_target, 0));
            req.join_role = Role::Worker;
            self.outbox.emplace_back(req);
            self.child.pending_id = recruit;
            self.child.pending_since = ctx.now;
        }
    }

    // Chain extension from the root end: the robot holding the root tether
    // recruits a new parent once it is stretched and the chain still needs to
    // grow. The child strand gives the chain's current size; growing past the
    // geometric requirement (plus slack) would just burn robots.
    // A chain longer than its geometry requires ends up compressed, and the
    // compression shoves the worker past its target; stop inserting at the
    // requirement (one spare link of headroom for imperfect geometry).
    int needed_members = 0;
    for (const auto& t : *ctx.targets) {
        if (t.id != self.assigned_target) continue;
        needed_members = static_cast<int>(
            std::ceil(distance(ctx.root_home, t.position.position()) / p.safe_distance));
    }
    int strand_members = static_cast<int>(self.child.child_strand.size());
    bool room_to_grow = needed_members == 0 || strand_members == 0 ||
                        strand_members < needed_members + 1;

    // The converse: sustained compression of a full-length chain means a
    // robot too many. The root-side relay retires to the free pool and its
    // child re-tethers through the root. Genuine kink waste keeps links above
    // this threshold, and a freshly inserted relay is compressed by
    // construction, so only an old, settled surplus trims.
    if (link.parent_id == ctx.root_id && !self.dismantling && needed_members > 0 &&
        strand_members > needed_members && self.child.child_id >= 0 &&
        self.child.child_linked && ctx.now - self.joined_step > 100 &&
        known_distance(self, ctx, ctx.root_id) < p.safe_distance - 0.25 &&
        known_distance(self, ctx, self.child.child_id) < p.safe_distance - 0.1) {
        send_status(self, false);
        revert_to_free(self);
        return;
    }
    bool child_taut = self.child.child_id < 0 ||
                      known_distance(self, ctx, self.child.child_id) >=
                          p.safe_distance - kRecruitSlack;
    if (link.parent_id == ctx.root_id && self.child_need && link.pending_id < 0 &&
        !link.seeking() && room_to_grow && child_taut &&
        known_distance(self, ctx, ctx.root_id) >= p.safe_distance - kRecruitSlack) {
        int recruit = nearest_in_view(self, in, [&](int id, const ViewEntry& e) {
            return e.status.current_role == Role::Free && !recently_rejected(self, ctx, id);
        });
        if (recruit >= 0) send_join_request(self, ctx, link, recruit, Role::Networker);
    }

    // Movement.
    Vec2 u;
    double d_parent = link.parent_id >= 0 ? known_distance(self, ctx, link.parent_id) : -1.0;
    if (link.parent_id >= 0 && d_parent <= p.safe_distance + 0.1) link.parent_linked = true;

    if (link.seeking()) {
        u = drive_parent_seek(self, ctx, in, link);
        if (self.child.child_id >= 0) u += spring_to(self, ctx, self.child.child_id);
        u += obstacle_term(self, ctx);
    } else if (self.child.seeking()) {
        int tgt = target_of_chain(ctx, link.chain_id);
        Vec2 onward = ctx.root_home;
        if (tgt >= 0)
            for (const auto& t : *ctx.targets)
                if (t.id == tgt) onward = t.position.position();
        u = seek_velocity(self, ctx, self.child.failed_child_pos, onward);
        if (link.parent_id >= 0) u += spring_to(self, ctx, link.parent_id);
        u += obstacle_term(self, ctx);
    } else if (self.child.child_id >= 0 && !self.child.child_linked) {
        // Fresh recruit: take up the relay slot on the chain's growth ray so
        // the chain stays anchored toward its target, then hand over to the
        // spring law.
        Vec2 child_pos = known_position(self, ctx, self.child.child_id);
        Vec2 ray = chain_growth_dir(ctx, self.assigned_target, link.chain_id,
                                    child_pos - ctx.root_home);
        double child_radius = distance(child_pos, ctx.root_home);
        double slot_radius = std::clamp(0.5 * child_radius, 0.4, p.safe_distance);
        Vec2 slot = ctx.root_home + ray * slot_radius;
        if (distance(slot, self.pose.position()) <= 0.25) {
            self.child.child_linked = true;
            if (link.parent_id >= 0) u += spring_to(self, ctx, link.parent_id);
            u += spring_to(self, ctx, self.child.child_id);
        } else {
            u = (slot - self.pose.position()).normalized() * (p.seek_speed_factor * p.max_speed);
            u += obstacle_term(self, ctx);
        }
    } else if (link.parent_id >= 0 && d_parent >= p.critical_distance) {
        u = spring_to(self, ctx, link.parent_id);  // chain retracts
    } else {
        if (link.parent_id >= 0) {
            if (d_parent < p.safe_distance - 0.2) {
                // Deeply compressed parent link: slack from a fresh insertion
                // is passing through. Spend it along the chain's growth ray;
                // a raw radial push would amplify any lateral wobble at every
                // insertion and fold the chain.
                Vec2 ray = chain_growth_dir(ctx, self.assigned_target, link.chain_id,
                                            self.pose.position() -
                                                known_position(self, ctx, link.parent_id));
                u += ray * (p.spring_gain * (p.safe_distance - d_parent));
            } else {
                u += spring_to(self, ctx, link.parent_id);
            }
        }
        double d_child = -1.0;
        if (self.child.child_id >= 0) {
            d_child = known_distance(self, ctx, self.child.child_id);
            if (d_child < p.safe_distance - 0.2) {
                // Same treatment for a deeply compressed child link: back up
                // along the ray instead of buckling sideways.
                Vec2 ray = chain_growth_dir(ctx, self.assigned_target, link.chain_id,
                                            known_position(self, ctx, self.child.child_id) -
                                                self.pose.position());
                u += ray * (-p.spring_gain * (p.safe_distance - d_child));
            } else {
                u += spring_to(self, ctx, self.child.child_id);
            }
        }
        bool obstacle_gate = (link.parent_id >= 0 && d_parent < p.safe_distance) ||
                             (d_child >= 0.0 && d_child < p.safe_distance);
        if (obstacle_gate) u += obstacle_term(self, ctx);

        // Rule layer on top of the springs: while the chain still needs to
        // grow, a relay whose links are taut spends the stall straightening
        // its local bend. Distance springs alone are indifferent to kinks,
        // and a bent chain at rest length stalls the mission for good.
        if (self.child_need && link.parent_id >= 0 && self.child.child_id >= 0 &&
            d_parent >= p.safe_distance - 0.05 && d_child >= p.safe_distance - 0.05) {
            Vec2 chord_mid = (known_position(self, ctx, link.parent_id) +
                              known_position(self, ctx, self.child.child_id)) *
                             0.5;
            u += (chord_mid - self.pose.position()) * (0.5 * p.spring_gain);
        }
    }

    // Position integrity: the chain is ordered root -> worker, so a relay
    // never drifts farther from the root than its own child. Without this the
    // distance springs happily settle into folded chains.
    if (self.child.child_id >= 0 && !self.child.seeking() && !self.dismantling) {
        Vec2 radial = self.pose.position() - ctx.root_home;
        double my_radius = radial.norm();
        double child_radius =
            distance(known_position(self, ctx, self.child.child_id), ctx.root_home);
        if (my_radius > child_radius - 0.2 && my_radius > 1e-9) {
            Vec2 dir = radial.normalized();
            double outward = u.x * dir.x + u.y * dir.y;
            if (outward > 0.0) u += dir * (-outward);
        }
    }
    self.commanded_velocity = u.clamped(p.max_speed);

    bool need = self.child_need || self.child.seeking() || self.child.pending_id >= 0 ||
                link.seeking();
    send_status(self, need);
    rebroadcast_strands(self);
}

// ------------------------------------------------------------------ free --

void adopt_networker_role(RobotState& self, const ControlContext& ctx,
                          const RequestResponseMessage& req) {
    self.previous_role = self.role;
    self.role = Role::Networker;
    self.clear_chain_state();
    self.joined_step = ctx.now;
    ChainLink link;
    link.chain_id = req.chain_id;
    link.parent_id = ctx.root_id;  // recruits always splice in beside the root
    self.links.push_back(link);
    self.child.child_id = req.sender;
    self.child.child_linked = false;
    self.assigned_target = req.target_id == kNoChain ? target_of_chain(ctx, req.chain_id)
                                                     : req.target_id;
    self.last_heard[req.sender] = ctx.now;
}

void adopt_worker_role(RobotState& self, const ControlContext& ctx,
                       const RequestResponseMessage& req) {
    self.previous_role = self.role;
    self.role = Role::Worker;
    self.clear_chain_state();
    self.joined_step = ctx.now;
    self.assigned_target = req.target_id;
    for (uint8_t chain : chains_of_target(ctx, req.target_id)) {
        ChainLink link;
        link.chain_id = chain;
        link.parent_id = chain == req.chain_id ? req.sender : -1;
        self.links.push_back(link);
    }
    if (self.links.empty()) {  // unknown target table entry; tether to the requester
        ChainLink link;
        link.chain_id = req.chain_id;
        link.parent_id = req.sender;
        self.links.push_back(link);
    }
    self.last_heard[req.sender] = ctx.now;
}

void control_free(RobotState& self, const ControlContext& ctx, Ingest& in) {
    const auto& p = *ctx.params;

    if (!in.requests_to_me.empty()) {
        std::sort(in.requests_to_me.begin(), in.requests_to_me.end(),
                  [](const auto& a, const auto& b) { return a.sender < b.sender; });
        const auto& chosen = in.requests_to_me.front();
        for (size_t i = 1; i < in.requests_to_me.size(); ++i) {
            RequestResponseMessage reject;
            reject.kind = Kind::JoinReject;
            reject.sender = self.id;
            reject.addressee = in.requests_to_me[i].sender;
            reject.chain_id = in.requests_to_me[i].chain_id;
            self.outbox.emplace_back(reject);
        }
        RequestResponseMessage accept;
        accept.kind = Kind::JoinAccept;
        accept.sender = self.id;
        accept.addressee = chosen.sender;
        accept.chain_id = chosen.chain_id;
        accept.target_id = chosen.target_id;
        self.outbox.emplace_back(accept);

        if (chosen.join_role == Role::Worker)
            adopt_worker_role(self, ctx, chosen);
        else
            adopt_networker_role(self, ctx, chosen);

        send_status(self, false);
        // Start moving toward the new child right away.
        Vec2 child_pos = known_position(self, ctx, chosen.sender);
        self.commanded_velocity = ((child_pos - self.pose.position()).normalized() *
                                   (p.seek_speed_factor * p.max_speed))
                                      .clamped(p.max_speed);
        return;
    }

    Vec2 u;
    bool any_peer = false;
    for (const auto& [id, entry] : in.view) {
        Role role = entry.status.current_role;
        if (role != Role::Root && role != Role::Free) continue;
        any_peer = true;
        u += lj_velocity(self.pose.position(), entry.position, p.lj_epsilon, p.lj_delta);
    }
    if (!any_peer) {
        // Nobody to flock with: drift back toward the deployment point.
        u = (ctx.root_home - self.pose.position()).normalized() *
            (p.seek_speed_factor * p.max_speed);
        if (distance(ctx.root_home, self.pose.position()) < p.safe_distance) u = {};
    }
    u += obstacle_term(self, ctx);
    self.commanded_velocity = u.clamped(p.max_speed);
    send_status(self, false);
}

// ------------------------------------------------------------------ root --

void control_root(RobotState& self, const ControlContext& ctx, Ingest& in) {
    const auto& p = *ctx.params;
    self.commanded_velocity = {};  // static reference point

    // Bridge requests from orphaned chain members are always taken in.
    std::sort(in.requests_to_me.begin(), in.requests_to_me.end(),
              [](const auto& a, const auto& b) { return a.sender < b.sender; });
    for (const auto& req : in.requests_to_me) {
        RequestResponseMessage accept;
        accept.kind = Kind::JoinAccept;
        accept.sender = self.id;
        accept.addressee = req.sender;
        accept.chain_id = req.chain_id;
        accept.target_id = req.target_id;
        self.outbox.emplace_back(accept);
        self.root.child_ids.insert(req.sender);
        self.last_heard[req.sender] = ctx.now;
    }

    // Census from fresh statuses.
    int free_in_view = 0;
    for (const auto& [id, entry] : in.view) {
        if (entry.status.current_role == Role::Free) ++free_in_view;
        if (entry.status.target_chain != kNoChain && entry.status.parent_need) {
            auto& cv = self.root.chains[entry.status.target_chain];
            cv.last_need_step = ctx.now;
            cv.ever_seen = true;
        }
    }

    if (self.root.dismantling_chain >= 0) {
        if (in.complete_heard && in.complete_chain == self.root.dismantling_chain) {
            for (const auto& [chain, cv] : self.root.chains) {
                if (chain == self.root.dismantling_chain) continue;
                if (cv.last_need_step >= 0 && ctx.now - cv.last_need_step <= kNeedWindow) {
                    RequestResponseMessage expand;
                    expand.kind = Kind::Expand;
                    expand.sender = self.id;
                    expand.chain_id = chain;
                    self.outbox.emplace_back(expand);
                }
            }
            self.root.chains.erase(static_cast<uint8_t>(self.root.dismantling_chain));
            self.root.dismantling_chain = -1;
            self.root.starvation_run = -10 * p.failure_timeout_steps;  // cooldown
        } else if (ctx.now - self.root.last_dismantle_broadcast >= 20) {
            RequestResponseMessage order;
            order.kind = Kind::Dismantle;
            order.sender = self.id;
            order.chain_id = static_cast<uint8_t>(self.root.dismantling_chain);
            self.outbox.emplace_back(order);
            self.root.last_dismantle_broadcast = ctx.now;
        }
    } else {
        bool any_need = false;
        for (const auto& [chain, cv] : self.root.chains)
            any_need = any_need ||
                       (cv.last_need_step >= 0 && ctx.now - cv.last_need_step <= kNeedWindow);
        self.root.starvation_run =
            (any_need && free_in_view == 0) ? self.root.starvation_run + 1 : 0;

        if (self.root.starvation_run > 5 * p.failure_timeout_steps) {
            int chain = choose_dismantle_chain(self.root.chains, ctx.now, kNeedWindow);
            if (chain >= 0) {
                RequestResponseMessage order;
                order.kind = Kind::Dismantle;
                order.sender = self.id;
                order.chain_id = static_cast<uint8_t>(chain);
                self.outbox.emplace_back(order);
                self.root.dismantling_chain = chain;
                self.root.last_dismantle_broadcast = ctx.now;
            } else {
                // A lone starving chain: nothing to cannibalize.
                ++self.root.resource_exhausted_events;
                self.root.starvation_run = 0;
            }
        }
    }

    send_status(self, false);
    for (const auto& chain : *ctx.chains) {
        StrandInfoMessage seed;
        seed.direction = Topic::ParentStrand;
        seed.chain_id = chain.chain_id;
        seed.ids = {self.id};
        self.outbox.emplace_back(seed);
    }
}

}  // namespace

// ------------------------------------------------------------ pure laws --

Vec2 spring_velocity(double dist, const Vec2& dir_to_neighbor, double gain, double rest_length) {
    return dir_to_neighbor * (gain * (dist - rest_length));
}

Vec2 collision_direction(int self_id) {
    double angle = 2.39996322972865332 * (self_id + 1);  // golden-angle spread
    return {std::cos(angle), std::sin(angle)};
}

Vec2 lj_velocity(const Vec2& self_pos, const Vec2& neighbor_pos, double epsilon, double delta) {
    Vec2 axis = self_pos - neighbor_pos;
    double d = axis.norm();
    if (d < 1e-9) return {};
    double ratio2 = (delta / d) * (delta / d);
    double magnitude = (epsilon / d) * (ratio2 * ratio2 - ratio2);
    // Positive magnitude pushes away from the neighbor, negative pulls in.
    return axis.normalized() * magnitude;
}

Vec2 obstacle_avoidance(const Pose2D& pose, const std::vector<Obstacle>& obstacles, double gain,
                        double comm_range, double max_speed) {
    Vec2 u;
    for (const auto& ob : obstacles) {
        Vec2 away = pose.position() - ob.position;
        double center_dist = away.norm();
        if (center_dist > 2.0 * comm_range) continue;
        double d = center_dist - ob.radius;
        if (d <= 0.0) {
            Vec2 dir = center_dist < 1e-9 ? Vec2{1.0, 0.0} : away.normalized();
            u += dir * max_speed;
            continue;
        }
        if (d >= kObstacleInfluence) continue;
        double magnitude = gain * (1.0 / d - 1.0 / kObstacleInfluence) / (d * d);
        u += away.normalized() * magnitude;
    }
    return u.clamped(max_speed);
}

bool worker_gate_open(const std::vector<double>& parent_distances, double safe_distance) {
    if (parent_distances.empty()) return false;
    for (double d : parent_distances)
        if (d >= safe_distance) return false;
    return true;
}

int choose_dismantle_chain(const std::map<uint8_t, RootChainView>& chains, int now,
                           int need_window) {
    int best = -1;
    int best_count = 0;
    int candidates = 0;
    for (const auto& [chain, cv] : chains) {
        if (!cv.ever_seen || cv.member_count < 1) continue;
        if (cv.last_need_step < 0 || now - cv.last_need_step > need_window) continue;
        ++candidates;
        if (best < 0 || cv.member_count < best_count) {
            best = chain;
            best_count = cv.member_count;
        }
    }
    return candidates >= 2 ? best : -1;
}

void run_controller(RobotState& self, const ControlContext& ctx) {
    self.outbox.clear();
    self.commanded_velocity = {};
    if (!self.alive) return;

    Ingest in = ingest_inbox(self, ctx);
    switch (self.role) {
        case Role::Worker:
            control_worker(self, ctx, in);
            break;
        case Role::Networker:
            control_networker(self, ctx, in);
            break;
        case Role::Free:
            control_free(self, ctx, in);
            break;
        case Role::Root:
            control_root(self, ctx, in);
            break;
    }
}

}  // namespace swarmlink
