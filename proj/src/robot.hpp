#pragma once

#include <map>
#include <set>
#include <vector>

#include "geometry.hpp"
#include "protocol.hpp"

namespace swarmlink {

// One parent relationship: the tether anchoring this robot to the root along
// one chain. Workers hold one per required link; networkers hold exactly one.
struct ChainLink {
    uint8_t chain_id = kNoChain;
    int parent_id = -1;          // -1: slot not yet seeded
    bool parent_linked = false;  // latched once the parent was observed inside safe distance

    // Outstanding JoinRequest for this slot (recruit or bridge).
    int pending_id = -1;
    int pending_since = -1;

    // Repair: set while hunting for a survivor of this chain after the parent
    // went silent.
    int failed_parent_id = -1;
    Vec2 failed_parent_pos;
    int seeking_since = -1;

    std::vector<int> parent_strand;  // ids root -> ... -> self

    bool seeking() const { return failed_parent_id >= 0; }
};

// A networker's downstream side.
struct ChildLink {
    int child_id = -1;
    bool child_linked = false;

    int failed_child_id = -1;
    Vec2 failed_child_pos;
    int seeking_since = -1;

    // Outstanding replacement-worker recruitment.
    int pending_id = -1;
    int pending_since = -1;

    std::vector<int> child_strand;  // ids worker -> ... -> self

    bool seeking() const { return failed_child_id >= 0; }
};

// What the root passively learns about one chain from status broadcasts and
// relayed child strands.
struct RootChainView {
    int member_count = 0;
    int last_strand_step = -1;
    int last_need_step = -1;
    bool ever_seen = false;
};

struct RootState {
    std::set<int> child_ids;
    std::map<uint8_t, RootChainView> chains;
    int starvation_run = 0;          // consecutive steps of (need && no free robots)
    int dismantling_chain = -1;      // chain id currently being torn down, -1 none
    int last_dismantle_broadcast = -1;
    int resource_exhausted_events = 0;  // logged when one lone chain starves
};

struct RobotState {
    int id = 0;
    Pose2D pose;
    Role role = Role::Free;
    Role previous_role = Role::Free;
    bool alive = true;

    int assigned_target = -1;  // worker: target id; networker: target its chain serves

    std::vector<ChainLink> links;  // ordered by chain acquisition (worker slots / networker tether)
    ChildLink child;               // meaningful for networkers
    RootState root;                // meaningful for the root

    bool dismantling = false;
    int seek_gave_up_step = -1;
    int joined_step = -1;  // when this robot last took on a chain role

    // Gossip bookkeeping.
    std::map<int, int> last_heard;           // id -> step of last status received
    std::map<int, Vec2> last_pos;            // id -> last sensed position
    std::map<int, StatusMessage> last_status;
    std::map<int, int> relay_dedupe;         // (kind<<8|chain) -> last relay step
    bool child_need = false;                 // relayed parent-need from downstream

    // Step outputs filled by the controller, consumed by the engine.
    Vec2 commanded_velocity;
    std::vector<Message> outbox;

    std::set<int> parent_ids() const {
        std::set<int> out;
        for (const auto& l : links)
            if (l.parent_id >= 0) out.insert(l.parent_id);
        return out;
    }

    std::set<int> child_ids() const {
        std::set<int> out;
        if (role == Role::Root) return root.child_ids;
        if (child.child_id >= 0) out.insert(child.child_id);
        return out;
    }

    const ChainLink* link_for_chain(uint8_t chain) const {
        for (const auto& l : links)
            if (l.chain_id == chain) return &l;
        return nullptr;
    }
    ChainLink* link_for_chain(uint8_t chain) {
        for (auto& l : links)
            if (l.chain_id == chain) return &l;
        return nullptr;
    }

    // Chain reported in the status broadcast: the slot currently being grown
    // if any, else the first chain this robot belongs to.
    uint8_t status_chain() const {
        for (const auto& l : links)
            if (l.parent_id < 0 || l.seeking() || l.pending_id >= 0) return l.chain_id;
        if (!links.empty()) return links.front().chain_id;
        return kNoChain;
    }

    void clear_chain_state() {
        links.clear();
        child = ChildLink{};
        dismantling = false;
        child_need = false;
        assigned_target = -1;
        seek_gave_up_step = -1;
    }
};

}  // namespace swarmlink
