#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "geometry.hpp"

namespace swarmlink {

enum class Role : uint8_t { Root = 0, Free = 1, Networker = 2, Worker = 3 };

constexpr uint8_t kNoChain = 255;
constexpr int kBroadcastId = 255;

// The four gossip topics. Status rides untagged (its wire form is exactly the
// 4 status bytes); the other topics carry their tag as the first byte.
enum class Topic : uint8_t {
    Status = 0,
    RequestResponse = 1,
    ParentStrand = 2,
    ChildStrand = 3,
};

struct StatusMessage {
    Role current_role = Role::Free;
    Role previous_role = Role::Free;
    bool parent_need = false;
    uint8_t target_chain = kNoChain;

    bool operator==(const StatusMessage&) const = default;
};

struct StrandInfoMessage {
    Topic direction = Topic::ParentStrand;  // ParentStrand: ids root-first; ChildStrand: worker-first
    uint8_t chain_id = kNoChain;
    std::vector<int> ids;

    bool operator==(const StrandInfoMessage&) const = default;
};

struct RequestResponseMessage {
    enum class Kind : uint8_t {
        JoinRequest = 0,
        JoinAccept = 1,
        JoinReject = 2,
        Dismantle = 3,
        DismantleComplete = 4,
        Expand = 5,
    };

    Kind kind = Kind::JoinRequest;
    int sender = 0;
    int addressee = kBroadcastId;  // kBroadcastId means everyone in range
    uint8_t chain_id = kNoChain;
    uint8_t target_id = kNoChain;
    Role join_role = Role::Networker;  // JoinRequest only: role the addressee is asked to adopt

    bool operator==(const RequestResponseMessage&) const = default;
};

using Message = std::variant<StatusMessage, RequestResponseMessage, StrandInfoMessage>;

Topic topic_of(const Message& msg);

// Range-limited broadcast carrier. Receivers see the sender's position
// (situated communication); it is medium metadata, not wire bytes.
struct Envelope {
    int sender_id = 0;
    Pose2D sender_position;
    Message payload;
    int sent_step = 0;
};

// Wire formats, bit-exact:
//   status          [role][prev_role][parent_need][target_chain]            4 bytes
//   request_response [1][chain][kind][addressee][sender][target][join_role] 7 bytes
//   parent strand   [2][chain][id...]
//   child strand    [3][chain][id...]
// Throws std::invalid_argument if any id exceeds one byte.
std::vector<uint8_t> serialize(const Message& msg);
size_t wire_size(const Message& msg);

// Status is untagged, so the caller states the topic; tagged topics are
// recovered from their first byte. Throws on malformed input.
Message deserialize(Topic topic, const std::vector<uint8_t>& bytes);

// Ids in `watched` whose last status is older than `timeout` steps. Callers
// seed last_heard[id] with the step watching began, so a neighbor that never
// speaks is declared failed timeout steps after the watch started. Ids absent
// from last_heard are treated as just-started watches and are not reported.
std::set<int> detect_failures(const std::map<int, int>& last_heard, const std::set<int>& watched,
                              int now, int timeout);

// Append self to a strand in flight. Returns nothing if self is already in
// the strand (routing loop: drop instead of rebroadcast).
std::optional<StrandInfoMessage> relay_strand(const StrandInfoMessage& incoming, int self_id);

}  // namespace swarmlink
