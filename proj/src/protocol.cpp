#include "protocol.hpp"

#include <algorithm>
#include <stdexcept>

namespace swarmlink {

namespace {

uint8_t checked_byte(int v, const char* what) {
    if (v < 0 || v > 255) throw std::invalid_argument(std::string(what) + " does not fit in one byte");
    return static_cast<uint8_t>(v);
}

Role role_from_byte(uint8_t b) {
    if (b > 3) throw std::invalid_argument("invalid role byte");
    return static_cast<Role>(b);
}

}  // namespace

Topic topic_of(const Message& msg) {
    if (std::holds_alternative<StatusMessage>(msg)) return Topic::Status;
    if (std::holds_alternative<RequestResponseMessage>(msg)) return Topic::RequestResponse;
    return std::get<StrandInfoMessage>(msg).direction;
}

std::vector<uint8_t> serialize(const Message& msg) {
    std::vector<uint8_t> out;
    if (const auto* s = std::get_if<StatusMessage>(&msg)) {
        out = {static_cast<uint8_t>(s->current_role), static_cast<uint8_t>(s->previous_role),
               static_cast<uint8_t>(s->parent_need ? 1 : 0), s->target_chain};
    } else if (const auto* r = std::get_if<RequestResponseMessage>(&msg)) {
        out = {static_cast<uint8_t>(Topic::RequestResponse), r->chain_id,
               static_cast<uint8_t>(r->kind), checked_byte(r->addressee, "addressee"),
               checked_byte(r->sender, "sender"), r->target_id,
               static_cast<uint8_t>(r->join_role)};
    } else {
        const auto& st = std::get<StrandInfoMessage>(msg);
        out.reserve(2 + st.ids.size());
        out.push_back(static_cast<uint8_t>(st.direction));
        out.push_back(st.chain_id);
        for (int id : st.ids) out.push_back(checked_byte(id, "strand id"));
    }
    return out;
}

size_t wire_size(const Message& msg) {
    if (std::holds_alternative<StatusMessage>(msg)) return 4;
    if (std::holds_alternative<RequestResponseMessage>(msg)) return 7;
    return 2 + std::get<StrandInfoMessage>(msg).ids.size();
}

Message deserialize(Topic topic, const std::vector<uint8_t>& bytes) {
    if (topic == Topic::Status) {
        if (bytes.size() != 4) throw std::invalid_argument("status message must be exactly 4 bytes");
        StatusMessage s;
        s.current_role = role_from_byte(bytes[0]);
        s.previous_role = role_from_byte(bytes[1]);
        if (bytes[2] > 1) throw std::invalid_argument("parent_need byte must be 0 or 1");
        s.parent_need = bytes[2] == 1;
        s.target_chain = bytes[3];
        return s;
    }
    if (bytes.size() < 2 || bytes[0] != static_cast<uint8_t>(topic))
        throw std::invalid_argument("topic tag mismatch");
    if (topic == Topic::RequestResponse) {
        if (bytes.size() != 7) throw std::invalid_argument("request/response message must be 7 bytes");
        RequestResponseMessage r;
        r.chain_id = bytes[1];
        if (bytes[2] > 5) throw std::invalid_argument("invalid request kind");
        r.kind = static_cast<RequestResponseMessage::Kind>(bytes[2]);
        r.addressee = bytes[3];
        r.sender = bytes[4];
        r.target_id = bytes[5];
        r.join_role = role_from_byte(bytes[6]);
        return r;
    }
    StrandInfoMessage st;
    st.direction = topic;
    st.chain_id = bytes[1];
    st.ids.assign(bytes.begin() + 2, bytes.end());
    if (st.ids.empty()) throw std::invalid_argument("strand message must carry at least one id");
    return st;
}

std::set<int> detect_failures(const std::map<int, int>& last_heard, const std::set<int>& watched,
                              int now, int timeout) {
    std::set<int> failed;
    for (int id : watched) {
        auto it = last_heard.find(id);
        if (it == last_heard.end()) continue;
        if (now - it->second > timeout) failed.insert(id);
    }
    return failed;
}

std::optional<StrandInfoMessage> relay_strand(const StrandInfoMessage& incoming, int self_id) {
    if (std::find(incoming.ids.begin(), incoming.ids.end(), self_id) != incoming.ids.end())
        return std::nullopt;
    StrandInfoMessage out = incoming;
    out.ids.push_back(self_id);
    return out;
}

}  // namespace swarmlink
