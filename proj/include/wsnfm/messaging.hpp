#pragma once

#include <cstdint>
#include <set>
#include <tuple>

#include "wsnfm/topology.hpp"

namespace wsnfm {

using Tick = std::int64_t;

enum class MsgKind {
    // cellular protocol
    Get,
    Update,
    StatusQuery,
    Ack,
    SleepNotice,
    LowEnergyNotice,
    PromoteSecondary,
    DeclareFaulty,
    HealthReport,
    Reminder,
    EnergyShare,
    NewManagerAnnounce,
    MergeRequest,
    MergeDirective,
    RateDirective,
    BackupActivate,
    // baseline algorithms
    FailReport,
    JoinRequest,
    JoinReply,
    JoinReject,
    EnergyMsg,
    FinalHead,
    Attach,
    ReassignRequest,
    ReassignAccept,
};

const char* to_string(MsgKind k);

struct Payload {
    MsgKind kind = MsgKind::Get;
    NodeId subject = kNoNode;     // who the message is about (faulty node, piggybacked secondary, ...)
    NodeId successor = kNoNode;   // LowEnergyNotice: who takes over
    int target_cell = -1;         // MergeDirective
    HealthStatus status = HealthStatus::High;
    EnergyRank rank = EnergyRank::High;
    double period_multiplier = 1; // RateDirective
    Position location;            // Update
    double energy_mj = 0;         // Update / EnergyShare
};

struct MsgId {
    NodeId sender = kNoNode;
    Tick timestamp = 0;
    MsgKind kind = MsgKind::Get;
    auto operator<=>(const MsgId&) const = default;
};

struct Envelope {
    int group_id = -1;
    int cell_id = -1;
    Tick timestamp = 0;
    double curr_energy = 0; // sender residual at send time
    NodeId sender = kNoNode;
    Payload payload;
    bool group_scope = false; // skip the cell check (group-level messages)
    bool bs_link = false;     // base-station traffic bypasses filtering

    MsgId msg_id() const { return {sender, timestamp, payload.kind}; }
};

class SeenSet {
public:
    bool contains(const MsgId& id) const { return seen_.count(id) > 0; }
    // Returns true when the id was new (and records it).
    bool insert(const MsgId& id) { return seen_.insert(id).second; }

private:
    std::set<MsgId> seen_;
};

enum class FilterDecision { Process, DropForeignGroup, DropForeignCell, DropDuplicate };

const char* to_string(FilterDecision d);

// Two-stage filter: scope (group, then cell for cell-scoped messages), then
// duplicate suppression. Process records the msg id in the seen set.
FilterDecision filter_message(int node_group, int node_cell, SeenSet& seen, const Envelope& msg);

// cell_id_override lets a manager address a directive into another cell.
Envelope make_envelope(NodeId sender, int group_id, int cell_id, double residual_mj,
                       const Payload& payload, Tick now, int cell_id_override = -1);

} // namespace wsnfm
