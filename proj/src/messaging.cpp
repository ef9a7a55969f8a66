#include "wsnfm/messaging.hpp"

namespace wsnfm {

const char* to_string(MsgKind k) {
    switch (k) {
        case MsgKind::Get: return "get";
        case MsgKind::Update: return "update";
        case MsgKind::StatusQuery: return "status_query";
        case MsgKind::Ack: return "ack";
        case MsgKind::SleepNotice: return "sleep_notice";
        case MsgKind::LowEnergyNotice: return "low_energy_notice";
        case MsgKind::PromoteSecondary: return "promote_secondary";
        case MsgKind::DeclareFaulty: return "declare_faulty";
        case MsgKind::HealthReport: return "health_report";
        case MsgKind::Reminder: return "reminder";
        case MsgKind::EnergyShare: return "energy_share";
        case MsgKind::NewManagerAnnounce: return "new_manager_announce";
        case MsgKind::MergeRequest: return "merge_request";
        case MsgKind::MergeDirective: return "merge_directive";
        case MsgKind::RateDirective: return "rate_directive";
        case MsgKind::BackupActivate: return "backup_activate";
        case MsgKind::FailReport: return "fail_report";
        case MsgKind::JoinRequest: return "join_request";
        case MsgKind::JoinReply: return "join_reply";
        case MsgKind::JoinReject: return "join_reject";
        case MsgKind::EnergyMsg: return "energy_msg";
        case MsgKind::FinalHead: return "final_ch";
        case MsgKind::Attach: return "attach";
        case MsgKind::ReassignRequest: return "reassign_request";
        case MsgKind::ReassignAccept: return "reassign_accept";
    }
    return "?";
}

const char* to_string(FilterDecision d) {
    switch (d) {
        case FilterDecision::Process: return "process";
        case FilterDecision::DropForeignGroup: return "drop-foreign-group";
        case FilterDecision::DropForeignCell: return "drop-foreign-cell";
        case FilterDecision::DropDuplicate: return "drop-duplicate";
    }
    return "?";
}

FilterDecision filter_message(int node_group, int node_cell, SeenSet& seen, const Envelope& msg) {
    if (!msg.bs_link) {
        if (msg.group_id != node_group) return FilterDecision::DropForeignGroup;
        if (!msg.group_scope && msg.cell_id != node_cell) return FilterDecision::DropForeignCell;
    }
    if (!seen.insert(msg.msg_id())) return FilterDecision::DropDuplicate;
    return FilterDecision::Process;
}

Envelope make_envelope(NodeId sender, int group_id, int cell_id, double residual_mj,
                       const Payload& payload, Tick now, int cell_id_override) {
    Envelope e;
    e.sender = sender;
    e.group_id = group_id;
    e.cell_id = cell_id_override >= 0 ? cell_id_override : cell_id;
    e.timestamp = now;
    e.curr_energy = residual_mj;
    e.payload = payload;
    return e;
}

} // namespace wsnfm
