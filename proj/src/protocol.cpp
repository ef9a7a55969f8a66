#include "wsnfm/protocol.hpp"

#include <algorithm>
#include <cassert>

namespace wsnfm {

namespace {

bool viable(const Engine& eng, NodeId id, const EnergyThresholds& t) {
    if (id == kNoNode) return false;
    const NodeState& n = eng.node(id);
    return n.active() && classify_rank(n.battery, t) != EnergyRank::Low;
}

// (energy desc, id asc) argmax over a share map.
NodeId share_argmax(const std::map<NodeId, double>& shares) {
    NodeId best = kNoNode;
    double best_e = -1;
    for (const auto& [id, e] : shares) { // id-ascending, so ties keep the lowest id
        if (best == kNoNode || e > best_e) {
            best = id;
            best_e = e;
        }
    }
    return best;
}

std::vector<int> adjacent_groups(const CellGrid& grid, const std::vector<GroupRecord>& groups, int g) {
    std::set<int> out;
    std::vector<int> cell_group(grid.cells.size(), -1);
    for (const auto& gr : groups)
        for (int c : gr.cell_ids) cell_group[static_cast<size_t>(c)] = gr.group_id;
    for (int c : groups[static_cast<size_t>(g)].cell_ids)
        for (int nb : cell_neighbors4(grid, c))
            if (cell_group[static_cast<size_t>(nb)] != g) out.insert(cell_group[static_cast<size_t>(nb)]);
    return {out.begin(), out.end()};
}

} // namespace

std::optional<NodeId> election_winner(const std::map<NodeId, double>& shares_mj,
                                      const std::map<NodeId, double>& initial_mj,
                                      double high_fraction) {
    NodeId best = kNoNode;
    double best_e = -1;
    for (const auto& [id, e] : shares_mj) {
        auto it = initial_mj.find(id);
        if (it == initial_mj.end() || it->second <= 0) continue;
        if (e / it->second < high_fraction) continue;
        if (best == kNoNode || e > best_e || (e == best_e && id < best)) {
            best = id;
            best_e = e;
        }
    }
    if (best == kNoNode) return std::nullopt;
    return best;
}

int choose_merge_target(const CellGrid& grid, const GroupRecord& group, int source_cell,
                        const std::map<int, HealthStatus>& healths) {
    auto usable = [&](int c) {
        if (c == source_cell || !group.cell_ids.count(c)) return false;
        const CellRecord& cr = grid.cells[static_cast<size_t>(c)];
        if (cr.retired || cr.members.empty()) return false;
        auto it = healths.find(c);
        return it == healths.end() || it->second != HealthStatus::Low;
    };
    auto rank_of = [&](int c) {
        auto it = healths.find(c);
        HealthStatus h = it == healths.end() ? HealthStatus::Medium : it->second;
        return h == HealthStatus::High ? 0 : 1;
    };
    int best = -1;
    auto consider = [&](int c) {
        if (!usable(c)) return;
        if (best < 0 || rank_of(c) < rank_of(best) || (rank_of(c) == rank_of(best) && c < best))
            best = c;
    };
    for (int nb : cell_neighbors4(grid, source_cell)) consider(nb);
    if (best >= 0) return best;
    for (int c : group.cell_ids) consider(c);
    return best;
}

std::vector<NodeId> wake_sleeping(Engine& eng, int cell, int needed) {
    std::vector<NodeId> sleepers;
    for (NodeId m : eng.grid.cells[static_cast<size_t>(cell)].members)
        if (eng.node(m).status == NodeStatus::Sleeping && eng.node(m).battery.residual_mj > 0)
            sleepers.push_back(m);
    std::sort(sleepers.begin(), sleepers.end(), [&](NodeId a, NodeId b) {
        double ea = eng.node(a).battery.residual_mj, eb = eng.node(b).battery.residual_mj;
        if (ea != eb) return ea > eb;
        return a < b;
    });
    if (static_cast<int>(sleepers.size()) > needed) sleepers.resize(static_cast<size_t>(needed));
    for (NodeId m : sleepers) eng.set_status(m, NodeStatus::Active, "wake");
    if (sleepers.empty()) eng.note("wake," + std::to_string(cell) + ",no-sleepers");
    return sleepers;
}

int CellularDriver::preference(int group, int cell) const {
    auto git = groups_.find(group);
    if (git == groups_.end()) return 0;
    auto it = git->second.preference.find(cell);
    return it == git->second.preference.end() ? 0 : it->second;
}

HealthStatus CellularDriver::compute_cell_health(const Engine& eng, int cell) const {
    std::vector<Battery> bats;
    for (NodeId m : eng.grid.cells[static_cast<size_t>(cell)].members)
        if (eng.node(m).status != NodeStatus::Dead) bats.push_back(eng.node(m).battery);
    if (bats.empty()) return HealthStatus::Low;
    return cell_health(bats, eng.cfg.thresholds);
}

void CellularDriver::maybe_detect(Engine& eng, NodeId subject) {
    if (subject != kNoNode && subject == eng.metrics().fault_target) eng.mark_detected();
}

void CellularDriver::init(Engine& eng) {
    const Timers& t = cfg_.timers;
    for (const auto& cell : eng.grid.cells) {
        if (cell.members.empty()) continue;
        CellRt& rt = cells_[cell.cell_id];
        rt.period = t.in_cell_period;
        for (NodeId m : cell.members) {
            rt.member_energy[m] = eng.node(m).battery.residual_mj;
            if (m != cell.manager) rt.ledger.expected.insert(m);
        }
        eng.set_timer(t.in_cell_period, InCellRound, cell.cell_id);
        eng.set_timer(t.out_cell_period, OutReport, cell.cell_id);
    }
    for (const auto& g : eng.groups) {
        GroupRt& rt = groups_[g.group_id];
        for (int c : g.cell_ids) {
            const auto& cr = eng.grid.cells[static_cast<size_t>(c)];
            if (cr.members.empty()) continue;
            rt.believed_cm[c] = cr.manager;
            rt.believed_secondary[c] = cr.secondary;
            rt.health[c] = HealthStatus::High;
        }
        eng.set_timer(t.out_cell_period + 2 * eng.cfg.delivery.latency + 1, GroupCheck, g.group_id);
        bs_.last_heard[g.group_id] = 0;
        bs_.believed_gm[g.group_id] = g.group_manager;
        bs_.known_backup[g.group_id] = g.backup;
    }
    eng.set_timer(t.out_cell_period + 2 * eng.cfg.delivery.latency + 3, BsWatch);
}

// ---------------------------------------------------------------------------
// self-detection

void CellularDriver::on_rank_low(Engine& eng, NodeId id) {
    NodeState& n = eng.node(id);
    switch (n.role) {
        case Role::BaseStation:
            return;
        case Role::GroupManager: {
            int g = n.group_id;
            NodeId backup = eng.groups[static_cast<size_t>(g)].backup;
            Payload p;
            p.kind = MsgKind::LowEnergyNotice;
            p.subject = id;
            p.successor = backup;
            eng.send(id, Dest::group_cast(g), p, {.recovery = true, .group_scope = true});
            for (int g2 : adjacent_groups(eng.grid, eng.groups, g)) {
                NodeId gm2 = eng.groups[static_cast<size_t>(g2)].group_manager;
                if (gm2 != kNoNode && eng.node(gm2).active())
                    eng.send(id, Dest::unicast(gm2), p, {.group_scope = true, .group_override = g2});
            }
            eng.change_role(id, Role::CommonNode, "demote-low-energy");
            eng.groups[static_cast<size_t>(g)].group_manager = kNoNode;
            if (eng.grid.cells[static_cast<size_t>(n.cell_id)].manager == id)
                eng.grid.cells[static_cast<size_t>(n.cell_id)].manager = kNoNode;
            n.mgr = eng.grid.cells[static_cast<size_t>(n.cell_id)].secondary;
            maybe_detect(eng, id);
            break;
        }
        case Role::CellManager: {
            int c = n.cell_id;
            Payload p;
            p.kind = MsgKind::LowEnergyNotice;
            p.subject = id;
            p.successor = eng.grid.cells[static_cast<size_t>(c)].secondary;
            eng.send(id, Dest::cell_cast(c, n.gm), p, {.recovery = true, .group_scope = true});
            eng.change_role(id, Role::CommonNode, "demote-low-energy");
            eng.grid.cells[static_cast<size_t>(c)].manager = kNoNode;
            n.mgr = p.successor;
            maybe_detect(eng, id);
            break;
        }
        default: {
            // common node: one failure report, then sleep
            if (n.mgr != kNoNode && n.mgr != id) {
                Payload p;
                p.kind = MsgKind::SleepNotice;
                p.energy_mj = n.battery.residual_mj;
                eng.send(id, Dest::unicast(n.mgr), p);
            } else {
                maybe_detect(eng, id);
            }
            if (n.role == Role::SecondaryCellManager) {
                eng.change_role(id, Role::CommonNode, "secondary-sleep");
                if (eng.grid.cells[static_cast<size_t>(n.cell_id)].secondary == id)
                    eng.grid.cells[static_cast<size_t>(n.cell_id)].secondary = kNoNode;
            }
            eng.set_status(id, NodeStatus::Sleeping, "low-energy");
            break;
        }
    }
}

// ---------------------------------------------------------------------------
// elections and promotion

void CellularDriver::share_energy_cell(Engine& eng, NodeId who, int cell) {
    CellRt& rt = cells_[cell];
    if (!rt.election_open) {
        rt.election_open = true;
        rt.shares.clear();
        eng.set_timer(eng.now() + election_window(eng), CellElectionClose, cell);
    }
    if (rt.shares.count(who)) return;
    rt.shares[who] = eng.node(who).battery.residual_mj;
    Payload p;
    p.kind = MsgKind::EnergyShare;
    p.energy_mj = eng.node(who).battery.residual_mj;
    p.rank = classify_rank(eng.node(who).battery, eng.cfg.thresholds);
    eng.send(who, Dest::cell_cast(cell), p, {.recovery = true});
}

void CellularDriver::share_energy_group(Engine& eng, NodeId who, int group) {
    GroupRt& rt = groups_[group];
    if (!rt.election_open) {
        rt.election_open = true;
        rt.shares.clear();
        eng.set_timer(eng.now() + election_window(eng), GroupElectionClose, group);
    }
    if (rt.shares.count(who)) return;
    rt.shares[who] = eng.node(who).battery.residual_mj;
    Payload p;
    p.kind = MsgKind::EnergyShare;
    p.energy_mj = eng.node(who).battery.residual_mj;
    p.rank = classify_rank(eng.node(who).battery, eng.cfg.thresholds);
    eng.send(who, Dest::group_cast(group), p, {.recovery = true, .group_scope = true});
}

void CellularDriver::promote_secondary(Engine& eng, NodeId who, int cell, const char* cause) {
    auto& cr = eng.grid.cells[static_cast<size_t>(cell)];
    eng.change_role(who, Role::CellManager, cause);
    cr.manager = who;
    if (cr.secondary == who) cr.secondary = kNoNode;
    eng.node(who).mgr = who;
    CellRt& rt = cells_[cell];
    rt.ledger.expected.clear();
    for (NodeId m : cr.members)
        if (m != who && eng.node(m).active()) rt.ledger.expected.insert(m);
    rt.ledger.pending_query.clear();
    eng.mark_recovered();
}

void CellularDriver::handle_cm_gone(Engine& eng, NodeId receiver, NodeId old_mgr, NodeId successor) {
    NodeState& n = eng.node(receiver);
    int c = n.cell_id;
    n.mgr = successor;
    if (receiver == successor) {
        if (viable(eng, receiver, eng.cfg.thresholds)) {
            promote_secondary(eng, receiver, c, "secondary-standup");
        } else if (n.active()) {
            // not enough energy to stand up: fall through to an in-cell election
            share_energy_cell(eng, receiver, c);
        }
        return;
    }
    // safety net if the successor never stands up
    eng.set_timer(eng.now() + election_window(eng) + 1, PromotionFallback, c);
    (void)old_mgr;
}

void CellularDriver::close_cell_election(Engine& eng, int cell) {
    CellRt& rt = cells_[cell];
    if (!rt.election_open) return;
    auto& cr = eng.grid.cells[static_cast<size_t>(cell)];
    std::map<NodeId, double> initials;
    for (const auto& [id, e] : rt.shares) initials[id] = eng.node(id).battery.initial_mj;
    auto winner = election_winner(rt.shares, initials, eng.cfg.thresholds.high);
    if (winner) {
        NodeId w = *winner;
        // runner-up becomes the new secondary
        auto rest = rt.shares;
        rest.erase(w);
        NodeId second = share_argmax(rest);
        eng.change_role(w, Role::CellManager, "elected");
        cr.manager = w;
        cr.secondary = second;
        if (second != kNoNode && eng.node(second).role == Role::CommonNode)
            eng.change_role(second, Role::SecondaryCellManager, "elected-secondary");
        eng.node(w).mgr = w;
        rt.ledger.expected.clear();
        for (NodeId m : cr.members)
            if (m != w && eng.node(m).active()) rt.ledger.expected.insert(m);
        rt.ledger.pending_query.clear();
        Payload p;
        p.kind = MsgKind::NewManagerAnnounce;
        p.subject = second;
        eng.send(w, Dest::cell_cast(cell), p, {.recovery = true});
        eng.mark_recovered();
    } else if (!rt.shares.empty() && !rt.merge_requested) {
        // nobody at high energy: ask the group manager to merge the cell away
        rt.merge_requested = true;
        NodeId acting = share_argmax(rt.shares);
        NodeId gm = eng.node(acting).gm;
        if (gm != kNoNode && eng.node(gm).active() && eng.node(acting).active()) {
            Payload p;
            p.kind = MsgKind::MergeRequest;
            eng.send(acting, Dest::unicast(gm), p, {.recovery = true, .group_scope = true});
        } else {
            eng.note("cell," + std::to_string(cell) + ",merge-escalation-no-gm");
        }
    } else {
        eng.note("cell," + std::to_string(cell) + ",retired-no-candidates");
        cr.retired = true;
    }
    rt.election_open = false;
    rt.shares.clear();
}

void CellularDriver::close_group_election(Engine& eng, int group) {
    GroupRt& rt = groups_[group];
    if (!rt.election_open) return;
    NodeId winner = kNoNode;
    double best_e = -1;
    for (const auto& [id, e] : rt.shares) {
        if (!viable(eng, id, eng.cfg.thresholds)) continue;
        if (winner == kNoNode || e > best_e || (e == best_e && id < winner)) {
            winner = id;
            best_e = e;
        }
    }
    if (winner == kNoNode) {
        eng.note("group," + std::to_string(group) + ",retired-no-candidates");
    } else {
        auto rest = rt.shares;
        rest.erase(winner);
        NodeId backup = share_argmax(rest);
        eng.change_role(winner, Role::GroupManager, "elected-gm");
        eng.groups[static_cast<size_t>(group)].group_manager = winner;
        eng.groups[static_cast<size_t>(group)].backup = backup;
        eng.node(winner).gm = winner;
        Payload p;
        p.kind = MsgKind::NewManagerAnnounce;
        p.subject = backup;
        eng.send(winner, Dest::group_cast(group), p, {.recovery = true, .group_scope = true});
        for (int g2 : adjacent_groups(eng.grid, eng.groups, group)) {
            NodeId gm2 = eng.groups[static_cast<size_t>(g2)].group_manager;
            if (gm2 != kNoNode && eng.node(gm2).active())
                eng.send(winner, Dest::unicast(gm2), p, {.group_scope = true, .group_override = g2});
        }
        Payload rep;
        rep.kind = MsgKind::HealthReport;
        rep.status = compute_cell_health(eng, eng.node(winner).cell_id);
        rep.subject = backup;
        eng.send(winner, Dest::to_base(), rep, {.bs_link = true});
        eng.mark_recovered();
    }
    rt.election_open = false;
    rt.shares.clear();
}

void CellularDriver::run_promotion_fallback(Engine& eng, int cell) {
    auto& cr = eng.grid.cells[static_cast<size_t>(cell)];
    if (cr.retired || cr.members.empty()) return;
    if (cr.manager != kNoNode && eng.node(cr.manager).active()) return;
    CellRt& rt = cells_[cell];
    if (rt.election_open || rt.merge_requested) return;
    NodeId starter = kNoNode;
    for (NodeId m : cr.members)
        if (eng.node(m).active() && (starter == kNoNode || m < starter)) starter = m;
    if (starter == kNoNode) {
        eng.note("cell," + std::to_string(cell) + ",retired-no-active-members");
        cr.retired = true;
        return;
    }
    share_energy_cell(eng, starter, cell);
}

// ---------------------------------------------------------------------------
// merging

void CellularDriver::handle_merge_request(Engine& eng, int group, int source_cell) {
    NodeId gm = eng.groups[static_cast<size_t>(group)].group_manager;
    if (gm == kNoNode || !eng.node(gm).active()) return;
    GroupRt& grt = groups_[group];
    auto& src = eng.grid.cells[static_cast<size_t>(source_cell)];
    bool any = false;
    for (NodeId m : std::vector<NodeId>(src.members.begin(), src.members.end())) {
        if (!eng.node(m).active()) continue;
        int target = choose_merge_target(eng.grid, eng.groups[static_cast<size_t>(group)], source_cell,
                                         grt.health);
        if (target < 0) {
            eng.note("merge," + std::to_string(source_cell) + ",orphan," + std::to_string(m));
            continue;
        }
        Payload p;
        p.kind = MsgKind::MergeDirective;
        p.target_cell = target;
        eng.send(gm, Dest::unicast(m), p, {.recovery = true, .group_scope = true});
        any = true;
    }
    if (any) {
        src.manager = kNoNode;
        grt.believed_cm[source_cell] = kNoNode;
    }
}

// ---------------------------------------------------------------------------
// timers

void CellularDriver::run_in_cell_round(Engine& eng, int cell) {
    auto& cr = eng.grid.cells[static_cast<size_t>(cell)];
    if (cr.retired || cr.members.empty()) return;
    CellRt& rt = cells_[cell];
    eng.set_timer(eng.now() + rt.period, InCellRound, cell);
    NodeId cm = cr.manager;
    if (cm == kNoNode || !eng.node(cm).active()) return;
    rt.ledger.responded.clear();
    Payload p;
    p.kind = MsgKind::Get;
    p.subject = cr.secondary; // members keep the standby identity fresh
    if (cfg_.broadcast_get) {
        eng.send(cm, Dest::cell_cast(cell), p);
    } else {
        for (NodeId m : rt.ledger.expected) eng.send(cm, Dest::unicast(m), p);
    }
    eng.set_timer(eng.now() + 2 * eng.cfg.delivery.latency + 1, CollectCheck, cell);
}

void CellularDriver::refresh_secondary(Engine& eng, int cell) {
    auto& cr = eng.grid.cells[static_cast<size_t>(cell)];
    if (viable(eng, cr.secondary, eng.cfg.thresholds)) return;
    CellRt& rt = cells_[cell];
    NodeId old = cr.secondary;
    NodeId cand = kNoNode;
    double best = -1;
    for (NodeId m : rt.ledger.responded) {
        if (m == cr.manager || !viable(eng, m, eng.cfg.thresholds)) continue;
        double e = rt.member_energy.count(m) ? rt.member_energy[m] : 0;
        if (cand == kNoNode || e > best || (e == best && m < cand)) {
            cand = m;
            best = e;
        }
    }
    if (cand == kNoNode) return;
    cr.secondary = cand;
    if (old != kNoNode && eng.node(old).role == Role::SecondaryCellManager)
        eng.change_role(old, Role::CommonNode, "secondary-replaced");
    if (eng.node(cand).role == Role::CommonNode)
        eng.change_role(cand, Role::SecondaryCellManager, "appointed-secondary");
}

void CellularDriver::run_collect_check(Engine& eng, int cell) {
    auto& cr = eng.grid.cells[static_cast<size_t>(cell)];
    NodeId cm = cr.manager;
    if (cm == kNoNode || !eng.node(cm).active()) return;
    CellRt& rt = cells_[cell];
    const Timers& t = cfg_.timers;
    for (NodeId n : std::vector<NodeId>(rt.ledger.expected.begin(), rt.ledger.expected.end())) {
        if (rt.ledger.responded.count(n)) {
            rt.ledger.missed[n] = 0;
            continue;
        }
        if (rt.ledger.pending_query.count(n)) continue;
        rt.ledger.missed[n]++;
        Payload p;
        p.kind = MsgKind::StatusQuery;
        p.subject = n;
        eng.send(cm, Dest::unicast(n), p);
        rt.ledger.pending_query[n] = eng.now() + t.query_timeout;
        eng.set_timer(eng.now() + t.query_timeout + 1, QueryDeadline, cell, n);
    }
    refresh_secondary(eng, cell);
    wake_if_sparse(eng, cell);
}

void CellularDriver::run_query_deadline(Engine& eng, int cell, NodeId member) {
    CellRt& rt = cells_[cell];
    auto it = rt.ledger.pending_query.find(member);
    if (it == rt.ledger.pending_query.end()) return;
    if (rt.ledger.responded.count(member)) {
        rt.ledger.pending_query.erase(it);
        return;
    }
    rt.ledger.pending_query.erase(it);
    auto& cr = eng.grid.cells[static_cast<size_t>(cell)];
    NodeId cm = cr.manager;
    if (cm == kNoNode || !eng.node(cm).active()) return;
    // no acknowledgement in time: declared faulty to the rest of the cell
    rt.ledger.expected.erase(member);
    rt.member_energy.erase(member);
    cr.members.erase(member);
    maybe_detect(eng, member);
    Payload p;
    p.kind = MsgKind::DeclareFaulty;
    p.subject = member;
    eng.send(cm, Dest::cell_cast(cell), p);
    wake_if_sparse(eng, cell);
}

void CellularDriver::run_out_report(Engine& eng, int cell) {
    auto& cr = eng.grid.cells[static_cast<size_t>(cell)];
    if (cr.retired || cr.members.empty()) return;
    eng.set_timer(eng.now() + cfg_.timers.out_cell_period, OutReport, cell);
    NodeId cm = cr.manager;
    if (cm == kNoNode || !eng.node(cm).active()) return;
    NodeState& n = eng.node(cm);
    HealthStatus h = compute_cell_health(eng, cell);
    if (n.group_id >= 0 && eng.groups[static_cast<size_t>(n.group_id)].group_manager == cm) {
        // group-manager duty: record own cell, report the group to the base station
        GroupRt& grt = groups_[n.group_id];
        grt.report_seen[cell] = true;
        grt.miss[cell] = 0;
        grt.health[cell] = h;
        grt.believed_cm[cell] = cm;
        Payload rep;
        rep.kind = MsgKind::HealthReport;
        rep.status = h;
        rep.subject = eng.groups[static_cast<size_t>(n.group_id)].backup;
        eng.send(cm, Dest::to_base(), rep, {.bs_link = true});
    } else if (n.gm != kNoNode && eng.node(n.gm).active()) {
        Payload rep;
        rep.kind = MsgKind::HealthReport;
        rep.status = h;
        rep.subject = cr.secondary;
        eng.send(cm, Dest::unicast(n.gm), rep, {.group_scope = true});
    }
}

void CellularDriver::run_group_check(Engine& eng, int group) {
    eng.set_timer(eng.now() + cfg_.timers.out_cell_period, GroupCheck, group);
    NodeId gm = eng.groups[static_cast<size_t>(group)].group_manager;
    if (gm == kNoNode || !eng.node(gm).active()) return;
    GroupRt& grt = groups_[group];
    int gm_cell = eng.node(gm).cell_id;
    for (int c : eng.groups[static_cast<size_t>(group)].cell_ids) {
        auto& cr = eng.grid.cells[static_cast<size_t>(c)];
        if (c == gm_cell || cr.retired || cr.members.empty()) continue;
        if (grt.report_seen[c]) {
            grt.miss[c] = 0;
        } else {
            grt.miss[c]++;
            NodeId bc = grt.believed_cm[c];
            if (grt.miss[c] == 1) {
                if (bc != kNoNode) {
                    Payload p;
                    p.kind = MsgKind::Reminder;
                    eng.send(gm, Dest::unicast(bc), p, {.group_scope = true});
                }
            } else {
                // silent for a second cycle: the cell manager is declared faulty
                grt.miss[c] = 0;
                maybe_detect(eng, bc);
                if (bc != kNoNode) {
                    cr.members.erase(bc);
                    if (cr.manager == bc) cr.manager = kNoNode;
                    cells_[c].ledger.expected.erase(bc);
                }
                Payload p;
                p.kind = MsgKind::DeclareFaulty;
                p.subject = bc;
                eng.send(gm, Dest::cell_cast(c), p, {.recovery = true, .cell_override = c});
                grt.believed_cm[c] = grt.believed_secondary[c];
                grt.believed_secondary[c] = kNoNode;
            }
        }
        grt.report_seen[c] = false;
    }
    // proactive handling from the freshest health picture
    for (auto& [c, h] : grt.health) {
        grt.preference[c] = h == HealthStatus::High ? 0 : (h == HealthStatus::Medium ? 1 : 2);
        if (h == HealthStatus::Low) {
            if (!grt.low_action_taken[c]) {
                grt.low_action_taken[c] = true;
                if (cfg_.low_cell_policy == LowCellPolicy::Rate) {
                    Payload p;
                    p.kind = MsgKind::RateDirective;
                    p.period_multiplier = cfg_.rate_multiplier;
                    eng.send(gm, Dest::cell_cast(c), p, {.cell_override = c});
                } else {
                    handle_merge_request(eng, group, c);
                }
            }
        } else {
            grt.low_action_taken[c] = false;
        }
    }
}

void CellularDriver::run_bs_watch(Engine& eng) {
    eng.set_timer(eng.now() + cfg_.timers.out_cell_period, BsWatch);
    for (auto& [g, believed] : bs_.believed_gm) {
        if (believed == kNoNode || bs_.pending[g]) continue;
        if (eng.now() - bs_.last_heard[g] <= cfg_.timers.out_cell_period) continue;
        Payload p;
        p.kind = MsgKind::StatusQuery;
        p.subject = believed;
        eng.send(eng.bs_id, Dest::unicast(believed), p, {.bs_link = true});
        bs_.pending[g] = true;
        eng.set_timer(eng.now() + cfg_.timers.query_timeout + 1, BsQueryDeadline, g);
    }
}

void CellularDriver::run_bs_query_deadline(Engine& eng, int group) {
    if (!bs_.pending[group]) return;
    bs_.pending[group] = false;
    if (eng.now() - bs_.last_heard[group] <= cfg_.timers.query_timeout + 1) return; // acked
    NodeId subject = bs_.believed_gm[group];
    maybe_detect(eng, subject);
    if (subject != kNoNode) {
        if (eng.groups[static_cast<size_t>(group)].group_manager == subject)
            eng.groups[static_cast<size_t>(group)].group_manager = kNoNode;
        int c0 = eng.node(subject).cell_id;
        if (c0 >= 0) {
            auto& cr = eng.grid.cells[static_cast<size_t>(c0)];
            if (cr.manager == subject) cr.manager = kNoNode;
            cr.members.erase(subject);
            cells_[c0].ledger.expected.erase(subject);
        }
    }
    Payload p;
    p.kind = MsgKind::DeclareFaulty;
    p.subject = subject;
    eng.send(eng.bs_id, Dest::bs_group_cast(group), p, {.bs_link = true});
    NodeId backup = bs_.known_backup[group];
    if (backup != kNoNode && eng.node(backup).status != NodeStatus::Dead) {
        Payload act;
        act.kind = MsgKind::BackupActivate;
        eng.send(eng.bs_id, Dest::unicast(backup), act, {.recovery = true, .bs_link = true});
        bs_.believed_gm[group] = backup;
    } else {
        // no usable backup on record: the surviving cell managers coordinate
        Payload trig;
        trig.kind = MsgKind::LowEnergyNotice;
        trig.subject = subject;
        trig.successor = kNoNode;
        eng.send(eng.bs_id, Dest::bs_group_cast(group), trig, {.bs_link = true});
        bs_.believed_gm[group] = kNoNode;
    }
    bs_.last_heard[group] = eng.now();
}

void CellularDriver::wake_if_sparse(Engine& eng, int cell) {
    if (cfg_.min_cell_density <= 0) return;
    auto& cr = eng.grid.cells[static_cast<size_t>(cell)];
    int active = 0;
    for (NodeId m : cr.members)
        if (eng.node(m).active()) active++;
    if (active < cfg_.min_cell_density) {
        auto woken = wake_sleeping(eng, cell, cfg_.min_cell_density - active);
        for (NodeId w : woken)
            if (w != cr.manager) cells_[cell].ledger.expected.insert(w);
    }
}

void CellularDriver::on_timer(Engine& eng, const TimerFire& t) {
    switch (t.kind) {
        case InCellRound: run_in_cell_round(eng, t.a); break;
        case CollectCheck: run_collect_check(eng, t.a); break;
        case QueryDeadline: run_query_deadline(eng, t.a, t.b); break;
        case OutReport: run_out_report(eng, t.a); break;
        case GroupCheck: run_group_check(eng, t.a); break;
        case BsWatch: run_bs_watch(eng); break;
        case BsQueryDeadline: run_bs_query_deadline(eng, t.a); break;
        case CellElectionClose: close_cell_election(eng, t.a); break;
        case GroupElectionClose: close_group_election(eng, t.a); break;
        case PromotionFallback: run_promotion_fallback(eng, t.a); break;
        default: break;
    }
}

// ---------------------------------------------------------------------------
// message handling

void CellularDriver::on_deliver(Engine& eng, NodeId receiver, const Envelope& env) {
    NodeState& n = eng.node(receiver);
    if (!eng.is_bs(receiver)) {
        FilterDecision d = filter_message(n.group_id, n.cell_id, seen_[receiver], env);
        if (d != FilterDecision::Process) {
            eng.log_filter_drop(receiver, env, d);
            return;
        }
    }
    switch (env.payload.kind) {
        case MsgKind::Get: {
            n.mgr = env.sender;
            if (env.payload.subject != kNoNode) n.secondary = env.payload.subject;
            Payload p;
            p.kind = MsgKind::Update;
            p.energy_mj = n.battery.residual_mj;
            p.location = n.pos;
            eng.send(receiver, Dest::unicast(env.sender), p);
            break;
        }
        case MsgKind::Update: {
            CellRt& rt = cells_[env.cell_id];
            rt.ledger.responded.insert(env.sender);
            rt.ledger.missed[env.sender] = 0;
            rt.ledger.pending_query.erase(env.sender);
            rt.member_energy[env.sender] = env.payload.energy_mj;
            break;
        }
        case MsgKind::StatusQuery: {
            Payload p;
            p.kind = MsgKind::Ack;
            p.energy_mj = n.battery.residual_mj;
            if (env.bs_link && eng.is_bs(env.sender))
                eng.send(receiver, Dest::to_base(), p, {.bs_link = true});
            else
                eng.send(receiver, Dest::unicast(env.sender), p);
            break;
        }
        case MsgKind::Ack: {
            if (eng.is_bs(receiver)) {
                int g = eng.node(env.sender).group_id;
                bs_.last_heard[g] = eng.now();
                bs_.pending[g] = false;
            } else {
                CellRt& rt = cells_[eng.node(env.sender).cell_id];
                rt.ledger.responded.insert(env.sender);
                rt.ledger.pending_query.erase(env.sender);
            }
            break;
        }
        case MsgKind::SleepNotice: {
            int c = eng.node(env.sender).cell_id;
            CellRt& rt = cells_[c];
            rt.ledger.expected.erase(env.sender);
            rt.ledger.responded.erase(env.sender);
            rt.ledger.pending_query.erase(env.sender);
            rt.member_energy[env.sender] = env.curr_energy;
            if (eng.grid.cells[static_cast<size_t>(c)].secondary == env.sender)
                eng.grid.cells[static_cast<size_t>(c)].secondary = kNoNode;
            maybe_detect(eng, env.sender);
            wake_if_sparse(eng, c);
            break;
        }
        case MsgKind::LowEnergyNotice: {
            NodeId succ = env.payload.successor;
            if (env.bs_link || (succ == kNoNode && env.sender != n.mgr)) {
                // coordination trigger: surviving cell managers elect a group manager
                if (n.cell_id >= 0 &&
                    eng.grid.cells[static_cast<size_t>(n.cell_id)].manager == receiver && n.active())
                    share_energy_group(eng, receiver, n.group_id);
                break;
            }
            bool from_my_gm = env.sender == n.gm;
            bool from_my_cm = env.sender == n.mgr;
            if (from_my_gm) {
                n.gm = succ;
                if (receiver == succ) {
                    if (viable(eng, receiver, eng.cfg.thresholds)) {
                        eng.change_role(receiver, Role::GroupManager, "backup-standup");
                        eng.groups[static_cast<size_t>(n.group_id)].group_manager = receiver;
                        eng.mark_recovered();
                        Payload rep;
                        rep.kind = MsgKind::HealthReport;
                        rep.status = compute_cell_health(eng, n.cell_id);
                        eng.send(receiver, Dest::to_base(), rep, {.bs_link = true});
                    } else if (n.active()) {
                        Payload trig;
                        trig.kind = MsgKind::LowEnergyNotice;
                        trig.subject = receiver;
                        trig.successor = kNoNode;
                        eng.send(receiver, Dest::group_cast(n.group_id), trig,
                                 {.recovery = true, .group_scope = true});
                    }
                }
            }
            if (from_my_cm) {
                // the sender was also this cell's manager; the stand-in is the
                // cell secondary when the notice carried a group-level successor
                handle_cm_gone(eng, receiver, env.sender, from_my_gm ? n.secondary : succ);
            }
            // a group manager hearing a cell manager step down updates its view
            if (n.group_id >= 0 &&
                eng.groups[static_cast<size_t>(n.group_id)].group_manager == receiver) {
                int c = eng.node(env.sender).cell_id;
                if (c >= 0 && c != n.cell_id) {
                    groups_[n.group_id].believed_cm[c] = succ;
                    groups_[n.group_id].believed_secondary[c] = kNoNode;
                }
            }
            break;
        }
        case MsgKind::DeclareFaulty:
        case MsgKind::PromoteSecondary: {
            NodeId subject = env.payload.subject;
            if (subject != kNoNode && subject == n.gm) n.gm = kNoNode;
            if (subject != kNoNode && subject == n.mgr) {
                handle_cm_gone(eng, receiver, subject, n.secondary);
            } else if (n.cell_id >= 0 &&
                       eng.grid.cells[static_cast<size_t>(n.cell_id)].manager == receiver) {
                CellRt& rt = cells_[n.cell_id];
                rt.ledger.expected.erase(subject);
                rt.ledger.responded.erase(subject);
                rt.ledger.pending_query.erase(subject);
            }
            break;
        }
        case MsgKind::HealthReport: {
            if (eng.is_bs(receiver)) {
                int g = eng.node(env.sender).group_id;
                bs_.last_heard[g] = eng.now();
                bs_.believed_gm[g] = env.sender;
                if (env.payload.subject != kNoNode) bs_.known_backup[g] = env.payload.subject;
                bs_.pending[g] = false;
                break;
            }
            GroupRt& grt = groups_[n.group_id];
            int c = env.cell_id;
            grt.report_seen[c] = true;
            grt.miss[c] = 0;
            grt.health[c] = env.payload.status;
            grt.believed_cm[c] = env.sender;
            grt.believed_secondary[c] = env.payload.subject;
            break;
        }
        case MsgKind::Reminder: {
            if (n.cell_id >= 0 && eng.grid.cells[static_cast<size_t>(n.cell_id)].manager == receiver) {
                Payload rep;
                rep.kind = MsgKind::HealthReport;
                rep.status = compute_cell_health(eng, n.cell_id);
                rep.subject = eng.grid.cells[static_cast<size_t>(n.cell_id)].secondary;
                eng.send(receiver, Dest::unicast(env.sender), rep, {.group_scope = true});
            }
            break;
        }
        case MsgKind::EnergyShare: {
            if (env.group_scope) {
                GroupRt& grt = groups_[n.group_id];
                if (grt.election_open) grt.shares[env.sender] = env.payload.energy_mj;
                if (n.active() && n.cell_id >= 0 &&
                    eng.grid.cells[static_cast<size_t>(n.cell_id)].manager == receiver)
                    share_energy_group(eng, receiver, n.group_id);
            } else {
                CellRt& rt = cells_[env.cell_id];
                if (!rt.election_open) {
                    rt.election_open = true;
                    eng.set_timer(eng.now() + election_window(eng), CellElectionClose, env.cell_id);
                }
                rt.shares[env.sender] = env.payload.energy_mj;
                if (n.active()) share_energy_cell(eng, receiver, n.cell_id);
            }
            break;
        }
        case MsgKind::NewManagerAnnounce: {
            if (env.group_scope) {
                n.gm = env.sender;
            } else {
                n.mgr = env.sender;
                n.secondary = env.payload.subject;
            }
            break;
        }
        case MsgKind::MergeRequest: {
            if (n.group_id >= 0 && eng.groups[static_cast<size_t>(n.group_id)].group_manager == receiver)
                handle_merge_request(eng, n.group_id, eng.node(env.sender).cell_id);
            break;
        }
        case MsgKind::MergeDirective: {
            int target = env.payload.target_cell;
            if (target < 0 || target == n.cell_id) break;
            auto& src = eng.grid.cells[static_cast<size_t>(n.cell_id)];
            auto& dst = eng.grid.cells[static_cast<size_t>(target)];
            src.members.erase(receiver);
            cells_[n.cell_id].ledger.expected.erase(receiver);
            if (src.secondary == receiver) src.secondary = kNoNode;
            if (src.members.empty()) {
                src.retired = true;
                src.manager = kNoNode;
            }
            dst.members.insert(receiver);
            n.cell_id = target;
            n.mgr = dst.manager;
            n.secondary = dst.secondary;
            cells_[target].ledger.expected.insert(receiver);
            cells_[target].member_energy[receiver] = n.battery.residual_mj;
            break;
        }
        case MsgKind::RateDirective: {
            CellRt& rt = cells_[env.cell_id];
            rt.period = static_cast<Tick>(cfg_.timers.in_cell_period * env.payload.period_multiplier);
            rt.rate_applied = true;
            break;
        }
        case MsgKind::BackupActivate: {
            if (viable(eng, receiver, eng.cfg.thresholds)) {
                eng.change_role(receiver, Role::GroupManager, "backup-activated");
                eng.groups[static_cast<size_t>(n.group_id)].group_manager = receiver;
                eng.node(receiver).gm = receiver;
                eng.mark_recovered();
                Payload ann;
                ann.kind = MsgKind::NewManagerAnnounce;
                eng.send(receiver, Dest::group_cast(n.group_id), ann,
                         {.recovery = true, .group_scope = true});
                Payload rep;
                rep.kind = MsgKind::HealthReport;
                rep.status = compute_cell_health(eng, n.cell_id);
                eng.send(receiver, Dest::to_base(), rep, {.bs_link = true});
            } else if (n.active()) {
                Payload trig;
                trig.kind = MsgKind::LowEnergyNotice;
                trig.subject = receiver;
                trig.successor = kNoNode;
                eng.send(receiver, Dest::group_cast(n.group_id), trig,
                         {.recovery = true, .group_scope = true});
            }
            break;
        }
        default:
            break;
    }
}

std::vector<NodeId> CellularDriver::eligible_targets(const Engine& eng, FaultSpec::Selector sel,
                                                     int min_cell_members) const {
    std::vector<NodeId> out;
    for (const auto& n : eng.nodes) {
        if (eng.is_bs(n.id) || !n.active()) continue;
        switch (sel) {
            case FaultSpec::Selector::ACommonNode:
                if (n.role == Role::CommonNode && n.mgr != kNoNode && n.mgr != n.id) out.push_back(n.id);
                break;
            case FaultSpec::Selector::ACellManager: {
                if (n.role != Role::CellManager) break;
                int active = 0;
                for (NodeId m : eng.grid.cells[static_cast<size_t>(n.cell_id)].members)
                    if (eng.node(m).active()) active++;
                if (active >= min_cell_members) out.push_back(n.id);
                break;
            }
            case FaultSpec::Selector::TheGroupManager:
                if (n.role == Role::GroupManager) out.push_back(n.id);
                break;
            default:
                break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// deployment

namespace {

Deployment finish_deployment(CellGrid grid, int group_dim, double area_w, double area_h,
                             std::vector<NodeState> nodes) {
    std::map<NodeId, double> energies;
    for (const auto& n : nodes) energies[n.id] = n.battery.residual_mj;

    for (auto& cell : grid.cells) {
        if (cell.members.empty()) continue;
        Election e = elect_cell_manager(cell, energies);
        cell.manager = e.winner;
        cell.secondary = e.runner_up;
    }
    auto groups = form_groups(grid, group_dim);
    for (auto& g : groups) {
        bool any = false;
        for (int c : g.cell_ids)
            if (grid.cells[static_cast<size_t>(c)].manager != kNoNode) any = true;
        if (!any) continue;
        Election e = elect_group_manager(g, grid, energies);
        g.group_manager = e.winner;
        g.backup = e.runner_up;
    }

    std::vector<int> cell_group(grid.cells.size(), -1);
    for (const auto& g : groups)
        for (int c : g.cell_ids) cell_group[static_cast<size_t>(c)] = g.group_id;

    for (auto& n : nodes) {
        n.cell_id = grid.cell_index_of(n.pos);
        n.group_id = cell_group[static_cast<size_t>(n.cell_id)];
        const auto& cell = grid.cells[static_cast<size_t>(n.cell_id)];
        const auto& g = groups[static_cast<size_t>(n.group_id)];
        n.mgr = cell.manager;
        n.secondary = cell.secondary;
        n.gm = g.group_manager;
        if (n.id == g.group_manager)
            n.role = Role::GroupManager;
        else if (n.id == cell.manager)
            n.role = Role::CellManager;
        else if (n.id == cell.secondary)
            n.role = Role::SecondaryCellManager;
        else
            n.role = Role::CommonNode;
    }

    // base station outside the grid, watching the group managers
    NodeState bs;
    bs.id = static_cast<NodeId>(nodes.size());
    bs.pos = {area_w / 2, area_h / 2};
    bs.role = Role::BaseStation;
    bs.battery = {1.0, 1.0};
    nodes.push_back(bs);

    return {std::move(grid), std::move(groups), std::move(nodes)};
}

} // namespace

Deployment make_deployment(int node_count, double area_w, double area_h, double cell_side,
                           int group_dim, double initial_mj, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0, area_w), uy(0, area_h);
    CellGrid grid = build_grid(area_w, area_h, cell_side);
    std::vector<NodeState> nodes;
    std::vector<std::pair<NodeId, Position>> placed;
    for (int i = 0; i < node_count; i++) {
        NodeState n;
        n.id = i;
        n.pos = {ux(rng), uy(rng)};
        n.battery = {initial_mj, initial_mj};
        placed.emplace_back(i, n.pos);
        nodes.push_back(n);
    }
    assign_nodes(grid, placed);
    return finish_deployment(std::move(grid), group_dim, area_w, area_h, std::move(nodes));
}

Deployment make_deployment_explicit(std::vector<std::pair<Position, double>> spec_nodes,
                                    double area_w, double area_h, double cell_side, int group_dim,
                                    double initial_mj) {
    CellGrid grid = build_grid(area_w, area_h, cell_side);
    std::vector<NodeState> nodes;
    std::vector<std::pair<NodeId, Position>> placed;
    for (size_t i = 0; i < spec_nodes.size(); i++) {
        NodeState n;
        n.id = static_cast<NodeId>(i);
        n.pos = spec_nodes[i].first;
        n.battery = {std::max(initial_mj, spec_nodes[i].second), spec_nodes[i].second};
        placed.emplace_back(n.id, n.pos);
        nodes.push_back(n);
    }
    assign_nodes(grid, placed);
    return finish_deployment(std::move(grid), group_dim, area_w, area_h, std::move(nodes));
}

} // namespace wsnfm
