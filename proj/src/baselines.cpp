#include "wsnfm/baselines.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace wsnfm {

// ---------------------------------------------------------------------------
// cluster tree

int ClusterTree::degree(NodeId n) const {
    int d = 0;
    auto pit = parent.find(n);
    if (pit != parent.end() && pit->second != kNoNode) d++;
    auto cit = children.find(n);
    if (cit != children.end()) d += static_cast<int>(cit->second.size());
    return d;
}

int ClusterTree::hops_to_head(NodeId n) const {
    auto it = depth.find(n);
    return it == depth.end() ? -1 : it->second;
}

TreeNodeClass ClusterTree::classify(NodeId n) const {
    if (n == head) return TreeNodeClass::ClusterHead;
    auto cit = children.find(n);
    if (cit == children.end() || cit->second.empty()) return TreeNodeClass::Boundary;
    for (NodeId c : cit->second) {
        auto git = children.find(c);
        if (git != children.end() && !git->second.empty()) return TreeNodeClass::Internal;
    }
    return TreeNodeClass::PreBoundary;
}

bool ClusterTree::valid() const {
    for (const auto& [n, p] : parent) {
        NodeId cur = n;
        size_t steps = 0;
        while (cur != head) {
            auto it = parent.find(cur);
            if (it == parent.end() || it->second == kNoNode) return false;
            cur = it->second;
            if (++steps > parent.size()) return false; // cycle
        }
        if (p != kNoNode) {
            auto cit = children.find(p);
            if (cit == children.end() || !cit->second.count(n)) return false;
        }
    }
    return true;
}

ClusterTree build_cluster_tree(int cell, NodeId head, const std::vector<NodeState>& nodes,
                               const std::set<NodeId>& members, double radio_range) {
    ClusterTree t;
    t.cell = cell;
    t.head = head;
    t.parent[head] = kNoNode;
    t.depth[head] = 0;
    t.children[head];
    std::deque<NodeId> frontier{head};
    std::set<NodeId> placed{head};
    while (!frontier.empty()) {
        NodeId u = frontier.front();
        frontier.pop_front();
        for (NodeId v : members) {
            if (placed.count(v)) continue;
            if (distance(nodes[static_cast<size_t>(u)].pos, nodes[static_cast<size_t>(v)].pos) >
                radio_range)
                continue;
            t.parent[v] = u;
            t.children[u].insert(v);
            t.depth[v] = t.depth[u] + 1;
            placed.insert(v);
            frontier.push_back(v);
        }
    }
    // out-of-range stragglers hang off the head directly
    for (NodeId v : members) {
        if (placed.count(v)) continue;
        t.parent[v] = head;
        t.children[head].insert(v);
        t.depth[v] = 1;
    }
    return t;
}

namespace {

void recompute_depths(ClusterTree& t) {
    t.depth.clear();
    t.depth[t.head] = 0;
    std::deque<NodeId> q{t.head};
    while (!q.empty()) {
        NodeId u = q.front();
        q.pop_front();
        auto it = t.children.find(u);
        if (it == t.children.end()) continue;
        for (NodeId c : it->second) {
            t.depth[c] = t.depth[u] + 1;
            q.push_back(c);
        }
    }
}

bool healthy(const Engine& eng, NodeId id) {
    if (id == kNoNode) return false;
    const NodeState& n = eng.node(id);
    return n.active() && classify_rank(n.battery, eng.cfg.thresholds) != EnergyRank::Low;
}

NodeId nearest_of(const Engine& eng, NodeId from, const std::vector<NodeId>& candidates) {
    NodeId best = kNoNode;
    double best_d = std::numeric_limits<double>::max();
    for (NodeId c : candidates) {
        double d = distance(eng.node(from).pos, eng.node(c).pos);
        if (d < best_d || (d == best_d && c < best)) {
            best = c;
            best_d = d;
        }
    }
    return best;
}

} // namespace

// ---------------------------------------------------------------------------
// VenkDriver

void VenkDriver::init(Engine& eng) {
    for (const auto& cell : eng.grid.cells) {
        if (cell.members.empty() || cell.manager == kNoNode) continue;
        trees_[cell.cell_id] =
            build_cluster_tree(cell.cell_id, cell.manager, eng.nodes, cell.members, eng.cfg.radio_range);
    }
}

void VenkDriver::on_rank_low(Engine& eng, NodeId id) {
    NodeState& n = eng.node(id);
    if (n.role == Role::BaseStation || n.cell_id < 0) return;
    auto tit = trees_.find(n.cell_id);
    if (tit == trees_.end()) return;
    ClusterTree& t = tit->second;
    if (t.head == id) {
        // failing head announces itself; children take it from there
        CellRt& rt = cells_[n.cell_id];
        rt.failing = id;
        rt.shares.clear();
        rt.election_open = true;
        Payload p;
        p.kind = MsgKind::FailReport;
        p.subject = id;
        eng.send(id, Dest::cell_cast(n.cell_id), p);
        if (id == eng.metrics().fault_target) eng.mark_detected();
        eng.set_timer(eng.now() + 2 * eng.cfg.delivery.latency + 1, HeadElectClose, n.cell_id);
        eng.change_role(id, Role::CommonNode, "head-stepping-down");
    } else if (t.parent.count(id)) {
        fail_member(eng, id);
    }
}

void VenkDriver::fail_member(Engine& eng, NodeId id) {
    NodeState& n = eng.node(id);
    ClusterTree& t = trees_[n.cell_id];
    if (id == eng.metrics().fault_target) eng.mark_detected();
    Payload bye;
    bye.kind = MsgKind::FailReport;
    bye.subject = id;
    NodeId par = t.parent[id];
    if (par != kNoNode && eng.node(par).status != NodeStatus::Dead)
        eng.send(id, Dest::unicast(par), bye);
    int pending = 0;
    for (NodeId c : t.children[id]) {
        if (eng.node(c).status == NodeStatus::Dead) continue;
        eng.send(id, Dest::unicast(c), bye);
        if (eng.node(c).active()) pending++;
    }
    if (par != kNoNode && eng.node(par).status != NodeStatus::Dead) {
        // hop-by-hop relay of the report towards the head
        Payload relay = bye;
        relay.successor = t.head;
        eng.send(id, Dest::unicast(par), relay);
    }
    // children rebuild their links; the subtree is complete when all re-attach
    cells_[n.cell_id].failing = id;
    if (pending == 0) eng.mark_recovered();
    if (par != kNoNode) t.children[par].erase(id);
    t.parent.erase(id);
    t.depth.erase(id);
    eng.set_status(id, NodeStatus::Sleeping, "failed-member");
}

void VenkDriver::after_inject(Engine& eng, const FaultSpec& fault, NodeId target) {
    if (fault.kind != FaultSpec::Kind::SuddenDeath || target == kNoNode) return;
    const NodeState& n = eng.node(target);
    if (n.cell_id < 0 || !trees_.count(n.cell_id)) return;
    ClusterTree& t = trees_[n.cell_id];
    if (t.head == target)
        eng.set_timer(eng.now() + cfg_.detect_delay, HeadDeadTimeout, n.cell_id);
    else if (t.parent.count(target))
        eng.set_timer(eng.now() + cfg_.detect_delay, MemberDeadTimeout, n.cell_id, target);
}

void VenkDriver::on_timer(Engine& eng, const TimerFire& tf) {
    switch (tf.kind) {
        case HeadElectClose: {
            int cell = tf.a;
            CellRt& rt = cells_[cell];
            if (!rt.election_open) break;
            rt.election_open = false;
            NodeId winner = kNoNode;
            double best = -1;
            for (const auto& [id, e] : rt.shares)
                if (winner == kNoNode || e > best) {
                    winner = id;
                    best = e;
                }
            if (winner == kNoNode) {
                eng.note("cluster," + std::to_string(cell) + ",retired-no-head-candidate");
                break;
            }
            ClusterTree& t = trees_[cell];
            NodeId old = t.head;
            t.head = winner;
            t.parent[winner] = kNoNode;
            if (old != kNoNode && old != winner && eng.node(old).status != NodeStatus::Dead) {
                t.children[old].erase(winner);
                t.parent[old] = winner;
                t.children[winner].insert(old);
            } else if (old != kNoNode) {
                t.children.erase(old);
                t.parent.erase(old);
                t.depth.erase(old);
            }
            eng.change_role(winner, Role::CellManager, "new-cluster-head");
            Payload p;
            p.kind = MsgKind::FinalHead;
            p.subject = winner;
            eng.send(winner, Dest::cell_cast(cell), p, {.recovery = true});
            rt.attaches_expected = static_cast<int>(rt.shares.count(winner) ? rt.shares.size() - 1
                                                                            : rt.shares.size());
            if (rt.attaches_expected == 0) {
                recompute_depths(t);
                eng.mark_recovered();
            }
            break;
        }
        case HeadDeadTimeout: {
            int cell = tf.a;
            ClusterTree& t = trees_[cell];
            CellRt& rt = cells_[cell];
            rt.failing = t.head;
            rt.shares.clear();
            rt.election_open = true;
            if (t.head == eng.metrics().fault_target) eng.mark_detected();
            for (NodeId c : t.children[t.head]) {
                if (!healthy(eng, c)) continue;
                Payload p;
                p.kind = MsgKind::EnergyMsg;
                p.energy_mj = eng.node(c).battery.residual_mj;
                eng.send(c, Dest::cell_cast(cell), p, {.recovery = true});
                rt.shares[c] = p.energy_mj;
            }
            eng.set_timer(eng.now() + 2 * eng.cfg.delivery.latency + 1, HeadElectClose, cell);
            break;
        }
        case MemberDeadTimeout: {
            int cell = tf.a;
            NodeId member = tf.b;
            ClusterTree& t = trees_[cell];
            if (member == eng.metrics().fault_target) eng.mark_detected();
            cells_[cell].failing = member;
            int pending = 0;
            for (NodeId c : t.children[member]) {
                if (!eng.node(c).active()) continue;
                pending++;
                JoinRt& j = joins_[c];
                j.open = true;
                j.failed_parent = member;
                j.offers.clear();
                Payload p;
                p.kind = MsgKind::JoinRequest;
                p.subject = member;
                eng.send(c, Dest::range_cast(eng.cfg.radio_range), p, {.recovery = true});
                eng.set_timer(eng.now() + cfg_.join_window, JoinClose, c);
            }
            NodeId par = t.parent.count(member) ? t.parent[member] : kNoNode;
            if (par != kNoNode) t.children[par].erase(member);
            t.parent.erase(member);
            t.depth.erase(member);
            if (pending == 0) eng.mark_recovered();
            break;
        }
        case JoinClose: {
            NodeId child = tf.a;
            JoinRt& j = joins_[child];
            if (!j.open) break;
            j.open = false;
            NodeState& n = eng.node(child);
            ClusterTree& t = trees_[n.cell_id];
            NodeId pick = kNoNode;
            double best = std::numeric_limits<double>::max();
            for (const auto& [cand, d] : j.offers) {
                // avoid adopting one of our own descendants
                NodeId cur = cand;
                bool cyc = false;
                size_t steps = 0;
                while (cur != kNoNode && steps++ <= t.parent.size()) {
                    if (cur == child) {
                        cyc = true;
                        break;
                    }
                    auto it = t.parent.find(cur);
                    cur = it == t.parent.end() ? kNoNode : it->second;
                }
                if (cyc) continue;
                if (d < best || (d == best && cand < pick)) {
                    pick = cand;
                    best = d;
                }
            }
            if (pick == kNoNode) {
                pick = t.head;
                eng.note("join," + std::to_string(child) + ",fallback-to-head");
            }
            if (t.children.count(j.failed_parent)) t.children[j.failed_parent].erase(child);
            t.parent[child] = pick;
            t.children[pick].insert(child);
            recompute_depths(t);
            CellRt& rt = cells_[n.cell_id];
            Payload att;
            att.kind = MsgKind::Attach;
            eng.send(child, Dest::unicast(pick), att, {.recovery = true});
            (void)rt;
            // count the outstanding rebuilds for this failure
            bool any_open = false;
            for (const auto& [c2, j2] : joins_)
                if (j2.open && eng.node(c2).cell_id == n.cell_id) any_open = true;
            if (!any_open) eng.mark_recovered();
            break;
        }
        default:
            break;
    }
}

void VenkDriver::on_deliver(Engine& eng, NodeId receiver, const Envelope& env) {
    NodeState& n = eng.node(receiver);
    switch (env.payload.kind) {
        case MsgKind::FailReport: {
            auto tit = trees_.find(n.cell_id);
            if (tit == trees_.end()) break;
            ClusterTree& t = tit->second;
            NodeId failing = env.payload.subject;
            if (env.payload.successor == t.head && receiver != t.head) {
                // relay the report one hop closer to the head
                NodeId par = t.parent.count(receiver) ? t.parent[receiver] : kNoNode;
                if (par != kNoNode && eng.node(par).status != NodeStatus::Dead)
                    eng.send(receiver, Dest::unicast(par), env.payload);
                break;
            }
            if (failing == t.head && t.parent.count(receiver) && t.parent[receiver] == failing) {
                // child of a failing head: join the election
                if (!healthy(eng, receiver)) break;
                CellRt& rt = cells_[n.cell_id];
                Payload p;
                p.kind = MsgKind::EnergyMsg;
                p.energy_mj = n.battery.residual_mj;
                eng.send(receiver, Dest::cell_cast(n.cell_id), p, {.recovery = true});
                rt.shares[receiver] = p.energy_mj;
            } else if (t.parent.count(receiver) && t.parent[receiver] == failing) {
                // child of a failing member: look for a new parent
                if (!n.active()) break;
                JoinRt& j = joins_[receiver];
                j.open = true;
                j.failed_parent = failing;
                j.offers.clear();
                Payload p;
                p.kind = MsgKind::JoinRequest;
                p.subject = failing;
                eng.send(receiver, Dest::range_cast(eng.cfg.radio_range), p, {.recovery = true});
                eng.set_timer(eng.now() + cfg_.join_window, JoinClose, receiver);
            }
            break;
        }
        case MsgKind::EnergyMsg: {
            CellRt& rt = cells_[n.cell_id];
            if (rt.election_open) rt.shares[env.sender] = env.payload.energy_mj;
            break;
        }
        case MsgKind::FinalHead: {
            NodeId winner = env.payload.subject;
            CellRt& rt = cells_[n.cell_id];
            if (receiver == winner || rt.failing == kNoNode) break;
            if (rt.shares.count(receiver) && receiver != winner) {
                ClusterTree& t = trees_[n.cell_id];
                if (t.parent.count(receiver) && t.parent[receiver] == rt.failing) {
                    Payload att;
                    att.kind = MsgKind::Attach;
                    eng.send(receiver, Dest::unicast(winner), att, {.recovery = true});
                }
            }
            break;
        }
        case MsgKind::Attach: {
            ClusterTree& t = trees_[n.cell_id];
            CellRt& rt = cells_[n.cell_id];
            NodeId old = t.parent.count(env.sender) ? t.parent[env.sender] : kNoNode;
            if (old != kNoNode && t.children.count(old)) t.children[old].erase(env.sender);
            t.parent[env.sender] = receiver;
            t.children[receiver].insert(env.sender);
            if (rt.attaches_expected > 0 && --rt.attaches_expected == 0) {
                recompute_depths(t);
                rt.failing = kNoNode;
                eng.mark_recovered();
            }
            break;
        }
        case MsgKind::JoinRequest: {
            NodeId failing = env.payload.subject;
            ClusterTree& t = trees_[n.cell_id];
            bool same_cluster = eng.node(env.sender).cell_id == n.cell_id;
            bool is_orphan_sibling = t.parent.count(receiver) && t.parent[receiver] == failing;
            bool ok = same_cluster && receiver != failing && healthy(eng, receiver) &&
                      !is_orphan_sibling && t.parent.count(receiver);
            Payload p;
            p.kind = ok ? MsgKind::JoinReply : MsgKind::JoinReject;
            eng.send(receiver, Dest::unicast(env.sender), p, {.recovery = true});
            break;
        }
        case MsgKind::JoinReply: {
            JoinRt& j = joins_[receiver];
            if (j.open) j.offers[env.sender] = distance(n.pos, eng.node(env.sender).pos);
            break;
        }
        default:
            break;
    }
}

std::vector<NodeId> VenkDriver::eligible_targets(const Engine& eng, FaultSpec::Selector sel,
                                                 int min_cell_members) const {
    std::vector<NodeId> out;
    for (const auto& [cell, t] : trees_) {
        int active = 0;
        for (const auto& [m, p] : t.parent)
            if (eng.node(m).active()) active++;
        switch (sel) {
            case FaultSpec::Selector::ACellManager:
            case FaultSpec::Selector::TheGroupManager:
                if (eng.node(t.head).active() && active >= min_cell_members) out.push_back(t.head);
                break;
            case FaultSpec::Selector::ACommonNode:
                for (const auto& [m, p] : t.parent)
                    if (m != t.head && p != kNoNode && eng.node(m).active()) out.push_back(m);
                break;
            default:
                break;
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// LbcDriver

void LbcDriver::init(Engine& eng) {
    for (const auto& g : eng.groups) {
        if (g.group_manager == kNoNode) continue;
        gateways_[g.group_id] = g.group_manager;
    }
    for (const auto& n : eng.nodes)
        if (!eng.is_bs(n.id) && n.group_id >= 0) member_group_[n.id] = n.group_id;
}

void LbcDriver::on_rank_low(Engine& eng, NodeId id) {
    const NodeState& n = eng.node(id);
    if (n.role == Role::BaseStation) return;
    auto git = member_group_.find(id);
    if (git == member_group_.end()) return;
    int g = git->second;
    if (gateways_.count(g) && gateways_[g] == id) {
        Payload p;
        p.kind = MsgKind::FailReport;
        p.subject = id;
        eng.send(id, Dest::group_cast(g), p, {.group_scope = true});
        if (id == eng.metrics().fault_target) eng.mark_detected();
        eng.set_timer(eng.now() + 2 * eng.cfg.delivery.latency, Dissolve, g);
    } else {
        eng.set_status(id, NodeStatus::Sleeping, "low-energy");
    }
}

void LbcDriver::after_inject(Engine& eng, const FaultSpec& fault, NodeId target) {
    if (fault.kind != FaultSpec::Kind::SuddenDeath || target == kNoNode) return;
    auto git = member_group_.find(target);
    if (git == member_group_.end()) return;
    int g = git->second;
    if (gateways_.count(g) && gateways_[g] == target)
        eng.set_timer(eng.now() + cfg_.detect_delay, Dissolve, g);
}

void LbcDriver::dissolve(Engine& eng, int group) {
    NodeId old = gateways_.count(group) ? gateways_[group] : kNoNode;
    if (old != kNoNode && old == eng.metrics().fault_target) eng.mark_detected();
    gateways_.erase(group);
    std::vector<NodeId> survivors;
    for (const auto& [g, gw] : gateways_)
        if (eng.node(gw).active()) survivors.push_back(gw);
    int pending = 0;
    for (const auto& [m, g] : member_group_) {
        if (g != group || m == old || !eng.node(m).active()) continue;
        NodeId gw = nearest_of(eng, m, survivors);
        if (gw == kNoNode) {
            eng.note("lbc," + std::to_string(m) + ",orphan-no-gateway");
            continue;
        }
        Payload p;
        p.kind = MsgKind::ReassignRequest;
        p.subject = m;
        eng.send(m, Dest::unicast(gw), p, {.recovery = true});
        pending++;
    }
    pending_[group] = pending;
    dissolving_of_.clear();
    for (const auto& [m, g] : member_group_)
        if (g == group && m != old) dissolving_of_[m] = group;
    if (pending == 0) eng.mark_recovered();
}

void LbcDriver::on_timer(Engine& eng, const TimerFire& t) {
    if (t.kind == Dissolve) dissolve(eng, t.a);
}

void LbcDriver::on_deliver(Engine& eng, NodeId receiver, const Envelope& env) {
    switch (env.payload.kind) {
        case MsgKind::ReassignRequest: {
            Payload p;
            p.kind = MsgKind::ReassignAccept;
            eng.send(receiver, Dest::unicast(env.sender), p, {.recovery = true});
            break;
        }
        case MsgKind::ReassignAccept: {
            auto dit = dissolving_of_.find(receiver);
            if (dit == dissolving_of_.end()) break;
            int old_group = dit->second;
            dissolving_of_.erase(dit);
            member_group_[receiver] = member_group_[env.sender];
            if (pending_[old_group] > 0 && --pending_[old_group] == 0) eng.mark_recovered();
            break;
        }
        default:
            break;
    }
}

std::vector<NodeId> LbcDriver::eligible_targets(const Engine& eng, FaultSpec::Selector sel,
                                                int min_cell_members) const {
    std::vector<NodeId> out;
    switch (sel) {
        case FaultSpec::Selector::ACellManager:
        case FaultSpec::Selector::TheGroupManager:
            for (const auto& [g, gw] : gateways_) {
                if (!eng.node(gw).active()) continue;
                int active = 0;
                for (const auto& [m, mg] : member_group_)
                    if (mg == g && eng.node(m).active()) active++;
                if (active >= min_cell_members) out.push_back(gw);
            }
            break;
        case FaultSpec::Selector::ACommonNode:
            for (const auto& [m, g] : member_group_) {
                auto git = gateways_.find(g);
                if (git != gateways_.end() && git->second != m && eng.node(m).active())
                    out.push_back(m);
            }
            break;
        default:
            break;
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// AsoDriver

void AsoDriver::init(Engine& eng) {
    for (const auto& cell : eng.grid.cells)
        if (cell.manager != kNoNode) headers_[cell.cell_id] = cell.manager;
}

void AsoDriver::on_rank_low(Engine& eng, NodeId id) {
    const NodeState& n = eng.node(id);
    if (n.role == Role::BaseStation || n.cell_id < 0) return;
    auto hit = headers_.find(n.cell_id);
    if (hit != headers_.end() && hit->second == id) {
        Payload p;
        p.kind = MsgKind::FailReport;
        p.subject = id;
        eng.send(id, Dest::cell_cast(n.cell_id), p);
        if (id == eng.metrics().fault_target) eng.mark_detected();
        eng.set_timer(eng.now() + 2 * eng.cfg.delivery.latency, Recluster, n.cell_id);
    } else {
        eng.set_status(id, NodeStatus::Sleeping, "low-energy");
    }
}

void AsoDriver::after_inject(Engine& eng, const FaultSpec& fault, NodeId target) {
    if (fault.kind != FaultSpec::Kind::SuddenDeath || target == kNoNode) return;
    const NodeState& n = eng.node(target);
    auto hit = headers_.find(n.cell_id);
    if (hit != headers_.end() && hit->second == target)
        eng.set_timer(eng.now() + cfg_.detect_delay, Recluster, n.cell_id);
}

void AsoDriver::recluster(Engine& eng, int cell) {
    auto hit = headers_.find(cell);
    if (hit == headers_.end()) return;
    NodeId old = hit->second;
    if (old == eng.metrics().fault_target) eng.mark_detected();
    headers_.erase(hit);
    std::vector<NodeId> survivors;
    for (const auto& [c, h] : headers_)
        if (eng.node(h).active()) survivors.push_back(h);
    int pending = 0;
    for (NodeId m : eng.grid.cells[static_cast<size_t>(cell)].members) {
        if (m == old || !eng.node(m).active()) continue;
        NodeId h = nearest_of(eng, m, survivors);
        if (h == kNoNode) {
            eng.note("aso," + std::to_string(m) + ",orphan-no-header");
            continue;
        }
        Payload p;
        p.kind = MsgKind::JoinRequest;
        p.subject = m;
        eng.send(m, Dest::unicast(h), p, {.recovery = true});
        pending++;
    }
    pending_[cell] = pending;
    for (NodeId m : eng.grid.cells[static_cast<size_t>(cell)].members)
        if (m != old) rejoining_of_[m] = cell;
    if (pending == 0) eng.mark_recovered();
}

void AsoDriver::on_timer(Engine& eng, const TimerFire& t) {
    if (t.kind == Recluster) recluster(eng, t.a);
}

void AsoDriver::on_deliver(Engine& eng, NodeId receiver, const Envelope& env) {
    switch (env.payload.kind) {
        case MsgKind::JoinRequest: {
            Payload p;
            p.kind = MsgKind::JoinReply;
            eng.send(receiver, Dest::unicast(env.sender), p, {.recovery = true});
            break;
        }
        case MsgKind::JoinReply: {
            auto rit = rejoining_of_.find(receiver);
            if (rit == rejoining_of_.end()) break;
            int old_cell = rit->second;
            rejoining_of_.erase(rit);
            if (pending_[old_cell] > 0 && --pending_[old_cell] == 0) eng.mark_recovered();
            break;
        }
        default:
            break;
    }
}

std::vector<NodeId> AsoDriver::eligible_targets(const Engine& eng, FaultSpec::Selector sel,
                                                int min_cell_members) const {
    std::vector<NodeId> out;
    switch (sel) {
        case FaultSpec::Selector::ACellManager:
        case FaultSpec::Selector::TheGroupManager:
            for (const auto& [c, h] : headers_) {
                if (!eng.node(h).active()) continue;
                int active = 0;
                for (NodeId m : eng.grid.cells[static_cast<size_t>(c)].members)
                    if (eng.node(m).active()) active++;
                if (active >= min_cell_members) out.push_back(h);
            }
            break;
        case FaultSpec::Selector::ACommonNode:
            for (const auto& [c, h] : headers_)
                for (NodeId m : eng.grid.cells[static_cast<size_t>(c)].members)
                    if (m != h && eng.node(m).active()) out.push_back(m);
            break;
        default:
            break;
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace wsnfm
