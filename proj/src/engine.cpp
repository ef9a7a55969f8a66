#include "wsnfm/engine.hpp"

#include <cassert>
#include <sstream>
#include <stdexcept>

namespace wsnfm {

namespace {
constexpr int kEnergySweepTimer = -1000; // engine-internal
}

const char* to_string(Role r) {
    switch (r) {
        case Role::CommonNode: return "common";
        case Role::SecondaryCellManager: return "secondary";
        case Role::CellManager: return "cell_manager";
        case Role::GroupManager: return "group_manager";
        case Role::BackupGroupNode: return "backup";
        case Role::BaseStation: return "base_station";
    }
    return "?";
}

const char* to_string(NodeStatus s) {
    switch (s) {
        case NodeStatus::Active: return "active";
        case NodeStatus::Sleeping: return "sleeping";
        case NodeStatus::Dead: return "dead";
    }
    return "?";
}

const char* to_string(TraceRecord::Ev e) {
    switch (e) {
        case TraceRecord::Ev::Send: return "send";
        case TraceRecord::Ev::Deliver: return "deliver";
        case TraceRecord::Ev::DropLoss: return "drop-loss";
        case TraceRecord::Ev::DropDead: return "drop-dead";
        case TraceRecord::Ev::DropSleeping: return "drop-sleeping";
        case TraceRecord::Ev::DropForeignGroup: return "drop-foreign-group";
        case TraceRecord::Ev::DropForeignCell: return "drop-foreign-cell";
        case TraceRecord::Ev::DropDuplicate: return "drop-duplicate";
    }
    return "?";
}

std::string render_trace_csv(const std::vector<TraceRecord>& trace) {
    std::ostringstream os;
    os << "tick,event,sender,receiver,kind,group,cell,energy\n";
    for (const auto& r : trace) {
        os << r.tick << ',' << to_string(r.ev) << ',' << r.sender << ',' << r.receiver << ','
           << to_string(r.kind) << ',' << r.group << ',' << r.cell << ',' << r.energy << '\n';
    }
    return os.str();
}

std::string render_roles_csv(const std::vector<RoleChange>& roles) {
    std::ostringstream os;
    os << "tick,node,old_role,new_role,cause\n";
    for (const auto& r : roles) {
        os << r.tick << ',' << r.node << ',' << to_string(r.old_role) << ','
           << to_string(r.new_role) << ',' << r.cause << '\n';
    }
    return os.str();
}

Engine::Engine(SimConfig cfg_, CellGrid grid_, std::vector<GroupRecord> groups_,
               std::vector<NodeState> nodes_, Driver& driver)
    : cfg(std::move(cfg_)),
      grid(std::move(grid_)),
      groups(std::move(groups_)),
      nodes(std::move(nodes_)),
      driver_(driver),
      rng_(cfg.seed) {
    for (const auto& n : nodes)
        if (n.role == Role::BaseStation) bs_id = n.id;
    charged_.assign(nodes.size(), 0.0);
    prev_rank_.assign(nodes.size(), EnergyRank::High);
    for (const auto& n : nodes)
        if (!is_bs(n.id)) prev_rank_[static_cast<size_t>(n.id)] = classify_rank(n.battery, cfg.thresholds);
}

void Engine::push(Event e) {
    e.seq = next_seq_++;
    queue_.push(std::move(e));
}

void Engine::set_timer(Tick at, int kind, int a, int b) {
    Event e;
    e.at = at;
    e.kind = Event::Kind::Timer;
    e.timer = {kind, a, b};
    push(std::move(e));
}

void Engine::apply_charge(NodeId id, double mj) {
    if (is_bs(id)) return; // base station is mains-powered
    auto& b = node(id).battery;
    double applied = std::min(mj, b.residual_mj);
    b.residual_mj -= applied;
    charged_[static_cast<size_t>(id)] += applied;
}

void Engine::send(NodeId from, const Dest& dest, const Payload& payload, const SendOpts& opts) {
    NodeState& s = node(from);
    if (!is_bs(from) && !s.active())
        throw std::runtime_error("invariant: send from non-active node " + std::to_string(from));

    Envelope env = make_envelope(from, opts.group_override >= 0 ? opts.group_override : s.group_id,
                                 s.cell_id, s.battery.residual_mj, payload, now_, opts.cell_override);
    env.group_scope = opts.group_scope;
    env.bs_link = opts.bs_link || is_bs(from) || dest.type == Dest::Type::ToBase;

    // receiver set
    std::vector<NodeId> receivers;
    switch (dest.type) {
        case Dest::Type::Unicast:
            receivers.push_back(dest.to);
            break;
        case Dest::Type::CellCast:
            for (NodeId m : grid.cells[dest.cell].members)
                if (m != from) receivers.push_back(m);
            if (dest.extra != kNoNode && dest.extra != from) receivers.push_back(dest.extra);
            break;
        case Dest::Type::GroupCast:
            for (const auto& n : nodes)
                if (!is_bs(n.id) && n.group_id == dest.group && n.id != from) receivers.push_back(n.id);
            break;
        case Dest::Type::BsGroupCast:
            for (const auto& n : nodes)
                if (!is_bs(n.id) && n.group_id == dest.group) receivers.push_back(n.id);
            break;
        case Dest::Type::RangeCast:
            for (const auto& n : nodes)
                if (!is_bs(n.id) && n.id != from && distance(n.pos, s.pos) <= dest.radius)
                    receivers.push_back(n.id);
            break;
        case Dest::Type::ToBase:
            receivers.push_back(bs_id);
            break;
    }

    // tx charge: unicast at actual distance, broadcast at radio range
    double dist = cfg.radio_range;
    if (dest.type == Dest::Type::Unicast || dest.type == Dest::Type::ToBase) {
        NodeId to = receivers.front();
        dist = is_bs(to) || is_bs(from) ? cfg.radio_range : distance(s.pos, node(to).pos);
    }
    double tx = tx_cost_mj(cfg.radio, cfg.radio.message_bits, dist);
    apply_charge(from, tx);

    TraceRecord rec{now_, TraceRecord::Ev::Send, from, kNoNode, payload.kind, env.group_id,
                    env.cell_id, s.battery.residual_mj, opts.recovery};
    trace_.push_back(rec);
    metrics_.total_sends++;
    metrics_.sends_by_kind[to_string(payload.kind)]++;
    if (opts.recovery) {
        metrics_.recovery_messages++;
        metrics_.recovery_energy_mj += tx;
        recovery_ticks_.insert(now_);
    }
    if (from == metrics_.fault_target && metrics_.fault_tick >= 0 && now_ >= metrics_.fault_tick)
        metrics_.msgs_from_target_after_fault++;
    last_activity_ = now_;

    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (NodeId r : receivers) {
        if (cfg.delivery.loss_probability > 0 && u(rng_) < cfg.delivery.loss_probability) {
            trace_.push_back({now_, TraceRecord::Ev::DropLoss, from, r, payload.kind, env.group_id,
                              env.cell_id, 0, opts.recovery});
            metrics_.total_drops++;
            continue;
        }
        Event e;
        e.at = now_ + cfg.delivery.latency;
        e.kind = Event::Kind::Deliver;
        e.env = env;
        e.receiver = r;
        e.recovery = opts.recovery;
        push(std::move(e));
    }
}

void Engine::change_role(NodeId id, Role new_role, const std::string& cause) {
    NodeState& n = node(id);
    if (n.role == new_role) return;
    roles_.push_back({now_, id, n.role, new_role, cause});
    n.role = new_role;
}

void Engine::set_status(NodeId id, NodeStatus st, const std::string& cause) {
    NodeState& n = node(id);
    if (n.status == NodeStatus::Dead && st != NodeStatus::Dead)
        throw std::runtime_error("invariant: dead node " + std::to_string(id) + " cannot revive");
    if (n.status == st) return;
    roles_.push_back({now_, id, n.role, n.role, std::string(to_string(st)) + ":" + cause});
    n.status = st;
}

void Engine::mark_detected() {
    if (metrics_.detected_tick < 0) metrics_.detected_tick = now_;
}

void Engine::mark_recovered() {
    if (metrics_.recovered_tick < 0) metrics_.recovered_tick = now_;
}

void Engine::log_filter_drop(NodeId receiver, const Envelope& env, FilterDecision d) {
    TraceRecord::Ev ev = TraceRecord::Ev::DropDuplicate;
    if (d == FilterDecision::DropForeignGroup) ev = TraceRecord::Ev::DropForeignGroup;
    else if (d == FilterDecision::DropForeignCell) ev = TraceRecord::Ev::DropForeignCell;
    trace_.push_back({now_, ev, env.sender, receiver, env.payload.kind, env.group_id, env.cell_id, 0, false});
    metrics_.total_drops++;
}

void Engine::note(const std::string& line) {
    notes_.push_back(std::to_string(now_) + "," + line);
}

void Engine::do_inject(const FaultSpec& f) {
    faults_pending_--;
    NodeId target = f.target;
    if (f.selector != FaultSpec::Selector::Explicit) {
        auto elig = driver_.eligible_targets(*this, f.selector, f.min_cell_members);
        if (elig.empty()) {
            note("inject,no-eligible-target");
            return;
        }
        std::uniform_int_distribution<size_t> pick(0, elig.size() - 1);
        target = elig[pick(rng_)];
    }
    if (target == kNoNode || node(target).status == NodeStatus::Dead) {
        note("inject,target-dead-noop");
        return;
    }
    metrics_.fault_target = target;
    metrics_.fault_tick = now_;
    last_activity_ = now_;
    NodeState& n = node(target);
    if (f.kind == FaultSpec::Kind::SuddenDeath) {
        set_status(target, NodeStatus::Dead, "sudden-death");
    } else {
        double want = f.to_fraction * n.battery.initial_mj;
        if (want < n.battery.residual_mj) {
            double delta = n.battery.residual_mj - want;
            n.battery.residual_mj = want;
            charged_[static_cast<size_t>(target)] += delta;
        }
    }
    driver_.after_inject(*this, f, target);
}

void Engine::energy_sweep() {
    for (auto& n : nodes) {
        if (is_bs(n.id) || !n.active()) continue;
        EnergyRank r = classify_rank(n.battery, cfg.thresholds);
        auto& prev = prev_rank_[static_cast<size_t>(n.id)];
        if (r == EnergyRank::Low && prev != EnergyRank::Low) {
            prev = r;
            driver_.on_rank_low(*this, n.id);
        } else {
            prev = r;
        }
    }
}

void Engine::dispatch(const Event& e) {
    switch (e.kind) {
        case Event::Kind::Inject:
            do_inject(e.fault);
            break;
        case Event::Kind::Timer:
            if (e.timer.kind == kEnergySweepTimer) {
                energy_sweep();
                set_timer(now_ + 1, kEnergySweepTimer);
            } else {
                driver_.on_timer(*this, e.timer);
            }
            break;
        case Event::Kind::Deliver: {
            NodeState& r = node(e.receiver);
            TraceRecord rec{now_, TraceRecord::Ev::Deliver, e.env.sender, e.receiver,
                            e.env.payload.kind, e.env.group_id, e.env.cell_id, 0, e.recovery};
            if (r.status == NodeStatus::Dead) {
                rec.ev = TraceRecord::Ev::DropDead;
                trace_.push_back(rec);
                metrics_.total_drops++;
                return;
            }
            if (r.status == NodeStatus::Sleeping) {
                rec.ev = TraceRecord::Ev::DropSleeping;
                trace_.push_back(rec);
                metrics_.total_drops++;
                return;
            }
            double rx = rx_cost_mj(cfg.radio, cfg.radio.message_bits);
            apply_charge(e.receiver, rx);
            if (e.recovery) metrics_.recovery_energy_mj += rx;
            trace_.push_back(rec);
            metrics_.total_delivers++;
            last_activity_ = now_;
            driver_.on_deliver(*this, e.receiver, e.env);
            break;
        }
    }
}

void Engine::check_global_invariants() {
    // role uniqueness per cell and per group
    std::vector<int> cm_count(grid.cells.size(), 0);
    std::vector<int> gm_count(groups.size(), 0);
    for (const auto& n : nodes) {
        if (is_bs(n.id) || n.status == NodeStatus::Dead) continue;
        if (n.role == Role::CellManager && n.cell_id >= 0) cm_count[static_cast<size_t>(n.cell_id)]++;
        if (n.role == Role::GroupManager && n.group_id >= 0) {
            gm_count[static_cast<size_t>(n.group_id)]++;
            if (n.cell_id >= 0) cm_count[static_cast<size_t>(n.cell_id)]++; // GM manages its own cell
        }
        if (n.battery.residual_mj < -1e-12 || n.battery.residual_mj > n.battery.initial_mj + 1e-12)
            throw std::runtime_error("invariant: battery out of bounds, node " + std::to_string(n.id));
    }
    for (size_t c = 0; c < cm_count.size(); c++)
        if (cm_count[c] > 1)
            throw std::runtime_error("invariant: cell " + std::to_string(c) + " has multiple managers at tick " +
                                     std::to_string(now_));
    for (size_t g = 0; g < gm_count.size(); g++)
        if (gm_count[g] > 1)
            throw std::runtime_error("invariant: group " + std::to_string(g) + " has multiple managers at tick " +
                                     std::to_string(now_));
    driver_.check_invariants(*this);
}

RunResult Engine::run(const std::vector<FaultSpec>& faults) {
    for (const auto& f : faults) {
        Event e;
        e.at = f.at;
        e.kind = Event::Kind::Inject;
        e.fault = f;
        push(std::move(e));
        faults_pending_++;
    }
    set_timer(1, kEnergySweepTimer);
    driver_.init(*this);

    while (!queue_.empty()) {
        Event e = queue_.top();
        queue_.pop();
        if (e.at < now_) throw std::runtime_error("invariant: time went backwards");
        now_ = e.at;
        if (now_ > cfg.max_ticks) break;
        if (cfg.quiescence_window > 0 && faults_pending_ == 0 &&
            now_ - last_activity_ > cfg.quiescence_window)
            break;
        dispatch(e);
        check_global_invariants();
    }

    metrics_.recovery_rounds = static_cast<long>(recovery_ticks_.size());
    metrics_.total_energy_mj = 0;
    for (const auto& n : nodes)
        if (!is_bs(n.id)) metrics_.total_energy_mj += n.battery.initial_mj - n.battery.residual_mj;

    RunResult res;
    res.trace = trace_;
    res.roles = roles_;
    res.metrics = metrics_;
    return res;
}

} // namespace wsnfm
