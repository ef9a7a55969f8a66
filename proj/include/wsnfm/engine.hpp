#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "wsnfm/messaging.hpp"
#include "wsnfm/topology.hpp"

namespace wsnfm {

enum class Role { CommonNode, SecondaryCellManager, CellManager, GroupManager, BackupGroupNode, BaseStation };
enum class NodeStatus { Active, Sleeping, Dead };

const char* to_string(Role r);
const char* to_string(NodeStatus s);

struct NodeState {
    NodeId id = kNoNode;
    Position pos;
    Role role = Role::CommonNode;
    Battery battery;
    int cell_id = -1;
    int group_id = -1;
    NodeStatus status = NodeStatus::Active;
    NodeId mgr = kNoNode;       // cached cell manager
    NodeId secondary = kNoNode; // cached secondary cell manager
    NodeId gm = kNoNode;        // cached group manager

    bool active() const { return status == NodeStatus::Active; }
};

struct FaultSpec {
    enum class Kind { SuddenDeath, EnergyDrain };
    enum class Selector { Explicit, ACellManager, TheGroupManager, ACommonNode };

    Kind kind = Kind::SuddenDeath;
    double to_fraction = 0;   // EnergyDrain target fraction of initial
    Tick at = 0;
    Selector selector = Selector::Explicit;
    NodeId target = kNoNode;  // Explicit
    int min_cell_members = 2; // eligibility for manager selectors
};

struct DeliveryModel {
    Tick latency = 1;
    double loss_probability = 0;
};

struct TimerFire {
    int kind = 0; // driver-defined
    int a = -1;
    int b = -1;
};

struct TraceRecord {
    enum class Ev { Send, Deliver, DropLoss, DropDead, DropSleeping, DropForeignGroup, DropForeignCell, DropDuplicate };
    Tick tick = 0;
    Ev ev = Ev::Send;
    NodeId sender = kNoNode;
    NodeId receiver = kNoNode; // kNoNode for send records
    MsgKind kind = MsgKind::Get;
    int group = -1;
    int cell = -1;
    double energy = 0; // sender residual at send time
    bool recovery = false;
};

const char* to_string(TraceRecord::Ev e);

struct RoleChange {
    Tick tick = 0;
    NodeId node = kNoNode;
    Role old_role = Role::CommonNode;
    Role new_role = Role::CommonNode;
    std::string cause;
};

struct RunMetrics {
    std::map<std::string, long> sends_by_kind;
    long total_sends = 0;
    long total_delivers = 0;
    long total_drops = 0;
    double total_energy_mj = 0;      // sum over nodes of initial - residual
    long recovery_messages = 0;      // sends tagged as recovery traffic
    double recovery_energy_mj = 0;   // tx+rx attributable to recovery traffic
    long recovery_rounds = 0;        // distinct ticks carrying recovery sends
    NodeId fault_target = kNoNode;
    Tick fault_tick = -1;
    Tick detected_tick = -1;
    Tick recovered_tick = -1;
    long msgs_from_target_after_fault = 0;

    double detection_latency() const {
        return (detected_tick >= 0 && fault_tick >= 0) ? double(detected_tick - fault_tick) : -1;
    }
    double recovery_latency() const {
        return (recovered_tick >= 0 && fault_tick >= 0) ? double(recovered_tick - fault_tick) : -1;
    }
};

struct RunResult {
    std::vector<TraceRecord> trace;
    std::vector<RoleChange> roles;
    RunMetrics metrics;
};

std::string render_trace_csv(const std::vector<TraceRecord>& trace);
std::string render_roles_csv(const std::vector<RoleChange>& roles);

// Where a send is radiated to. Broadcasts are one send (one tx charge)
// delivered to every node in scope.
struct Dest {
    enum class Type { Unicast, CellCast, GroupCast, RangeCast, ToBase, BsGroupCast };
    Type type = Type::Unicast;
    NodeId to = kNoNode;     // Unicast
    int cell = -1;           // CellCast
    int group = -1;          // GroupCast / BsGroupCast
    double radius = 0;       // RangeCast
    NodeId extra = kNoNode;  // additional unicast listener (e.g. the group manager)

    static Dest unicast(NodeId to) { return {Type::Unicast, to}; }
    static Dest cell_cast(int cell, NodeId extra = kNoNode) {
        Dest d; d.type = Type::CellCast; d.cell = cell; d.extra = extra; return d;
    }
    static Dest group_cast(int group) { Dest d; d.type = Type::GroupCast; d.group = group; return d; }
    static Dest range_cast(double radius) { Dest d; d.type = Type::RangeCast; d.radius = radius; return d; }
    static Dest to_base() { Dest d; d.type = Type::ToBase; return d; }
    static Dest bs_group_cast(int group) { Dest d; d.type = Type::BsGroupCast; d.group = group; return d; }
};

struct SendOpts {
    bool recovery = false;
    bool group_scope = false;
    bool bs_link = false;
    int cell_override = -1;  // stamp a different cell id (cross-cell directives)
    int group_override = -1; // stamp a different group id (manager-to-manager traffic)
};

class Engine;

// Protocol implementations plug into the engine through this interface.
class Driver {
public:
    virtual ~Driver() = default;
    virtual void init(Engine& eng) = 0;
    virtual void on_timer(Engine& eng, const TimerFire& t) = 0;
    virtual void on_deliver(Engine& eng, NodeId receiver, const Envelope& env) = 0;
    // Fired once when a node's rank first drops to Low (self-detection hook).
    virtual void on_rank_low(Engine& eng, NodeId node) = 0;
    virtual void after_inject(Engine& /*eng*/, const FaultSpec& /*fault*/, NodeId /*target*/) {}
    virtual std::vector<NodeId> eligible_targets(const Engine& eng, FaultSpec::Selector sel,
                                                 int min_cell_members) const = 0;
    virtual void check_invariants(const Engine& /*eng*/) const {}
};

struct SimConfig {
    RadioParams radio;
    EnergyThresholds thresholds;
    DeliveryModel delivery;
    double radio_range = 30; // broadcast charge distance and neighbor graphs
    Tick max_ticks = 400;
    Tick quiescence_window = 0; // 0 -> run to max_ticks
    std::uint64_t seed = 1;
};

class Engine {
public:
    Engine(SimConfig cfg, CellGrid grid, std::vector<GroupRecord> groups,
           std::vector<NodeState> nodes, Driver& driver);

    RunResult run(const std::vector<FaultSpec>& faults);

    // --- driver API ---------------------------------------------------------
    Tick now() const { return now_; }
    void set_timer(Tick at, int kind, int a = -1, int b = -1);
    void send(NodeId from, const Dest& dest, const Payload& payload, const SendOpts& opts = {});
    void change_role(NodeId node, Role new_role, const std::string& cause);
    void set_status(NodeId node, NodeStatus st, const std::string& cause);
    void mark_detected();
    void mark_recovered();
    void log_filter_drop(NodeId receiver, const Envelope& env, FilterDecision d);
    void note(const std::string& line); // free-form log (escalations, orphans)
    std::mt19937_64& rng() { return rng_; }

    // --- world --------------------------------------------------------------
    SimConfig cfg;
    CellGrid grid;
    std::vector<GroupRecord> groups;
    std::vector<NodeState> nodes; // index == id; base station is the last node
    NodeId bs_id = kNoNode;

    NodeState& node(NodeId id) { return nodes[static_cast<size_t>(id)]; }
    const NodeState& node(NodeId id) const { return nodes[static_cast<size_t>(id)]; }
    bool is_bs(NodeId id) const { return id == bs_id; }

    const std::vector<TraceRecord>& trace() const { return trace_; }
    const std::vector<RoleChange>& roles() const { return roles_; }
    const std::vector<std::string>& notes() const { return notes_; }
    RunMetrics& metrics() { return metrics_; }

    // Charges applied per node (tx, rx, fault adjustments), for conservation checks.
    double charged_mj(NodeId id) const { return charged_[static_cast<size_t>(id)]; }

private:
    struct Event {
        Tick at = 0;
        std::uint64_t seq = 0;
        enum class Kind { Timer, Deliver, Inject } kind = Kind::Timer;
        TimerFire timer;
        Envelope env;
        NodeId receiver = kNoNode;
        bool recovery = false;
        FaultSpec fault;
    };
    struct EventOrder {
        bool operator()(const Event& a, const Event& b) const {
            if (a.at != b.at) return a.at > b.at;
            return a.seq > b.seq;
        }
    };

    void push(Event e);
    void apply_charge(NodeId id, double mj);
    void dispatch(const Event& e);
    void do_inject(const FaultSpec& f);
    void energy_sweep();
    void check_global_invariants();

    Driver& driver_;
    std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
    std::uint64_t next_seq_ = 0;
    Tick now_ = 0;
    Tick last_activity_ = 0;
    std::mt19937_64 rng_;
    std::vector<TraceRecord> trace_;
    std::vector<RoleChange> roles_;
    std::vector<std::string> notes_;
    RunMetrics metrics_;
    std::vector<double> charged_;
    std::vector<EnergyRank> prev_rank_;
    std::set<Tick> recovery_ticks_;
    long faults_pending_ = 0;
};

} // namespace wsnfm
