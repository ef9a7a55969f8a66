#pragma once

#include <map>
#include <set>
#include <vector>

#include "wsnfm/engine.hpp"

namespace wsnfm {

// ---------------------------------------------------------------------------
// Closed-form message counts for the baseline recovery procedures. The
// drivers below reproduce these counts message-for-message; unit tests pin
// both sides to the same numbers.

// A failing node notifies every tree neighbour and the report is relayed hop
// by hop to the cluster head.
inline long venk_detect_message_count(int degree, int hops) { return degree + hops; }

// Children exchange residual energy, the winner announces itself, the rest
// re-attach: c shares + 1 final-head + (c - 1) attach = 2c.
inline long venk_head_recovery_message_count(int healthy_children) {
    return 2L * healthy_children;
}

// Cluster dissolution: every member requests a slot at another gateway and
// gets an acknowledgement.
inline long lbc_reassignment_message_count(int members) { return 2L * members; }

// Orphans of a failed header join the nearest surviving header.
inline long aso_reclustering_message_count(int orphans) { return 2L * orphans; }

// ---------------------------------------------------------------------------
// Tree-based clustering (clusters are the grid cells, head = initial cell
// manager, tree built breadth-first over the radio-range neighbour graph).

enum class TreeNodeClass { ClusterHead, Internal, PreBoundary, Boundary };

struct ClusterTree {
    int cell = -1;
    NodeId head = kNoNode;
    std::map<NodeId, NodeId> parent;              // head maps to kNoNode
    std::map<NodeId, std::set<NodeId>> children;
    std::map<NodeId, int> depth;

    int degree(NodeId n) const;
    int hops_to_head(NodeId n) const;
    TreeNodeClass classify(NodeId n) const;
    bool valid() const; // every node reaches the head, no cycles
};

ClusterTree build_cluster_tree(int cell, NodeId head, const std::vector<NodeState>& nodes,
                               const std::set<NodeId>& members, double radio_range);

struct BaselineConfig {
    Tick detect_delay = 5;   // silence-based failure detection for sudden deaths
    Tick join_window = 4;    // how long re-attaching nodes collect offers
};

class VenkDriver : public Driver {
public:
    explicit VenkDriver(BaselineConfig cfg = {}) : cfg_(cfg) {}

    void init(Engine& eng) override;
    void on_timer(Engine& eng, const TimerFire& t) override;
    void on_deliver(Engine& eng, NodeId receiver, const Envelope& env) override;
    void on_rank_low(Engine& eng, NodeId id) override;
    void after_inject(Engine& eng, const FaultSpec& fault, NodeId target) override;
    std::vector<NodeId> eligible_targets(const Engine& eng, FaultSpec::Selector sel,
                                         int min_cell_members) const override;

    const ClusterTree& tree(int cell) const { return trees_.at(cell); }

private:
    enum Timer { HeadElectClose = 1, HeadDeadTimeout, JoinClose, MemberDeadTimeout };

    void start_head_recovery(Engine& eng, int cell, bool head_announced);
    void fail_member(Engine& eng, NodeId id);

    struct CellRt {
        std::map<NodeId, double> shares;
        bool election_open = false;
        NodeId failing = kNoNode;
        int attaches_expected = 0;
    };
    struct JoinRt {
        std::map<NodeId, double> offers; // candidate parent -> distance
        NodeId failed_parent = kNoNode;
        bool open = false;
    };

    BaselineConfig cfg_;
    std::map<int, ClusterTree> trees_;
    std::map<int, CellRt> cells_;
    std::map<NodeId, JoinRt> joins_;
};

// Load-balanced clustering: clusters are the groups, gateway = initial group
// manager. Gateway loss dissolves the cluster and members re-register with
// the nearest surviving gateway.
class LbcDriver : public Driver {
public:
    explicit LbcDriver(BaselineConfig cfg = {}) : cfg_(cfg) {}

    void init(Engine& eng) override;
    void on_timer(Engine& eng, const TimerFire& t) override;
    void on_deliver(Engine& eng, NodeId receiver, const Envelope& env) override;
    void on_rank_low(Engine& eng, NodeId id) override;
    void after_inject(Engine& eng, const FaultSpec& fault, NodeId target) override;
    std::vector<NodeId> eligible_targets(const Engine& eng, FaultSpec::Selector sel,
                                         int min_cell_members) const override;

    NodeId gateway(int group) const { return gateways_.at(group); }

private:
    enum Timer { Dissolve = 1 };

    void dissolve(Engine& eng, int group);

    BaselineConfig cfg_;
    std::map<int, NodeId> gateways_;
    std::map<NodeId, int> member_group_;
    std::map<int, int> pending_;         // group -> outstanding reassignments
    std::map<NodeId, int> dissolving_of_; // member -> group being dissolved
};

// Autonomic self-organisation: headers are the per-cell initial managers;
// orphans of a failed header individually join the nearest surviving header.
class AsoDriver : public Driver {
public:
    explicit AsoDriver(BaselineConfig cfg = {}) : cfg_(cfg) {}

    void init(Engine& eng) override;
    void on_timer(Engine& eng, const TimerFire& t) override;
    void on_deliver(Engine& eng, NodeId receiver, const Envelope& env) override;
    void on_rank_low(Engine& eng, NodeId id) override;
    void after_inject(Engine& eng, const FaultSpec& fault, NodeId target) override;
    std::vector<NodeId> eligible_targets(const Engine& eng, FaultSpec::Selector sel,
                                         int min_cell_members) const override;

    NodeId header(int cell) const { return headers_.at(cell); }

private:
    enum Timer { Recluster = 1 };

    void recluster(Engine& eng, int cell);

    BaselineConfig cfg_;
    std::map<int, NodeId> headers_;
    std::map<int, int> pending_;        // cell -> outstanding joins
    std::map<NodeId, int> rejoining_of_; // orphan -> cell being rebuilt
};

} // namespace wsnfm
