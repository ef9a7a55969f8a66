#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "wsnfm/engine.hpp"

namespace wsnfm {

struct Timers {
    Tick energy_check_period = 1;
    Tick in_cell_period = 10;
    Tick out_cell_period = 30; // must exceed in_cell_period
    Tick query_timeout = 2;
};

enum class LowCellPolicy { Rate, Merge };

struct ProtocolConfig {
    Timers timers;
    bool broadcast_get = true; // false -> one Get per member
    LowCellPolicy low_cell_policy = LowCellPolicy::Rate;
    double rate_multiplier = 2.0;
    int min_cell_density = 0; // 0 disables wake-on-low-density
};

// Per-cell detection bookkeeping held by the acting cell manager. Carried
// over on promotion so a new manager inherits the member list.
struct ManagerLedger {
    std::set<NodeId> expected;
    std::map<NodeId, int> missed;
    std::map<NodeId, Tick> pending_query; // node -> deadline
    std::set<NodeId> responded;
};

// Winner of an energy-share exchange: max energy fraction >= high threshold,
// ties by lowest id. nullopt when nobody qualifies.
std::optional<NodeId> election_winner(const std::map<NodeId, double>& shares_mj,
                                      const std::map<NodeId, double>& initial_mj,
                                      double high_fraction);

// Best merge target for one surviving member: adjacent cell (4-neighborhood)
// with the best health, falling back to any group cell; -1 when none viable.
int choose_merge_target(const CellGrid& grid, const GroupRecord& group, int source_cell,
                        const std::map<int, HealthStatus>& healths);

class CellularDriver : public Driver {
public:
    explicit CellularDriver(ProtocolConfig cfg = {}) : cfg_(cfg) {}

    void init(Engine& eng) override;
    void on_timer(Engine& eng, const TimerFire& t) override;
    void on_deliver(Engine& eng, NodeId receiver, const Envelope& env) override;
    void on_rank_low(Engine& eng, NodeId id) override;
    std::vector<NodeId> eligible_targets(const Engine& eng, FaultSpec::Selector sel,
                                         int min_cell_members) const override;

    const ProtocolConfig& config() const { return cfg_; }
    // Inspection hooks for tests.
    const ManagerLedger& ledger(int cell) const { return cells_.at(cell).ledger; }
    int preference(int group, int cell) const; // 0 preferred, 1 occasional, 2 avoided

private:
    enum Timer {
        InCellRound = 1,
        CollectCheck,
        QueryDeadline, // a=cell, b=node
        OutReport,     // a=cell
        GroupCheck,    // a=group
        BsWatch,
        BsQueryDeadline, // a=group
        CellElectionClose,
        GroupElectionClose,
        PromotionFallback, // a=cell
    };

    struct CellRt {
        ManagerLedger ledger;
        std::map<NodeId, double> member_energy;
        Tick period = 0;
        bool rate_applied = false;
        bool merge_requested = false;
        bool election_open = false;
        std::map<NodeId, double> shares;
    };
    struct GroupRt {
        std::map<int, bool> report_seen;
        std::map<int, int> miss;
        std::map<int, HealthStatus> health;
        std::map<int, NodeId> believed_cm;
        std::map<int, NodeId> believed_secondary;
        std::map<int, int> preference;
        std::map<int, bool> low_action_taken;
        bool election_open = false;
        std::map<NodeId, double> shares;
    };
    struct BsRt {
        std::map<int, Tick> last_heard;
        std::map<int, NodeId> believed_gm;
        std::map<int, NodeId> known_backup;
        std::map<int, bool> pending;
    };

    HealthStatus compute_cell_health(const Engine& eng, int cell) const;
    void run_in_cell_round(Engine& eng, int cell);
    void run_collect_check(Engine& eng, int cell);
    void run_query_deadline(Engine& eng, int cell, NodeId member);
    void run_out_report(Engine& eng, int cell);
    void run_group_check(Engine& eng, int group);
    void run_bs_watch(Engine& eng);
    void run_bs_query_deadline(Engine& eng, int group);
    void close_cell_election(Engine& eng, int cell);
    void close_group_election(Engine& eng, int group);
    void run_promotion_fallback(Engine& eng, int cell);

    void share_energy_cell(Engine& eng, NodeId who, int cell);
    void share_energy_group(Engine& eng, NodeId who, int group);
    void promote_secondary(Engine& eng, NodeId who, int cell, const char* cause);
    void handle_cm_gone(Engine& eng, NodeId receiver, NodeId old_mgr, NodeId successor);
    void handle_merge_request(Engine& eng, int group, int source_cell);
    void wake_if_sparse(Engine& eng, int cell);
    void maybe_detect(Engine& eng, NodeId subject);
    void refresh_secondary(Engine& eng, int cell);
    Tick election_window(const Engine& eng) const { return 2 * eng.cfg.delivery.latency + 2; }

    ProtocolConfig cfg_;
    std::map<int, CellRt> cells_;
    std::map<int, GroupRt> groups_;
    BsRt bs_;
    std::map<NodeId, SeenSet> seen_;
};

// Seeded uniform deployment plus initial elections and role assignment.
// The base station gets id = node_count and sits at the area centre.
struct Deployment {
    CellGrid grid;
    std::vector<GroupRecord> groups;
    std::vector<NodeState> nodes;
};

Deployment make_deployment(int node_count, double area_w, double area_h, double cell_side,
                           int group_dim, double initial_mj, std::uint64_t seed);

// Same elections/roles over caller-provided nodes (tests build exact layouts).
Deployment make_deployment_explicit(std::vector<std::pair<Position, double>> nodes,
                                    double area_w, double area_h, double cell_side, int group_dim,
                                    double initial_mj);

// Wakes up to `needed` sleeping members, highest residual first. Returns the
// ids that woke.
std::vector<NodeId> wake_sleeping(Engine& eng, int cell, int needed);

} // namespace wsnfm
