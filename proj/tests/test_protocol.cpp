#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "wsnfm/protocol.hpp"

using namespace wsnfm;

namespace {

// cell 0: nodes 0,1,2 (equal energy -> manager 0, secondary 1);
// cell 1: node 3 at higher energy (manager and group manager), node 4.
Deployment two_cell_world(double e0 = 2000, double e1 = 2000, double e2 = 2000) {
    return make_deployment_explicit(
        {
            {{5, 5}, e0},
            {{10, 5}, e1},
            {{5, 10}, e2},
            {{35, 5}, 2100},
            {{40, 5}, 2000},
        },
        120, 120, 30, 2, 2000);
}

FaultSpec drain_node(NodeId target, Tick at, double frac = 0.19) {
    FaultSpec f;
    f.kind = FaultSpec::Kind::EnergyDrain;
    f.to_fraction = frac;
    f.at = at;
    f.selector = FaultSpec::Selector::Explicit;
    f.target = target;
    return f;
}

FaultSpec kill_node(NodeId target, Tick at) {
    FaultSpec f;
    f.kind = FaultSpec::Kind::SuddenDeath;
    f.at = at;
    f.selector = FaultSpec::Selector::Explicit;
    f.target = target;
    return f;
}

long sends_of(const RunResult& r, const char* kind) {
    auto it = r.metrics.sends_by_kind.find(kind);
    return it == r.metrics.sends_by_kind.end() ? 0 : it->second;
}

Tick first_send_tick(const RunResult& r, MsgKind k) {
    for (const auto& t : r.trace)
        if (t.ev == TraceRecord::Ev::Send && t.kind == k) return t.tick;
    return -1;
}

} // namespace

TEST_CASE("deployment assigns roles, peers and the base station") {
    auto dep = two_cell_world();
    REQUIRE(dep.nodes.size() == 6);
    CHECK(dep.nodes[0].role == Role::CellManager);
    CHECK(dep.nodes[1].role == Role::SecondaryCellManager);
    CHECK(dep.nodes[2].role == Role::CommonNode);
    CHECK(dep.nodes[3].role == Role::GroupManager);
    CHECK(dep.nodes[4].role == Role::SecondaryCellManager);
    CHECK(dep.nodes[5].role == Role::BaseStation);
    CHECK(dep.grid.cells[0].manager == 0);
    CHECK(dep.grid.cells[0].secondary == 1);
    CHECK(dep.groups[0].group_manager == 3);
    CHECK(dep.groups[0].backup == 0);
    CHECK(dep.nodes[2].mgr == 0);
    CHECK(dep.nodes[2].gm == 3);
}

TEST_CASE("seeded deployment is deterministic and well-formed") {
    auto a = make_deployment(60, 120, 120, 30, 2, 2000, 42);
    auto b = make_deployment(60, 120, 120, 30, 2, 2000, 42);
    REQUIRE(a.nodes.size() == b.nodes.size());
    for (size_t i = 0; i < a.nodes.size(); i++) {
        CHECK(a.nodes[i].pos.x == b.nodes[i].pos.x);
        CHECK(a.nodes[i].role == b.nodes[i].role);
    }
    for (const auto& c : a.grid.cells) {
        if (c.members.empty()) {
            CHECK(c.manager == kNoNode);
        } else {
            CHECK(c.members.count(c.manager) == 1);
        }
    }
    int gms = 0;
    for (const auto& n : a.nodes)
        if (n.role == Role::GroupManager) gms++;
    int populated_groups = 0;
    for (const auto& g : a.groups) {
        bool any = false;
        for (int c : g.cell_ids)
            if (!a.grid.cells[size_t(c)].members.empty()) any = true;
        if (any) populated_groups++;
    }
    CHECK(gms == populated_groups);
}

TEST_CASE("election winner requires the high-energy rank") {
    std::map<NodeId, double> initial = {{1, 2000}, {2, 2000}, {3, 2000}};
    std::map<NodeId, double> shares = {{1, 900}, {2, 999}, {3, 400}};
    CHECK(!election_winner(shares, initial, 0.5).has_value()); // everyone below 50%
    shares[1] = 1000;                                          // exactly 50% qualifies
    CHECK(election_winner(shares, initial, 0.5) == 1);
    shares[2] = 1000; // tie at 1000 -> lowest id
    CHECK(election_winner(shares, initial, 0.5) == 1);
    shares[2] = 1500;
    CHECK(election_winner(shares, initial, 0.5) == 2);
}

TEST_CASE("merge target prefers healthy neighbors, then any group cell") {
    CellGrid g = build_grid(120, 120, 30);
    GroupRecord grp;
    grp.group_id = 0;
    grp.cell_ids = {0, 1, 4, 5};
    g.cells[1].members = {9};
    g.cells[4].members = {10};
    g.cells[5].members = {11};
    std::map<int, HealthStatus> health = {{1, HealthStatus::Low}, {4, HealthStatus::Medium}};
    // neighbor 1 is Low -> neighbor 4 wins
    CHECK(choose_merge_target(g, grp, 0, health) == 4);
    health[4] = HealthStatus::Low;
    // both neighbors Low -> fall back to any usable group cell (5)
    CHECK(choose_merge_target(g, grp, 0, health) == 5);
    health[5] = HealthStatus::Low;
    CHECK(choose_merge_target(g, grp, 0, health) == -1);
    // unknown health counts as usable, High beats unknown-Medium
    std::map<int, HealthStatus> h2 = {{4, HealthStatus::High}};
    CHECK(choose_merge_target(g, grp, 0, h2) == 4);
}

TEST_CASE("cell manager energy handover is one message and one round") {
    auto dep = two_cell_world();
    CellularDriver drv;
    SimConfig cfg;
    cfg.max_ticks = 25;
    Engine eng(cfg, dep.grid, dep.groups, dep.nodes, drv);
    auto res = eng.run({drain_node(0, 5)});
    CHECK(res.metrics.recovery_messages == 1);
    CHECK(res.metrics.recovery_rounds == 1);
    CHECK(sends_of(res, "low_energy_notice") == 1);
    CHECK(res.metrics.detected_tick == 5);
    CHECK(res.metrics.recovered_tick == 6);
    CHECK(eng.node(0).role == Role::CommonNode);
    CHECK(eng.node(1).role == Role::CellManager);
    CHECK(eng.grid.cells[0].manager == 1);
    // the old manager keeps participating as a member afterwards
    CHECK(eng.node(0).status == NodeStatus::Active);
}

TEST_CASE("exhausted common node sends exactly one report and sleeps") {
    auto dep = two_cell_world();
    CellularDriver drv;
    SimConfig cfg;
    cfg.max_ticks = 40;
    Engine eng(cfg, dep.grid, dep.groups, dep.nodes, drv);
    auto res = eng.run({drain_node(2, 5)});
    CHECK(res.metrics.msgs_from_target_after_fault == 1);
    CHECK(sends_of(res, "sleep_notice") == 1);
    CHECK(res.metrics.recovery_messages == 0);
    CHECK(res.metrics.detected_tick == 6); // the manager processes the report
    CHECK(eng.node(2).status == NodeStatus::Sleeping);
    CHECK(drv.ledger(0).expected.count(2) == 0);
    // no status queries chase the sleeping node in later rounds
    CHECK(sends_of(res, "status_query") == 0);
}

TEST_CASE("silent cell manager: reminder, second-cycle declaration, promotion") {
    auto dep = two_cell_world();
    CellularDriver drv;
    SimConfig cfg;
    cfg.max_ticks = 100;
    Engine eng(cfg, dep.grid, dep.groups, dep.nodes, drv);
    auto res = eng.run({kill_node(0, 5)});
    Tick reminder = first_send_tick(res, MsgKind::Reminder);
    Tick declare = first_send_tick(res, MsgKind::DeclareFaulty);
    CHECK(reminder == 33); // first missed report cycle
    CHECK(declare == 63);  // second missed cycle
    CHECK(res.metrics.detected_tick == 63);
    CHECK(res.metrics.recovered_tick == 64);
    CHECK(eng.node(1).role == Role::CellManager);
    // two-cycle bound: declared within 2 out-cell periods + query timeout
    Tick first_missed = 30;
    CHECK(res.metrics.detected_tick <= first_missed + 2 * 30 + 2);
    // promotion happened after the declaration
    bool promoted_after = false;
    for (const auto& rc : res.roles)
        if (rc.node == 1 && rc.new_role == Role::CellManager && rc.tick >= declare)
            promoted_after = true;
    CHECK(promoted_after);
}

TEST_CASE("base station detects a dead group manager and activates the backup") {
    auto dep = two_cell_world();
    CellularDriver drv;
    SimConfig cfg;
    cfg.max_ticks = 60;
    Engine eng(cfg, dep.grid, dep.groups, dep.nodes, drv);
    auto res = eng.run({kill_node(3, 5)});
    CHECK(res.metrics.detected_tick == 38); // watch at 35, query timeout, declare
    CHECK(res.metrics.recovered_tick == 39);
    CHECK(eng.node(0).role == Role::GroupManager); // the recorded backup stood up
    CHECK(eng.groups[0].group_manager == 0);
    CHECK(sends_of(res, "backup_activate") == 1);
    CHECK(eng.node(4).role == Role::CellManager); // cell 1 also lost its manager
}

TEST_CASE("group manager rate-directs a low-health cell") {
    // cell 0 drifts to Low mean energy while its manager stays operational
    auto dep = two_cell_world(420, 380, 380);
    CellularDriver drv;
    SimConfig cfg;
    cfg.max_ticks = 70;
    Engine eng(cfg, dep.grid, dep.groups, dep.nodes, drv);
    auto res = eng.run({});
    CHECK(sends_of(res, "rate_directive") == 1); // proactive action fires once
    CHECK(drv.preference(0, 0) == 2);            // cell avoided for new load
    // the reporting period doubled: rounds at 10..40, then 60 (none at 50)
    std::vector<Tick> gets;
    for (const auto& t : res.trace)
        if (t.ev == TraceRecord::Ev::Send && t.kind == MsgKind::Get && t.cell == 0)
            gets.push_back(t.tick);
    CHECK(std::count(gets.begin(), gets.end(), 50) == 0);
    CHECK(std::count(gets.begin(), gets.end(), 60) == 1);
}

TEST_CASE("failed election escalates to a merge directed by the group manager") {
    // secondary and members all below the high threshold -> no electable manager
    auto dep = two_cell_world(2000, 400, 380);
    CellularDriver drv;
    SimConfig cfg;
    cfg.max_ticks = 20;
    Engine eng(cfg, dep.grid, dep.groups, dep.nodes, drv);
    auto res = eng.run({drain_node(0, 5)});
    CHECK(sends_of(res, "energy_share") >= 2);
    CHECK(sends_of(res, "merge_request") == 1);
    CHECK(sends_of(res, "merge_directive") == 3);
    CHECK(eng.node(0).cell_id == 1);
    CHECK(eng.node(1).cell_id == 1);
    CHECK(eng.node(2).cell_id == 1);
    CHECK(eng.grid.cells[0].retired);
    CHECK(eng.grid.cells[0].members.empty());
    CHECK(eng.grid.cells[1].members.size() == 5);
    CHECK(drv.ledger(1).expected.count(2) == 1);
}

TEST_CASE("promotion fallback elects a manager when the secondary is dead") {
    auto dep = two_cell_world();
    CellularDriver drv;
    SimConfig cfg;
    cfg.max_ticks = 90;
    Engine eng(cfg, dep.grid, dep.groups, dep.nodes, drv);
    auto res = eng.run({kill_node(0, 5), kill_node(1, 5)});
    CHECK(eng.node(2).role == Role::CellManager);
    CHECK(eng.grid.cells[0].manager == 2);
    CHECK(sends_of(res, "new_manager_announce") == 1);
}

TEST_CASE("wake_sleeping revives the highest-energy sleepers first") {
    auto dep = two_cell_world();
    CellularDriver drv;
    SimConfig cfg;
    Engine eng(cfg, dep.grid, dep.groups, dep.nodes, drv);
    eng.node(1).battery.residual_mj = 900;
    eng.node(2).battery.residual_mj = 1100;
    eng.set_status(1, NodeStatus::Sleeping, "test");
    eng.set_status(2, NodeStatus::Sleeping, "test");
    auto woken = wake_sleeping(eng, 0, 1);
    REQUIRE(woken.size() == 1);
    CHECK(woken[0] == 2); // higher residual wins
    CHECK(eng.node(2).status == NodeStatus::Active);
    CHECK(eng.node(1).status == NodeStatus::Sleeping);
}
