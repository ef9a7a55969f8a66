#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <functional>

#include "wsnfm/engine.hpp"
#include "wsnfm/protocol.hpp"

using namespace wsnfm;

namespace {

struct ScriptDriver : Driver {
    std::function<void(Engine&)> on_init;
    std::function<void(Engine&, const TimerFire&)> on_timer_fn;
    std::vector<std::pair<NodeId, Envelope>> delivered;

    void init(Engine& e) override {
        if (on_init) on_init(e);
    }
    void on_timer(Engine& e, const TimerFire& t) override {
        if (on_timer_fn) on_timer_fn(e, t);
    }
    void on_deliver(Engine&, NodeId r, const Envelope& env) override {
        delivered.emplace_back(r, env);
    }
    void on_rank_low(Engine&, NodeId) override {}
    std::vector<NodeId> eligible_targets(const Engine& eng, FaultSpec::Selector,
                                         int) const override {
        std::vector<NodeId> out;
        for (const auto& n : eng.nodes)
            if (!eng.is_bs(n.id) && n.active()) out.push_back(n.id);
        return out;
    }
};

// three nodes in cell 0, ten meters apart, plus the base station
Deployment small_world() {
    return make_deployment_explicit({{{0, 0}, 2000}, {{10, 0}, 2000}, {{0, 10}, 2000}},
                                    120, 120, 30, 2, 2000);
}

SimConfig quiet_config() {
    SimConfig cfg;
    cfg.max_ticks = 20;
    return cfg;
}

long count_events(const std::vector<TraceRecord>& trace, TraceRecord::Ev ev) {
    long n = 0;
    for (const auto& r : trace)
        if (r.ev == ev) n++;
    return n;
}

} // namespace

TEST_CASE("broadcast is one send record with one tx charge and per-receiver delivers") {
    auto dep = small_world();
    ScriptDriver drv;
    drv.on_init = [](Engine& e) {
        Payload p;
        p.kind = MsgKind::Get;
        e.send(0, Dest::cell_cast(0), p);
    };
    Engine eng(quiet_config(), dep.grid, dep.groups, dep.nodes, drv);
    auto res = eng.run({});
    CHECK(count_events(res.trace, TraceRecord::Ev::Send) == 1);
    CHECK(count_events(res.trace, TraceRecord::Ev::Deliver) == 2);
    // tx once at radio range (0.28), no matter how many receivers
    CHECK(eng.charged_mj(0) == doctest::Approx(0.28));
    CHECK(eng.charged_mj(1) == doctest::Approx(0.1)); // rx only
    CHECK(eng.charged_mj(2) == doctest::Approx(0.1));
}

TEST_CASE("unicast is charged at the actual distance") {
    auto dep = small_world();
    ScriptDriver drv;
    drv.on_init = [](Engine& e) {
        Payload p;
        p.kind = MsgKind::Update;
        e.send(0, Dest::unicast(1), p); // 10 m apart
    };
    Engine eng(quiet_config(), dep.grid, dep.groups, dep.nodes, drv);
    eng.run({});
    CHECK(eng.charged_mj(0) == doctest::Approx(0.12));
    CHECK(eng.charged_mj(1) == doctest::Approx(0.1));
}

TEST_CASE("delivery to dead and sleeping nodes is dropped without an rx charge") {
    auto dep = small_world();
    ScriptDriver drv;
    drv.on_init = [](Engine& e) {
        e.set_status(1, NodeStatus::Dead, "test");
        e.set_status(2, NodeStatus::Sleeping, "test");
        Payload p;
        p.kind = MsgKind::Get;
        e.send(0, Dest::cell_cast(0), p);
    };
    Engine eng(quiet_config(), dep.grid, dep.groups, dep.nodes, drv);
    auto res = eng.run({});
    CHECK(count_events(res.trace, TraceRecord::Ev::DropDead) == 1);
    CHECK(count_events(res.trace, TraceRecord::Ev::DropSleeping) == 1);
    CHECK(count_events(res.trace, TraceRecord::Ev::Deliver) == 0);
    CHECK(eng.charged_mj(1) == 0);
    CHECK(eng.charged_mj(2) == 0);
    CHECK(drv.delivered.empty());
}

TEST_CASE("sends from non-active nodes are rejected") {
    auto dep = small_world();
    ScriptDriver drv;
    Engine eng(quiet_config(), dep.grid, dep.groups, dep.nodes, drv);
    eng.set_status(1, NodeStatus::Sleeping, "test");
    Payload p;
    p.kind = MsgKind::Update;
    CHECK_THROWS_AS(eng.send(1, Dest::unicast(0), p), std::runtime_error);
}

TEST_CASE("dead nodes stay dead") {
    auto dep = small_world();
    ScriptDriver drv;
    Engine eng(quiet_config(), dep.grid, dep.groups, dep.nodes, drv);
    eng.set_status(1, NodeStatus::Dead, "test");
    CHECK_THROWS_AS(eng.set_status(1, NodeStatus::Active, "revive"), std::runtime_error);
}

TEST_CASE("role uniqueness is asserted after every event") {
    auto dep = small_world();
    ScriptDriver drv;
    drv.on_init = [](Engine& e) {
        e.change_role(1, Role::CellManager, "test"); // cell 0 already has manager 0
    };
    Engine eng(quiet_config(), dep.grid, dep.groups, dep.nodes, drv);
    CHECK_THROWS_AS(eng.run({}), std::runtime_error);
}

TEST_CASE("same seed reproduces the trace byte-for-byte under loss") {
    auto run_once = [] {
        auto dep = small_world();
        ScriptDriver drv;
        drv.on_init = [](Engine& e) { e.set_timer(1, 1); };
        drv.on_timer_fn = [](Engine& e, const TimerFire&) {
            Payload p;
            p.kind = MsgKind::Get;
            e.send(0, Dest::cell_cast(0), p);
            if (e.now() < 15) e.set_timer(e.now() + 1, 1);
        };
        SimConfig cfg = quiet_config();
        cfg.delivery.loss_probability = 0.4;
        cfg.seed = 99;
        Engine eng(cfg, dep.grid, dep.groups, dep.nodes, drv);
        return render_trace_csv(eng.run({}).trace);
    };
    auto a = run_once();
    auto b = run_once();
    CHECK(a == b);
    CHECK(a.find("drop-loss") != std::string::npos); // loss model actually exercised
}

TEST_CASE("energy conservation: applied charges equal initial minus residual") {
    auto dep = small_world();
    ScriptDriver drv;
    drv.on_init = [](Engine& e) { e.set_timer(1, 1); };
    drv.on_timer_fn = [](Engine& e, const TimerFire&) {
        Payload p;
        p.kind = MsgKind::Update;
        e.send(2, Dest::cell_cast(0), p);
        if (e.now() < 12) e.set_timer(e.now() + 1, 1);
    };
    SimConfig cfg = quiet_config();
    cfg.delivery.loss_probability = 0.3;
    Engine eng(cfg, dep.grid, dep.groups, dep.nodes, drv);
    FaultSpec drain;
    drain.kind = FaultSpec::Kind::EnergyDrain;
    drain.to_fraction = 0.19;
    drain.at = 5;
    drain.selector = FaultSpec::Selector::Explicit;
    drain.target = 1;
    auto res = eng.run({drain});
    double charged = 0, spent = 0;
    for (const auto& n : eng.nodes) {
        if (eng.is_bs(n.id)) continue;
        charged += eng.charged_mj(n.id);
        spent += n.battery.initial_mj - n.battery.residual_mj;
    }
    CHECK(charged == doctest::Approx(spent).epsilon(1e-12));
    CHECK(charged == doctest::Approx(res.metrics.total_energy_mj).epsilon(1e-12));
}

TEST_CASE("sudden-death injection records fault metrics and silences the target") {
    auto dep = small_world();
    ScriptDriver drv;
    Engine eng(quiet_config(), dep.grid, dep.groups, dep.nodes, drv);
    FaultSpec f;
    f.kind = FaultSpec::Kind::SuddenDeath;
    f.at = 3;
    f.selector = FaultSpec::Selector::Explicit;
    f.target = 2;
    auto res = eng.run({f});
    CHECK(res.metrics.fault_target == 2);
    CHECK(res.metrics.fault_tick == 3);
    CHECK(res.metrics.msgs_from_target_after_fault == 0);
    CHECK(eng.node(2).status == NodeStatus::Dead);
}

TEST_CASE("seeded random target selection is deterministic") {
    auto pick = [](std::uint64_t seed) {
        auto dep = small_world();
        ScriptDriver drv;
        SimConfig cfg = quiet_config();
        cfg.seed = seed;
        Engine eng(cfg, dep.grid, dep.groups, dep.nodes, drv);
        FaultSpec f;
        f.kind = FaultSpec::Kind::SuddenDeath;
        f.at = 3;
        f.selector = FaultSpec::Selector::ACommonNode;
        return eng.run({f}).metrics.fault_target;
    };
    CHECK(pick(7) == pick(7));
}

TEST_CASE("trace and role logs render stable CSV") {
    std::vector<TraceRecord> tr = {
        {4, TraceRecord::Ev::Send, 1, kNoNode, MsgKind::Get, 0, 2, 1999.88, false}};
    CHECK(render_trace_csv(tr) ==
          "tick,event,sender,receiver,kind,group,cell,energy\n4,send,1,-1,get,0,2,1999.88\n");
    std::vector<RoleChange> rc = {{5, 3, Role::SecondaryCellManager, Role::CellManager, "standup"}};
    CHECK(render_roles_csv(rc) ==
          "tick,node,old_role,new_role,cause\n5,3,secondary,cell_manager,standup\n");
}
