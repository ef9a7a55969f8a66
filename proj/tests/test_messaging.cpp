#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "wsnfm/messaging.hpp"

using namespace wsnfm;

namespace {
Envelope env_of(NodeId sender, int group, int cell, MsgKind kind, Tick t) {
    Payload p;
    p.kind = kind;
    return make_envelope(sender, group, cell, 1000, p, t);
}
} // namespace

TEST_CASE("group check precedes cell check") {
    SeenSet seen;
    Envelope e = env_of(7, 2, 9, MsgKind::Get, 5);
    // wrong group AND wrong cell: the group verdict wins
    CHECK(filter_message(1, 3, seen, e) == FilterDecision::DropForeignGroup);
    // right group, wrong cell
    CHECK(filter_message(2, 3, seen, e) == FilterDecision::DropForeignCell);
    // right group and cell
    CHECK(filter_message(2, 9, seen, e) == FilterDecision::Process);
}

TEST_CASE("group-scoped messages skip the cell check") {
    SeenSet seen;
    Envelope e = env_of(7, 2, 9, MsgKind::HealthReport, 5);
    e.group_scope = true;
    CHECK(filter_message(2, 3, seen, e) == FilterDecision::Process);
    SeenSet seen2;
    CHECK(filter_message(1, 9, seen2, e) == FilterDecision::DropForeignGroup);
}

TEST_CASE("base-station traffic bypasses scope checks") {
    SeenSet seen;
    Envelope e = env_of(99, -1, -1, MsgKind::StatusQuery, 5);
    e.bs_link = true;
    CHECK(filter_message(2, 9, seen, e) == FilterDecision::Process);
}

TEST_CASE("duplicates are dropped after the first processing") {
    SeenSet seen;
    Envelope e = env_of(7, 2, 9, MsgKind::Update, 5);
    CHECK(filter_message(2, 9, seen, e) == FilterDecision::Process);
    CHECK(filter_message(2, 9, seen, e) == FilterDecision::DropDuplicate);
    // same sender and timestamp but different kind is a different message
    Envelope e2 = env_of(7, 2, 9, MsgKind::Ack, 5);
    CHECK(filter_message(2, 9, seen, e2) == FilterDecision::Process);
    // same kind, later timestamp
    Envelope e3 = env_of(7, 2, 9, MsgKind::Update, 6);
    CHECK(filter_message(2, 9, seen, e3) == FilterDecision::Process);
}

TEST_CASE("out-of-scope messages are not recorded as seen") {
    SeenSet seen;
    Envelope e = env_of(7, 2, 9, MsgKind::Update, 5);
    CHECK(filter_message(1, 9, seen, e) == FilterDecision::DropForeignGroup);
    CHECK(!seen.contains(e.msg_id()));
    CHECK(filter_message(2, 9, seen, e) == FilterDecision::Process);
    CHECK(seen.contains(e.msg_id()));
}

TEST_CASE("envelope carries the table-1 fields and supports cell overrides") {
    Payload p;
    p.kind = MsgKind::DeclareFaulty;
    p.subject = 42;
    Envelope e = make_envelope(7, 2, 9, 1234.5, p, 77);
    CHECK(e.sender == 7);
    CHECK(e.group_id == 2);
    CHECK(e.cell_id == 9);
    CHECK(e.timestamp == 77);
    CHECK(e.curr_energy == doctest::Approx(1234.5));
    CHECK(e.msg_id() == MsgId{7, 77, MsgKind::DeclareFaulty});
    Envelope o = make_envelope(7, 2, 9, 1234.5, p, 77, 3);
    CHECK(o.cell_id == 3); // cross-cell directive stamps the target cell
}

TEST_CASE("message kind names are stable") {
    CHECK(std::string(to_string(MsgKind::FinalHead)) == "final_ch");
    CHECK(std::string(to_string(MsgKind::LowEnergyNotice)) == "low_energy_notice");
    CHECK(std::string(to_string(MsgKind::Get)) == "get");
}
