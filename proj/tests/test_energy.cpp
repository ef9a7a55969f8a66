#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "wsnfm/energy.hpp"

using namespace wsnfm;

TEST_CASE("first-order radio costs") {
    RadioParams p; // 50 nJ/bit electronics, 100 pJ/bit/m^2 amplifier, 2000-bit messages
    CHECK(rx_cost_mj(p, p.message_bits) == doctest::Approx(0.1));
    CHECK(tx_cost_mj(p, p.message_bits, 0) == doctest::Approx(0.1));
    CHECK(tx_cost_mj(p, p.message_bits, 10) == doctest::Approx(0.12));
    CHECK(tx_cost_mj(p, p.message_bits, 30) == doctest::Approx(0.28));
    // quadratic in distance: doubling d quadruples the amplifier term
    double amp10 = tx_cost_mj(p, p.message_bits, 10) - tx_cost_mj(p, p.message_bits, 0);
    double amp20 = tx_cost_mj(p, p.message_bits, 20) - tx_cost_mj(p, p.message_bits, 0);
    CHECK(amp20 == doctest::Approx(4 * amp10));
}

TEST_CASE("radio cost input validation") {
    RadioParams p;
    CHECK_THROWS_AS(tx_cost_mj(p, -1, 10), std::invalid_argument);
    CHECK_THROWS_AS(tx_cost_mj(p, 2000, -1), std::invalid_argument);
    CHECK_THROWS_AS(rx_cost_mj(p, -1), std::invalid_argument);
}

TEST_CASE("drain saturates at zero") {
    Battery b{100, 30};
    b = drain(b, 10);
    CHECK(b.residual_mj == doctest::Approx(20));
    b = drain(b, 50);
    CHECK(b.residual_mj == 0);
    CHECK(b.exhausted());
}

TEST_CASE("rank thresholds are inclusive at both boundaries") {
    EnergyThresholds t;
    CHECK(classify_rank(Battery{2000, 400}, t) == EnergyRank::Low);     // exactly 20%
    CHECK(classify_rank(Battery{2000, 400.01}, t) == EnergyRank::Medium);
    CHECK(classify_rank(Battery{2000, 999.99}, t) == EnergyRank::Medium);
    CHECK(classify_rank(Battery{2000, 1000}, t) == EnergyRank::High);   // exactly 50%
    CHECK(classify_rank(Battery{2000, 2000}, t) == EnergyRank::High);
    CHECK(classify_rank(Battery{2000, 0}, t) == EnergyRank::Low);
    CHECK_THROWS_AS(classify_rank(Battery{0, 0}, t), std::invalid_argument);
}

TEST_CASE("cell health is the mean member fraction through the same thresholds") {
    EnergyThresholds t;
    std::vector<Battery> high = {{100, 80}, {100, 60}};
    CHECK(cell_health(high, t) == HealthStatus::High); // mean 0.7
    std::vector<Battery> mid = {{100, 80}, {100, 10}}; // mean 0.45
    CHECK(cell_health(mid, t) == HealthStatus::Medium);
    std::vector<Battery> low = {{100, 20}, {100, 20}}; // mean 0.20 -> inclusive Low
    CHECK(cell_health(low, t) == HealthStatus::Low);
    std::vector<Battery> boundary = {{100, 50}, {100, 50}}; // mean 0.50 -> inclusive High
    CHECK(cell_health(boundary, t) == HealthStatus::High);
}
