#include "wsnfm/energy.hpp"

#include <algorithm>

namespace wsnfm {

const char* to_string(EnergyRank r) {
    switch (r) {
        case EnergyRank::Low: return "low";
        case EnergyRank::Medium: return "medium";
        case EnergyRank::High: return "high";
    }
    return "?";
}

const char* to_string(HealthStatus h) {
    switch (h) {
        case HealthStatus::High: return "high";
        case HealthStatus::Medium: return "medium";
        case HealthStatus::Low: return "low";
    }
    return "?";
}

double tx_cost_mj(const RadioParams& p, long bits, double distance_m) {
    if (bits < 0 || distance_m < 0)
        throw std::invalid_argument("tx_cost: negative bits or distance");
    // nJ -> mJ: 1e-6, pJ -> mJ: 1e-9
    return static_cast<double>(bits) * p.elec_nj_per_bit * 1e-6 +
           static_cast<double>(bits) * p.amp_pj_per_bit_m2 * 1e-9 * distance_m * distance_m;
}

double rx_cost_mj(const RadioParams& p, long bits) {
    if (bits < 0)
        throw std::invalid_argument("rx_cost: negative bits");
    return static_cast<double>(bits) * p.elec_nj_per_bit * 1e-6;
}

Battery drain(Battery b, double amount_mj) {
    if (amount_mj < 0)
        throw std::invalid_argument("drain: negative amount");
    b.residual_mj = std::max(0.0, b.residual_mj - amount_mj);
    return b;
}

EnergyRank classify_rank(const Battery& b, const EnergyThresholds& t) {
    if (b.initial_mj <= 0)
        throw std::invalid_argument("classify_rank: battery with no capacity");
    double f = b.fraction();
    if (f <= t.low) return EnergyRank::Low;
    if (f >= t.high) return EnergyRank::High;
    return EnergyRank::Medium;
}

HealthStatus cell_health(std::span<const Battery> members, const EnergyThresholds& t) {
    if (members.empty())
        throw std::invalid_argument("cell_health: no members");
    double sum = 0;
    for (const auto& b : members) sum += b.fraction();
    double mean = sum / static_cast<double>(members.size());
    if (mean <= t.low) return HealthStatus::Low;
    if (mean >= t.high) return HealthStatus::High;
    return HealthStatus::Medium;
}

} // namespace wsnfm
