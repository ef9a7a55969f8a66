#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

namespace wsnfm {

// First-order radio model. Costs are returned in mJ.
struct RadioParams {
    double elec_nj_per_bit = 50.0;   // electronics, nJ/bit
    double amp_pj_per_bit_m2 = 100.0; // amplifier, pJ/bit/m^2
    long message_bits = 2000;        // one protocol message
};

struct EnergyThresholds {
    double low = 0.20;  // <= low  -> Low rank (inclusive)
    double high = 0.50; // >= high -> High rank (inclusive)
};

enum class EnergyRank { Low, Medium, High };
enum class HealthStatus { High, Medium, Low };

const char* to_string(EnergyRank r);
const char* to_string(HealthStatus h);

struct Battery {
    double initial_mj = 0;
    double residual_mj = 0;

    double fraction() const { return initial_mj > 0 ? residual_mj / initial_mj : 0.0; }
    bool exhausted() const { return residual_mj <= 0.0; }
};

double tx_cost_mj(const RadioParams& p, long bits, double distance_m);
double rx_cost_mj(const RadioParams& p, long bits);

// Saturating: residual never goes below zero.
Battery drain(Battery b, double amount_mj);

EnergyRank classify_rank(const Battery& b, const EnergyThresholds& t = {});

// Mean member fraction mapped through the same low/high thresholds.
HealthStatus cell_health(std::span<const Battery> members, const EnergyThresholds& t = {});

} // namespace wsnfm
