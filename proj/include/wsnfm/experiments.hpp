#pragma once

#include <map>
#include <string>
#include <vector>

#include "wsnfm/baselines.hpp"
#include "wsnfm/protocol.hpp"

namespace wsnfm {

enum class Algorithm { Cellular, Venkataraman, Lbc, Aso };

const char* to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s); // throws std::invalid_argument

struct ExperimentConfig {
    int node_count = 60;
    double area_w = 120;
    double area_h = 120;
    double cell_side = 30;
    int group_dim = 2;
    double initial_energy_mj = 2000;
    int replications = 30;
    Algorithm algorithm = Algorithm::Cellular;
    std::string scenario_name = "cluster-head-failure";
    Tick fault_at = 50;
    Timers timers;
    RadioParams radio;
    EnergyThresholds thresholds;
    DeliveryModel delivery;
    double radio_range = 30;
    Tick max_ticks = 150;
    std::uint64_t seed_base = 1;

    void validate() const; // throws std::invalid_argument
};

// Named fault scripts mirroring the studied failure modes.
std::vector<FaultSpec> scenario(const std::string& name, Tick at = 50);

// One seeded replication: deployment, driver, run. seed = seed_base + replicate.
RunResult run_single(const ExperimentConfig& cfg, int node_count, Algorithm alg, int replicate);

struct SweepConfig {
    ExperimentConfig base;
    std::vector<int> node_counts{40, 50, 60, 70, 80};
    std::vector<Algorithm> algorithms{Algorithm::Cellular, Algorithm::Venkataraman};
};

struct AggregateRow {
    int node_count = 0;
    Algorithm algorithm = Algorithm::Cellular;
    std::string metric;
    double mean = 0;
    double stdev = 0;
    int replications = 0;
    std::uint64_t seed_base = 0;
};

// Metric names aggregated per (node_count, algorithm), in emission order.
const std::vector<std::string>& sweep_metrics();

// Serial reference implementation.
std::vector<AggregateRow> run_sweep(const SweepConfig& cfg);
// OpenMP over replications; identical rows to run_sweep.
std::vector<AggregateRow> run_sweep_parallel(const SweepConfig& cfg);

std::string render_csv(const std::vector<AggregateRow>& rows);
void emit_csv(const std::vector<AggregateRow>& rows, const std::string& path);

// Flat `key = value` config text; '#' starts a comment. Later keys win.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> parse_config_file(const std::string& path);

} // namespace wsnfm
