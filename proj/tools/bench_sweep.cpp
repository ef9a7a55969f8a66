// Benchmarks the replication sweep: serial reference vs the OpenMP variant,
// and checks that both produce identical aggregates.
#include <chrono>
#include <iostream>

#include "CLI11.hpp"
#include "wsnfm/experiments.hpp"

using Clock = std::chrono::steady_clock;

static double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int main(int argc, char** argv) {
    CLI::App app{"Replication sweep benchmark: serial vs OpenMP"};
    int replications = 30;
    std::string scenario_name = "cluster-head-failure";
    app.add_option("--replications", replications, "replications per (n, algorithm)");
    app.add_option("--scenario", scenario_name, "fault scenario name");
    CLI11_PARSE(app, argc, argv);

    wsnfm::SweepConfig cfg;
    cfg.base.replications = replications;
    cfg.base.scenario_name = scenario_name;
    cfg.algorithms = {wsnfm::Algorithm::Cellular, wsnfm::Algorithm::Venkataraman,
                      wsnfm::Algorithm::Lbc, wsnfm::Algorithm::Aso};

    try {
        auto t0 = Clock::now();
        auto serial = wsnfm::run_sweep(cfg);
        double ts = seconds_since(t0);

        t0 = Clock::now();
        auto parallel = wsnfm::run_sweep_parallel(cfg);
        double tp = seconds_since(t0);

        bool same = wsnfm::render_csv(serial) == wsnfm::render_csv(parallel);
        std::cout << "jobs: " << cfg.node_counts.size() * cfg.algorithms.size() << " x "
                  << replications << " replications\n"
                  << "serial:   " << ts << " s\n"
                  << "parallel: " << tp << " s (speedup " << (tp > 0 ? ts / tp : 0) << "x)\n"
                  << "results identical: " << (same ? "yes" : "NO") << "\n";
        return same ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
