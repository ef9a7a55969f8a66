#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "wsnfm/experiments.hpp"

namespace {

void parse_area(const std::string& s, double& w, double& h) {
    auto x = s.find('x');
    if (x == std::string::npos) x = s.find('X');
    if (x == std::string::npos) throw CLI::ValidationError("--area", "expected WxH, got " + s);
    w = std::stod(s.substr(0, x));
    h = std::stod(s.substr(x + 1));
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << content;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cell-based WSN fault management simulator"};

    std::string config_path, area = "120x120", algorithm = "cellular",
                scenario_name = "cluster-head-failure", out_path = "results.csv", trace_path;
    int nodes = 60, group_dim = 2, replications = 30;
    double cell_side = 30, loss = 0;
    long latency = 1;
    std::uint64_t seed = 1;

    app.add_option("--config", config_path, "flat key = value config file; flags override");
    auto* o_nodes = app.add_option("--nodes", nodes, "number of sensor nodes");
    auto* o_area = app.add_option("--area", area, "deployment area WxH in meters");
    auto* o_cell = app.add_option("--cell-side", cell_side, "cell side length in meters");
    auto* o_gdim = app.add_option("--group-dim", group_dim, "cells per group side");
    auto* o_alg = app.add_option("--algorithm", algorithm, "cellular|venkataraman|lbc|aso");
    auto* o_scen = app.add_option("--scenario", scenario_name, "fault scenario name");
    auto* o_reps = app.add_option("--replications", replications, "seeded replications");
    auto* o_seed = app.add_option("--seed", seed, "base seed");
    auto* o_out = app.add_option("--out", out_path, "aggregated results CSV path");
    auto* o_loss = app.add_option("--loss", loss, "message loss probability");
    auto* o_lat = app.add_option("--latency", latency, "delivery latency in ticks");
    auto* o_trace = app.add_option("--trace", trace_path, "write replicate-0 trace CSV here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) {
            auto kv = wsnfm::parse_config_file(config_path);
            auto take = [&](const char* key, const CLI::Option* opt, auto& slot) {
                auto it = kv.find(key);
                if (it == kv.end() || opt->count() > 0) return; // flags override the file
                std::istringstream(it->second) >> slot;
            };
            take("nodes", o_nodes, nodes);
            take("area", o_area, area);
            take("cell-side", o_cell, cell_side);
            take("group-dim", o_gdim, group_dim);
            take("algorithm", o_alg, algorithm);
            take("scenario", o_scen, scenario_name);
            take("replications", o_reps, replications);
            take("seed", o_seed, seed);
            take("out", o_out, out_path);
            take("loss", o_loss, loss);
            take("latency", o_lat, latency);
            take("trace", o_trace, trace_path);
        }

        wsnfm::ExperimentConfig cfg;
        parse_area(area, cfg.area_w, cfg.area_h);
        cfg.node_count = nodes;
        cfg.cell_side = cell_side;
        cfg.group_dim = group_dim;
        cfg.replications = replications;
        cfg.algorithm = wsnfm::parse_algorithm(algorithm);
        cfg.scenario_name = scenario_name;
        cfg.delivery.loss_probability = loss;
        cfg.delivery.latency = latency;
        cfg.seed_base = seed;
        cfg.validate();

        wsnfm::SweepConfig sweep;
        sweep.base = cfg;
        sweep.node_counts = {nodes};
        sweep.algorithms = {cfg.algorithm};
        auto rows = wsnfm::run_sweep_parallel(sweep);
        wsnfm::emit_csv(rows, out_path);
        std::cout << "wrote " << rows.size() << " aggregate rows to " << out_path << "\n";

        if (!trace_path.empty()) {
            auto result = wsnfm::run_single(cfg, nodes, cfg.algorithm, 0);
            write_file(trace_path, wsnfm::render_trace_csv(result.trace));
            write_file(trace_path + ".roles", wsnfm::render_roles_csv(result.roles));
            std::cout << "wrote trace (" << result.trace.size() << " records) to " << trace_path
                      << " and role log to " << trace_path << ".roles\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
