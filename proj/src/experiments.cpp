#include "wsnfm/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace wsnfm {

const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Cellular: return "cellular";
        case Algorithm::Venkataraman: return "venkataraman";
        case Algorithm::Lbc: return "lbc";
        case Algorithm::Aso: return "aso";
    }
    return "?";
}

Algorithm parse_algorithm(const std::string& s) {
    if (s == "cellular") return Algorithm::Cellular;
    if (s == "venkataraman") return Algorithm::Venkataraman;
    if (s == "lbc") return Algorithm::Lbc;
    if (s == "aso") return Algorithm::Aso;
    throw std::invalid_argument("unknown algorithm: " + s);
}

void ExperimentConfig::validate() const {
    if (node_count < 1) throw std::invalid_argument("node_count must be positive");
    if (area_w <= 0 || area_h <= 0) throw std::invalid_argument("area must be positive");
    if (cell_side <= 0) throw std::invalid_argument("cell_side must be positive");
    if (group_dim < 1) throw std::invalid_argument("group_dim must be positive");
    if (initial_energy_mj <= 0) throw std::invalid_argument("initial_energy must be positive");
    if (replications < 1) throw std::invalid_argument("replications must be >= 1");
    if (!(thresholds.low < thresholds.high))
        throw std::invalid_argument("thresholds must satisfy low < high");
    if (timers.out_cell_period <= timers.in_cell_period)
        throw std::invalid_argument("out_cell_period must exceed in_cell_period");
    if (delivery.loss_probability < 0 || delivery.loss_probability > 1)
        throw std::invalid_argument("loss probability must be in [0,1]");
}

std::vector<FaultSpec> scenario(const std::string& name, Tick at) {
    FaultSpec f;
    f.at = at;
    if (name == "common-node-energy-exhaustion") {
        f.kind = FaultSpec::Kind::EnergyDrain;
        f.to_fraction = 0.19;
        f.selector = FaultSpec::Selector::ACommonNode;
    } else if (name == "cluster-head-failure") {
        f.kind = FaultSpec::Kind::EnergyDrain;
        f.to_fraction = 0.19;
        f.selector = FaultSpec::Selector::ACellManager;
    } else if (name == "cluster-head-sudden-death" || name == "re-clustering") {
        f.kind = FaultSpec::Kind::SuddenDeath;
        f.selector = FaultSpec::Selector::ACellManager;
    } else if (name == "group-manager-sudden-death") {
        f.kind = FaultSpec::Kind::SuddenDeath;
        f.selector = FaultSpec::Selector::TheGroupManager;
    } else {
        throw std::invalid_argument("unknown scenario: " + name);
    }
    return {f};
}

RunResult run_single(const ExperimentConfig& cfg, int node_count, Algorithm alg, int replicate) {
    cfg.validate();
    std::uint64_t seed = cfg.seed_base + static_cast<std::uint64_t>(replicate);
    Deployment dep = make_deployment(node_count, cfg.area_w, cfg.area_h, cfg.cell_side,
                                     cfg.group_dim, cfg.initial_energy_mj, seed);
    SimConfig sim;
    sim.radio = cfg.radio;
    sim.thresholds = cfg.thresholds;
    sim.delivery = cfg.delivery;
    sim.radio_range = cfg.radio_range;
    sim.max_ticks = cfg.max_ticks;
    sim.seed = seed;

    std::unique_ptr<Driver> driver;
    switch (alg) {
        case Algorithm::Cellular: {
            ProtocolConfig pc;
            pc.timers = cfg.timers;
            driver = std::make_unique<CellularDriver>(pc);
            break;
        }
        case Algorithm::Venkataraman: driver = std::make_unique<VenkDriver>(); break;
        case Algorithm::Lbc: driver = std::make_unique<LbcDriver>(); break;
        case Algorithm::Aso: driver = std::make_unique<AsoDriver>(); break;
    }
    Engine eng(sim, std::move(dep.grid), std::move(dep.groups), std::move(dep.nodes), *driver);
    try {
        return eng.run(scenario(cfg.scenario_name, cfg.fault_at));
    } catch (const std::exception& e) {
        throw std::runtime_error("run failed (seed=" + std::to_string(seed) +
                                 ", algorithm=" + to_string(alg) + "): " + e.what());
    }
}

const std::vector<std::string>& sweep_metrics() {
    static const std::vector<std::string> m = {
        "recovery_energy_mj",    "recovery_latency_ticks", "recovery_rounds",
        "detection_latency_ticks", "recovery_messages",      "total_energy_mj",
    };
    return m;
}

namespace {

double metric_value(const RunMetrics& m, const std::string& name) {
    if (name == "recovery_energy_mj") return m.recovery_energy_mj;
    if (name == "recovery_latency_ticks") return m.recovery_latency();
    if (name == "recovery_rounds") return static_cast<double>(m.recovery_rounds);
    if (name == "detection_latency_ticks") return m.detection_latency();
    if (name == "recovery_messages") return static_cast<double>(m.recovery_messages);
    if (name == "total_energy_mj") return m.total_energy_mj;
    throw std::invalid_argument("unknown metric: " + name);
}

std::vector<AggregateRow> aggregate(const SweepConfig& cfg,
                                    const std::vector<std::vector<RunMetrics>>& per_job) {
    std::vector<AggregateRow> rows;
    size_t job = 0;
    for (int n : cfg.node_counts) {
        for (Algorithm alg : cfg.algorithms) {
            const auto& runs = per_job[job++];
            for (const auto& metric : sweep_metrics()) {
                double sum = 0;
                for (const auto& m : runs) sum += metric_value(m, metric);
                double mean = sum / static_cast<double>(runs.size());
                double var = 0;
                for (const auto& m : runs) {
                    double d = metric_value(m, metric) - mean;
                    var += d * d;
                }
                double stdev =
                    runs.size() > 1 ? std::sqrt(var / static_cast<double>(runs.size() - 1)) : 0;
                rows.push_back({n, alg, metric, mean, stdev, static_cast<int>(runs.size()),
                                cfg.base.seed_base});
            }
        }
    }
    return rows;
}

} // namespace

std::vector<AggregateRow> run_sweep(const SweepConfig& cfg) {
    cfg.base.validate();
    size_t jobs = cfg.node_counts.size() * cfg.algorithms.size();
    std::vector<std::vector<RunMetrics>> per_job(jobs);
    size_t job = 0;
    for (int n : cfg.node_counts) {
        for (Algorithm alg : cfg.algorithms) {
            auto& runs = per_job[job++];
            runs.resize(static_cast<size_t>(cfg.base.replications));
            for (int r = 0; r < cfg.base.replications; r++)
                runs[static_cast<size_t>(r)] = run_single(cfg.base, n, alg, r).metrics;
        }
    }
    return aggregate(cfg, per_job);
}

std::vector<AggregateRow> run_sweep_parallel(const SweepConfig& cfg) {
    cfg.base.validate();
    size_t jobs = cfg.node_counts.size() * cfg.algorithms.size();
    std::vector<std::vector<RunMetrics>> per_job(jobs);
    for (auto& runs : per_job) runs.resize(static_cast<size_t>(cfg.base.replications));
    long total = static_cast<long>(jobs) * cfg.base.replications;
    std::string first_error;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long i = 0; i < total; i++) {
        long job = i / cfg.base.replications;
        int rep = static_cast<int>(i % cfg.base.replications);
        int n = cfg.node_counts[static_cast<size_t>(job) / cfg.algorithms.size()];
        Algorithm alg = cfg.algorithms[static_cast<size_t>(job) % cfg.algorithms.size()];
        try {
            per_job[static_cast<size_t>(job)][static_cast<size_t>(rep)] =
                run_single(cfg.base, n, alg, rep).metrics;
        } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
            if (first_error.empty()) first_error = e.what();
        }
    }
    if (!first_error.empty()) throw std::runtime_error(first_error);
    return aggregate(cfg, per_job);
}

std::string render_csv(const std::vector<AggregateRow>& rows) {
    std::ostringstream out;
    out << "node_count,algorithm,metric,mean,stdev,replications,seed_base\n";
    char buf[64];
    for (const auto& r : rows) {
        out << r.node_count << ',' << to_string(r.algorithm) << ',' << r.metric << ',';
        std::snprintf(buf, sizeof buf, "%.9g", r.mean);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.9g", r.stdev);
        out << buf << ',' << r.replications << ',' << r.seed_base << '\n';
    }
    return out.str();
}

void emit_csv(const std::vector<AggregateRow>& rows, const std::string& path) {
    if (rows.empty()) throw std::invalid_argument("emit_csv: no rows");
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("emit_csv: cannot open " + path);
    f << render_csv(rows);
    if (!f) throw std::runtime_error("emit_csv: write failed for " + path);
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    auto trim = [](std::string s) {
        size_t a = s.find_first_not_of(" \t\r");
        size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line missing '=': " + line);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("config line missing key: " + line);
        out[key] = value;
    }
    return out;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config_text(buf.str());
}

} // namespace wsnfm
