#pragma once

#include <string>
#include <vector>

#include "fedtype/federation.hpp"
#include "fedtype/run_config.hpp"

namespace fedtype {

// A fully built experiment: data, partitioned clients with their nets, and
// the server's initial global proxy.
struct Experiment {
    Dataset data;
    std::vector<ClientState> clients;
    Server server;
};

Experiment build_experiment(const RunConfig& cfg);

struct RunResult {
    std::vector<RoundMetrics> rounds;
};

// Executes the full round loop. When cfg.output_dir is nonempty, writes
// metrics.csv (one row per round, flushed as it goes), per-round global-proxy
// checkpoints round_<t>.params, and summary.json at the end. local_only runs
// the zero-communication baseline on the same clients.
RunResult run_experiment(const RunConfig& cfg, bool local_only = false);

// metrics.csv schema. Doubles are written with fixed 6-decimal precision, so
// parse_metrics_row(metrics_csv_row(m)) reproduces the written record exactly.
std::string metrics_csv_header();
std::string metrics_csv_row(const RoundMetrics& m);
RoundMetrics parse_metrics_row(const std::string& line);

}  // namespace fedtype
