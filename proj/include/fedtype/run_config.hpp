#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedtype/reciprocity.hpp"

namespace fedtype {

struct SyntheticSpec {
    int classes = 8;
    int dim = 16;
    int n_per_class = 200;
    double spread = 2.5;
};

struct IdxSpec {
    std::string images;
    std::string labels;
};

struct DatasetSpec {
    bool synthetic = true;
    SyntheticSpec synth;
    IdxSpec idx;
};

// Everything one experiment needs; unset fields fall back to the documented
// defaults (conformal and local-training defaults match the reference
// hyperparameters: theta 0.1, lambda 0.5, kappa_reg 5, lr 1e-4, batch 16, R 5).
struct RunConfig {
    std::uint64_t seed = 0;
    int rounds = 10;
    int clients = 8;
    double sample_ratio = 0.2;
    double alpha = 0.5;
    int min_per_client = 10;
    DatasetSpec dataset;
    std::vector<int> proxy_dims;                 // defaulted from the dataset if empty
    std::vector<std::vector<int>> private_pool;  // one entry per architecture, assigned to clients
    bool pool_assignment_random = false;         // default round-robin
    UarlConfig uarl;
    std::string aggregation = "fedavg";  // "fedavg" | "fedprox"
    double fedprox_mu = 0.01;
    std::string output_dir = "out";
    int parallel_clients = 1;
};

struct ConfigResult {
    RunConfig config;
    std::vector<std::string> errors;  // one "field: reason" line per invalid field
};

// Reads and validates a JSON config file. File-level problems (missing file,
// malformed JSON) throw; field-level problems land in errors.
ConfigResult load_run_config(const std::string& path);

ConfigResult parse_run_config(const nlohmann::json& j);

// Fully resolved echo of the config, suitable for byte-reproducing a run.
nlohmann::json config_to_json(const RunConfig& cfg);

}  // namespace fedtype
