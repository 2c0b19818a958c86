#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "fedtype/client_state.hpp"
#include "fedtype/reciprocity.hpp"

namespace fedtype {

struct RoundMetrics {
    int round = 0;
    double global_acc = 0.0;   // post-aggregation global proxy, mean over all clients' test splits
    double proxy_acc = 0.0;    // each client's own proxy
    double private_acc = 0.0;  // each client's private model
    double mean_eta = 0.0;     // sample-weighted over the sampled clients' epochs
    double mean_set_size_proxy = 0.0;
    double mean_set_size_private = 0.0;
    std::uint64_t bytes_up = 0;
    std::uint64_t bytes_down = 0;
};

struct Server {
    ParamVector global_proxy;
};

struct FederationConfig {
    double sample_ratio = 0.2;
    bool uniform_weights = false;  // default: weight by client train-set size
    std::uint64_t run_seed = 0;
    int parallel_clients = 1;
    // Zero-communication baseline: clients train on their own stale proxies,
    // nothing is uploaded or aggregated.
    bool local_only = false;
};

// max(1, round(ratio*N)) distinct ids, uniform without replacement, sorted.
std::vector<int> sample_clients(int n_clients, double ratio, std::mt19937_64& rng);

// Coordinate-wise weighted mean with the weights normalized to sum 1.
ParamVector aggregate(const std::vector<ParamVector>& proxies, const std::vector<double>& weights);

// Fraction of argmax-correct predictions; argmax ties go to the lower index.
double evaluate(const DenseNet& net, const Dataset& data, const std::vector<int>& indices);

double comm_ratio(std::uint64_t proxy_params, std::uint64_t private_params_total);

// Deterministic per-(run, client, round) RNG stream seeds.
std::uint64_t derive_stream_seed(std::uint64_t run_seed, std::uint64_t a, std::uint64_t b);

// One communication round: sample clients, run local training seeded per
// (run, client, round), collect and aggregate the trained proxies, evaluate
// all three model views on every client's test split, and account bytes at
// 8 bytes per proxy parameter in each direction for the sampled clients.
RoundMetrics run_round(Server& server, std::vector<ClientState>& clients, const Dataset& data,
                       int round, const UarlConfig& uarl_cfg, const FederationConfig& fed_cfg,
                       std::mt19937_64& rng);

}  // namespace fedtype
