#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "fedtype/client_state.hpp"
#include "fedtype/conformal.hpp"
#include "fedtype/losses.hpp"

namespace fedtype {

struct UarlConfig {
    int local_epochs = 5;  // R
    int batch_size = 16;
    double lr = 1e-4;
    TrainMode mode = TrainMode::full;
    int topk_k = 3;  // set size in topk mode
    // Default follows the epoch-level flow: the shuffled local data is divided
    // into R parts, one per epoch. true = every epoch is a full pass instead.
    bool full_pass_epochs = false;
    // Alternative small-set branch for the consensus weight (divide by |L|
    // instead of |S| when |S| < |L|).
    bool eta_small_branch_by_l = false;
    double fedprox_mu = 0.0;  // proximal pull of the proxy toward the broadcast weights
    ConformalConfig conformal;
};

struct EpochStats {
    double mean_eta = 0.0;
    double mean_set_size_proxy = 0.0;    // |S| from the proxy's conformal model
    double mean_set_size_private = 0.0;  // |L| from the private net's conformal model
    double train_loss = 0.0;
    double val_acc_proxy = 0.0;
    double val_acc_private = 0.0;
    int sample_count = 0;
};

struct UarlResult {
    std::vector<EpochStats> epochs;
    std::uint64_t bkd_evals = 0;  // times the backward-imitation term was evaluated
};

// Agreement between the two uncertainty sets:
//   |S| >= |L| : |S n L| / |S u L|
//   |S| <  |L| : |S n L| / |S|   (or / |L| with the alternative flag)
// Empty S gives 0.
double consensus_weight(const PredictionSet& s, const PredictionSet& l,
                        bool small_branch_by_l = false);

// The k highest-logit labels, ties broken by lower index.
PredictionSet topk_set(const std::vector<double>& logits, int k);

// One round of local training: re-initialize the proxy from the broadcast
// weights, then for each epoch fit both conformal wrappers on the held-out
// split, predict per-sample sets S (proxy) and L (private), weight the
// backward term by the consensus eta, and take Adam steps on both models.
UarlResult uarl_local_train(ClientState& client, const Dataset& data,
                            const ParamVector& global_proxy, const UarlConfig& cfg,
                            std::mt19937_64& rng);

}  // namespace fedtype
