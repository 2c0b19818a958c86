#pragma once

#include <limits>
#include <random>
#include <string>
#include <vector>

#include "fedtype/data.hpp"
#include "fedtype/dense_net.hpp"
#include "fedtype/prediction_set.hpp"

namespace fedtype {

// Shape of the rank-penalty multiplier for negative performance deltas.
// All variants return lambda for delta >= 0; for delta < 0:
//   g1: lambda*delta - delta + lambda   (piecewise linear)
//   g2: lambda                          (constant)
//   g3: lambda*delta^2 + lambda
//   g4: -lambda*delta^2 - delta + lambda
enum class GVariant { g1, g2, g3, g4 };

GVariant parse_g_variant(const std::string& name);
std::string to_string(GVariant v);

// The randomized score jump u: a fresh uniform draw per sample, or a fixed
// value for exactly reproducible tests.
struct UPolicy {
    bool random = true;
    double fixed_value = 1.0;
};

struct ConformalConfig {
    double theta = 0.1;   // miscoverage level; sets cover with prob >= 1 - theta
    double lambda = 0.5;  // rank-penalty weight
    int kappa_reg = 5;    // penalty-free rank allowance
    UPolicy u_policy;
    GVariant g_variant = GVariant::g1;
};

// A fitted split-conformal wrapper around one classifier: the temperature for
// its probabilities and the calibration threshold tau. tau = +inf means the
// calibration set was too small and every prediction set is the full label set.
struct ConformalModel {
    double temperature = 1.0;
    double tau = std::numeric_limits<double>::infinity();
    ConformalConfig config;
};

// Scalar temperature minimizing mean CE of softmax(logits/T), by gradient
// descent from T = 1 with at most max_iter steps.
double temperature_scale(const std::vector<std::vector<double>>& val_logits,
                         const std::vector<int>& val_labels, double lr, int max_iter);

// Regularized adaptive score for candidate label y:
//   rho(y) + pi(y)*u + penalty*(rank(y) - kappa_reg)^+
// where rho(y) is the probability mass ranked strictly before y and rank(y)
// is y's 1-based position when labels are ordered by descending probability,
// ties broken by lower class index.
double raps_score(const std::vector<double>& probs, int y, double u, double penalty,
                  int kappa_reg);

// The k-th smallest score with k = ceil((1-theta)(n+1)); +inf when k > n.
double quantile_tau(const std::vector<double>& scores, double theta);

// Penalty multiplier g(delta, lambda). delta is clamped to [-1,1] (warned).
double g_calibration(double delta, double lambda, GVariant variant);

// Split-conformal fit: temperature-scale the net's logits on the validation
// samples, score each sample at its true label with the calibration-time
// penalty g(0, lambda) = lambda, and take tau as the finite-sample quantile.
ConformalModel fit_cmodel(const DenseNet& net, const Dataset& data,
                          const std::vector<int>& val_indices, const ConformalConfig& config,
                          std::mt19937_64& rng, double platt_lr = 0.01, int platt_max_iter = 10);

// Labels whose penalized score stays within tau. delta < 0 inflates the rank
// penalty and shrinks the set; one u is drawn per call under the random policy.
PredictionSet predict_set(const ConformalModel& cmodel, const std::vector<double>& logits,
                          double delta, std::mt19937_64& rng);

// Validation-accuracy change feeding g. Callers use 0 before any history exists.
double performance_delta(double acc_now, double acc_prev);

}  // namespace fedtype
