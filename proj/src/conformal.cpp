#include "fedtype/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedtype/log.hpp"

namespace fedtype {

GVariant parse_g_variant(const std::string& name) {
    if (name == "g1") return GVariant::g1;
    if (name == "g2") return GVariant::g2;
    if (name == "g3") return GVariant::g3;
    if (name == "g4") return GVariant::g4;
    throw std::invalid_argument("unknown g variant: " + name);
}

std::string to_string(GVariant v) {
    switch (v) {
        case GVariant::g1: return "g1";
        case GVariant::g2: return "g2";
        case GVariant::g3: return "g3";
        case GVariant::g4: return "g4";
    }
    return "g1";
}

double temperature_scale(const std::vector<std::vector<double>>& val_logits,
                         const std::vector<int>& val_labels, double lr, int max_iter) {
    if (val_logits.empty() || val_logits.size() != val_labels.size())
        throw std::invalid_argument("temperature_scale needs matching, nonempty inputs");
    double t = 1.0;
    for (int it = 0; it < max_iter; ++it) {
        // d/dT mean CE(softmax(logits/T), y) = mean (l_y - E_p[l]) / T^2
        double grad = 0.0;
        for (std::size_t j = 0; j < val_logits.size(); ++j) {
            const auto& l = val_logits[j];
            std::vector<double> scaled(l.size());
            for (std::size_t k = 0; k < l.size(); ++k) scaled[k] = l[k] / t;
            const auto p = softmax(scaled);
            double expected = 0.0;
            for (std::size_t k = 0; k < l.size(); ++k) expected += p[k] * l[k];
            grad += (l[val_labels[j]] - expected) / (t * t);
        }
        grad /= static_cast<double>(val_logits.size());
        t -= lr * grad;
        if (t < 0.05) t = 0.05;  // keep temperature strictly positive
    }
    return t;
}

namespace {

// Class indices ordered by descending probability, ties by lower index.
std::vector<int> rank_order(const std::vector<double>& probs) {
    std::vector<int> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return probs[a] > probs[b]; });
    return order;
}

double score_at_rank(const std::vector<double>& probs, const std::vector<int>& order, int pos,
                     double u, double penalty, int kappa_reg) {
    double rho = 0.0;
    for (int k = 0; k < pos; ++k) rho += probs[order[k]];
    const double rank = static_cast<double>(pos + 1);
    const double over = std::max(0.0, rank - static_cast<double>(kappa_reg));
    return rho + probs[order[pos]] * u + penalty * over;
}

double draw_u(const UPolicy& policy, std::mt19937_64& rng) {
    if (!policy.random) return policy.fixed_value;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    return uni(rng);
}

}  // namespace

double raps_score(const std::vector<double>& probs, int y, double u, double penalty,
                  int kappa_reg) {
    if (y < 0 || y >= static_cast<int>(probs.size()))
        throw std::invalid_argument("label out of range");
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("probabilities must sum to 1");
    const auto order = rank_order(probs);
    const int pos = static_cast<int>(std::find(order.begin(), order.end(), y) - order.begin());
    return score_at_rank(probs, order, pos, u, penalty, kappa_reg);
}

double quantile_tau(const std::vector<double>& scores, double theta) {
    if (scores.empty()) throw std::invalid_argument("empty score list");
    const auto n = static_cast<double>(scores.size());
    const auto k = static_cast<long>(std::ceil((1.0 - theta) * (n + 1.0)));
    if (k > static_cast<long>(scores.size()))
        return std::numeric_limits<double>::infinity();
    std::vector<double> sorted = scores;
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
    return sorted[k - 1];
}

double g_calibration(double delta, double lambda, GVariant variant) {
    if (delta < -1.0 || delta > 1.0) {
        log::warn("performance delta outside [-1,1]; clamping");
        delta = std::clamp(delta, -1.0, 1.0);
    }
    if (delta >= 0.0) return lambda;
    switch (variant) {
        case GVariant::g1: return lambda * delta - delta + lambda;
        case GVariant::g2: return lambda;
        case GVariant::g3: return lambda * delta * delta + lambda;
        case GVariant::g4: return -lambda * delta * delta - delta + lambda;
    }
    return lambda;
}

ConformalModel fit_cmodel(const DenseNet& net, const Dataset& data,
                          const std::vector<int>& val_indices, const ConformalConfig& config,
                          std::mt19937_64& rng, double platt_lr, int platt_max_iter) {
    if (val_indices.empty()) throw std::invalid_argument("empty validation set");

    std::vector<std::vector<double>> logits;
    std::vector<int> labels;
    logits.reserve(val_indices.size());
    labels.reserve(val_indices.size());
    for (int idx : val_indices) {
        logits.push_back(forward_logits(net, data.features[idx]));
        labels.push_back(data.labels[idx]);
    }

    ConformalModel model;
    model.config = config;
    model.temperature = temperature_scale(logits, labels, platt_lr, platt_max_iter);

    // Calibration scores use the resting penalty g(0) = lambda; the dynamic
    // penalty applies only at set-generation time.
    const double penalty = g_calibration(0.0, config.lambda, config.g_variant);
    std::vector<double> scores;
    scores.reserve(val_indices.size());
    for (std::size_t j = 0; j < logits.size(); ++j) {
        std::vector<double> scaled(logits[j].size());
        for (std::size_t k = 0; k < scaled.size(); ++k)
            scaled[k] = logits[j][k] / model.temperature;
        const auto probs = softmax(scaled);
        const double u = draw_u(config.u_policy, rng);
        scores.push_back(raps_score(probs, labels[j], u, penalty, config.kappa_reg));
    }
    model.tau = quantile_tau(scores, config.theta);
    return model;
}

PredictionSet predict_set(const ConformalModel& cmodel, const std::vector<double>& logits,
                          double delta, std::mt19937_64& rng) {
    const double u = draw_u(cmodel.config.u_policy, rng);

    std::vector<int> included;
    if (std::isinf(cmodel.tau)) {  // small-calibration fallback: everything
        included.resize(logits.size());
        std::iota(included.begin(), included.end(), 0);
        return PredictionSet(std::move(included));
    }

    std::vector<double> scaled(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k)
        scaled[k] = logits[k] / cmodel.temperature;
    const auto probs = softmax(scaled);
    const auto order = rank_order(probs);
    const double penalty = g_calibration(delta, cmodel.config.lambda, cmodel.config.g_variant);

    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const double s = score_at_rank(probs, order, static_cast<int>(pos), u, penalty,
                                       cmodel.config.kappa_reg);
        if (s <= cmodel.tau) included.push_back(order[pos]);
    }
    return PredictionSet(std::move(included));
}

double performance_delta(double acc_now, double acc_prev) {
    return acc_now - acc_prev;
}

}  // namespace fedtype
