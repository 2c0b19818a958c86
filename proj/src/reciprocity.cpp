#include "fedtype/reciprocity.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "fedtype/federation.hpp"

namespace fedtype {

double consensus_weight(const PredictionSet& s, const PredictionSet& l,
                        bool small_branch_by_l) {
    if (s.empty()) return 0.0;
    const double inter = static_cast<double>(intersection_size(s, l));
    if (s.size() >= l.size())
        return inter / static_cast<double>(union_size(s, l));
    const double denom = static_cast<double>(small_branch_by_l ? l.size() : s.size());
    return inter / denom;
}

PredictionSet topk_set(const std::vector<double>& logits, int k) {
    if (k < 1 || k > static_cast<int>(logits.size()))
        throw std::invalid_argument("k out of range");
    std::vector<int> order(logits.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return logits[a] > logits[b]; });
    order.resize(k);
    return PredictionSet(std::move(order));
}

namespace {

// Contiguous chunks of near-equal size, one per epoch.
std::vector<std::vector<int>> divide_into_parts(const std::vector<int>& indices, int parts) {
    std::vector<std::vector<int>> out(parts);
    const std::size_t n = indices.size();
    std::size_t start = 0;
    for (int p = 0; p < parts; ++p) {
        std::size_t len = n / parts + (static_cast<std::size_t>(p) < n % parts ? 1 : 0);
        out[p].assign(indices.begin() + start, indices.begin() + start + len);
        start += len;
    }
    return out;
}

}  // namespace

UarlResult uarl_local_train(ClientState& client, const Dataset& data,
                            const ParamVector& global_proxy, const UarlConfig& cfg,
                            std::mt19937_64& rng) {
    if (client.splits.train.empty()) throw std::invalid_argument("empty train split");
    if (client.splits.conformal.empty()) throw std::invalid_argument("empty conformal split");
    if (cfg.local_epochs < 1) throw std::invalid_argument("local_epochs must be >= 1");

    // The broadcast global proxy becomes this round's starting proxy.
    client.proxy_net = unflatten(client.proxy_net.layer_dims, global_proxy);

    ConformalConfig ccfg = cfg.conformal;
    if (cfg.mode == TrainMode::g05) {
        ccfg.lambda = 0.5;
        ccfg.g_variant = GVariant::g2;  // constant penalty, delta ignored
    }

    AdamState adam_private = make_adam_state(client.private_net);
    AdamState adam_proxy = make_adam_state(client.proxy_net);

    std::vector<int> shuffled = client.splits.train;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto parts = divide_into_parts(shuffled, cfg.local_epochs);

    UarlResult result;
    for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        const bool conformal_sets = cfg.mode != TrainMode::topk;
        ConformalModel cw, cp;
        if (conformal_sets) {
            cw = fit_cmodel(client.private_net, data, client.splits.conformal, ccfg, rng);
            cp = fit_cmodel(client.proxy_net, data, client.splits.conformal, ccfg, rng);
        }

        // Validation-accuracy change from the last two completed epochs; zero
        // until two measurements exist.
        double delta = 0.0;
        const std::size_t h = client.acc_history.size();
        if (h >= 2)
            delta = performance_delta(client.acc_history[h - 1], client.acc_history[h - 2]);

        std::vector<int> epoch_indices;
        if (cfg.full_pass_epochs) {
            epoch_indices = client.splits.train;
            std::shuffle(epoch_indices.begin(), epoch_indices.end(), rng);
        } else {
            epoch_indices = parts[epoch];
        }

        EpochStats stats;
        double eta_sum = 0.0, s_size_sum = 0.0, l_size_sum = 0.0, loss_sum = 0.0;

        const std::size_t n_private = client.private_net.param_count();
        const std::size_t n_proxy = client.proxy_net.param_count();
        for (std::size_t bstart = 0; bstart < epoch_indices.size();
             bstart += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t bend =
                std::min(epoch_indices.size(), bstart + static_cast<std::size_t>(cfg.batch_size));
            const double bsize = static_cast<double>(bend - bstart);

            ParamVector grad_private(n_private, 0.0);
            ParamVector grad_proxy(n_proxy, 0.0);
            for (std::size_t bi = bstart; bi < bend; ++bi) {
                const int idx = epoch_indices[bi];
                const auto& x = data.features[idx];
                const int y = data.labels[idx];

                const auto private_logits = forward_logits(client.private_net, x);
                const auto proxy_logits = forward_logits(client.proxy_net, x);

                PredictionSet s, l;
                if (cfg.mode == TrainMode::topk) {
                    s = topk_set(proxy_logits, cfg.topk_k);
                    l = topk_set(private_logits, cfg.topk_k);
                } else {
                    s = predict_set(cp, proxy_logits, delta, rng);
                    l = predict_set(cw, private_logits, delta, rng);
                }
                double eta = consensus_weight(s, l, cfg.eta_small_branch_by_l);
                if (cfg.mode == TrainMode::eta1) eta = 1.0;

                const auto comp =
                    composite_client_loss(x, y, client.private_net, client.proxy_net, s, l, eta,
                                          cfg.mode, &result.bkd_evals);

                const auto gp = backward(client.private_net, x, comp.dlogits_private);
                for (std::size_t k = 0; k < n_private; ++k) grad_private[k] += gp[k];
                const auto gq = backward(client.proxy_net, x, comp.dlogits_proxy);
                for (std::size_t k = 0; k < n_proxy; ++k) grad_proxy[k] += gq[k];

                eta_sum += eta;
                s_size_sum += static_cast<double>(s.size());
                l_size_sum += static_cast<double>(l.size());
                loss_sum += comp.private_loss + comp.proxy_loss;
                stats.sample_count += 1;
            }
            for (double& g : grad_private) g /= bsize;
            for (double& g : grad_proxy) g /= bsize;

            if (cfg.fedprox_mu > 0.0) {
                const auto prox =
                    fedprox_term(flatten(client.proxy_net), global_proxy, cfg.fedprox_mu);
                for (std::size_t k = 0; k < n_proxy; ++k) grad_proxy[k] += prox.dparams[k];
            }

            adam_step(client.private_net, grad_private, adam_private, cfg.lr);
            adam_step(client.proxy_net, grad_proxy, adam_proxy, cfg.lr);
        }

        if (stats.sample_count > 0) {
            const double n = static_cast<double>(stats.sample_count);
            stats.mean_eta = eta_sum / n;
            stats.mean_set_size_proxy = s_size_sum / n;
            stats.mean_set_size_private = l_size_sum / n;
            stats.train_loss = loss_sum / n;
        }
        stats.val_acc_proxy = evaluate(client.proxy_net, data, client.splits.conformal);
        stats.val_acc_private = evaluate(client.private_net, data, client.splits.conformal);
        client.acc_history.push_back(stats.val_acc_proxy);
        result.epochs.push_back(stats);
    }
    return result;
}

}  // namespace fedtype
