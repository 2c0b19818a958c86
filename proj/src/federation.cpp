#include "fedtype/federation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace fedtype {

std::vector<int> sample_clients(int n_clients, double ratio, std::mt19937_64& rng) {
    if (n_clients < 1) throw std::invalid_argument("n_clients must be >= 1");
    if (ratio <= 0.0 || ratio > 1.0) throw std::invalid_argument("ratio must be in (0,1]");
    const int b = std::max(1, static_cast<int>(std::lround(ratio * n_clients)));
    std::vector<int> ids(n_clients);
    std::iota(ids.begin(), ids.end(), 0);
    // Partial Fisher-Yates: the first b entries are a uniform sample.
    for (int i = 0; i < b; ++i) {
        std::uniform_int_distribution<int> pick(i, n_clients - 1);
        std::swap(ids[i], ids[pick(rng)]);
    }
    ids.resize(b);
    std::sort(ids.begin(), ids.end());
    return ids;
}

ParamVector aggregate(const std::vector<ParamVector>& proxies,
                      const std::vector<double>& weights) {
    if (proxies.empty()) throw std::invalid_argument("nothing to aggregate");
    if (proxies.size() != weights.size())
        throw std::invalid_argument("weights/proxies length mismatch");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("negative aggregation weight");
        total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("aggregation weights sum to zero");

    const std::size_t n = proxies[0].size();
    ParamVector out(n, 0.0);
    for (std::size_t i = 0; i < proxies.size(); ++i) {
        if (proxies[i].size() != n)
            throw std::invalid_argument("proxy parameter length mismatch");
        const double w = weights[i] / total;
        for (std::size_t k = 0; k < n; ++k) out[k] += w * proxies[i][k];
    }
    return out;
}

double evaluate(const DenseNet& net, const Dataset& data, const std::vector<int>& indices) {
    if (indices.empty()) throw std::invalid_argument("empty evaluation set");
    std::size_t correct = 0;
    for (int idx : indices) {
        const auto logits = forward_logits(net, data.features[idx]);
        const int pred = static_cast<int>(
            std::max_element(logits.begin(), logits.end()) - logits.begin());
        if (pred == data.labels[idx]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(indices.size());
}

double comm_ratio(std::uint64_t proxy_params, std::uint64_t private_params_total) {
    if (proxy_params == 0 || private_params_total == 0)
        throw std::invalid_argument("parameter counts must be positive");
    return static_cast<double>(proxy_params) / static_cast<double>(private_params_total);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_stream_seed(std::uint64_t run_seed, std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(run_seed ^ splitmix64(a + 1)) ^ splitmix64(b + 0x100));
}

RoundMetrics run_round(Server& server, std::vector<ClientState>& clients, const Dataset& data,
                       int round, const UarlConfig& uarl_cfg, const FederationConfig& fed_cfg,
                       std::mt19937_64& rng) {
    if (clients.empty()) throw std::invalid_argument("no clients");
    const std::size_t proxy_len = server.global_proxy.size();

    const auto sampled =
        sample_clients(static_cast<int>(clients.size()), fed_cfg.sample_ratio, rng);

    std::vector<ParamVector> collected(sampled.size());
    std::vector<double> weights(sampled.size());
    std::vector<UarlResult> results(sampled.size());

    auto train_one = [&](std::size_t slot) {
        ClientState& client = clients[sampled[slot]];
        std::mt19937_64 stream(derive_stream_seed(
            fed_cfg.run_seed, static_cast<std::uint64_t>(client.id),
            static_cast<std::uint64_t>(round)));
        const ParamVector init =
            fed_cfg.local_only ? flatten(client.proxy_net) : server.global_proxy;
        results[slot] = uarl_local_train(client, data, init, uarl_cfg, stream);
        collected[slot] = flatten(client.proxy_net);
        // Only proxy-shaped parameter vectors may cross the client/server boundary.
        if (collected[slot].size() != proxy_len)
            throw std::logic_error("non-proxy parameter vector at the upload boundary");
        weights[slot] = fed_cfg.uniform_weights
                            ? 1.0
                            : static_cast<double>(client.splits.train.size());
    };

    const int threads = std::max(1, fed_cfg.parallel_clients);
    if (threads == 1 || sampled.size() <= 1) {
        for (std::size_t i = 0; i < sampled.size(); ++i) train_one(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic_size_t next{0};
        const int n_threads = std::min<int>(threads, static_cast<int>(sampled.size()));
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < sampled.size();
                     i = next.fetch_add(1))
                    train_one(i);
            });
        }
        for (auto& th : pool) th.join();
    }

    RoundMetrics metrics;
    metrics.round = round;
    if (!fed_cfg.local_only) {
        server.global_proxy = aggregate(collected, weights);
        const std::uint64_t payload =
            static_cast<std::uint64_t>(sampled.size()) * proxy_len * 8ULL;
        metrics.bytes_up = payload;
        metrics.bytes_down = payload;
    }

    const DenseNet global_net =
        unflatten(clients[0].proxy_net.layer_dims, server.global_proxy);
    double g = 0.0, p = 0.0, w = 0.0;
    for (const ClientState& client : clients) {
        g += evaluate(global_net, data, client.splits.test);
        p += evaluate(client.proxy_net, data, client.splits.test);
        w += evaluate(client.private_net, data, client.splits.test);
    }
    const double n_clients = static_cast<double>(clients.size());
    metrics.global_acc = g / n_clients;
    metrics.proxy_acc = p / n_clients;
    metrics.private_acc = w / n_clients;

    double eta_sum = 0.0, s_sum = 0.0, l_sum = 0.0;
    std::size_t samples = 0;
    for (const auto& res : results) {
        for (const auto& ep : res.epochs) {
            eta_sum += ep.mean_eta * ep.sample_count;
            s_sum += ep.mean_set_size_proxy * ep.sample_count;
            l_sum += ep.mean_set_size_private * ep.sample_count;
            samples += static_cast<std::size_t>(ep.sample_count);
        }
    }
    if (samples > 0) {
        metrics.mean_eta = eta_sum / static_cast<double>(samples);
        metrics.mean_set_size_proxy = s_sum / static_cast<double>(samples);
        metrics.mean_set_size_private = l_sum / static_cast<double>(samples);
    }
    return metrics;
}

}  // namespace fedtype
