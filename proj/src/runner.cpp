#include "fedtype/runner.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fedtype/log.hpp"

namespace fedtype {

namespace {

// Fixed tags keep the derived RNG streams for the different build stages apart.
constexpr std::uint64_t kTagData = 0xDA7A;
constexpr std::uint64_t kTagPartition = 0x9A27;
constexpr std::uint64_t kTagPrivateInit = 0x11A7;
constexpr std::uint64_t kTagProxyInit = 0x99C5;
constexpr std::uint64_t kTagPool = 0x900C;
constexpr std::uint64_t kTagRounds = 0x2074;

}  // namespace

Experiment build_experiment(const RunConfig& cfg) {
    Experiment exp;
    if (cfg.dataset.synthetic) {
        const auto& s = cfg.dataset.synth;
        exp.data = synth_gaussian(s.classes, s.dim, s.n_per_class, s.spread,
                                  derive_stream_seed(cfg.seed, kTagData, 0));
    } else {
        exp.data = load_idx(cfg.dataset.idx.images, cfg.dataset.idx.labels);
    }

    if (cfg.proxy_dims.front() != exp.data.feature_dim() ||
        cfg.proxy_dims.back() != exp.data.class_count)
        throw std::runtime_error("proxy_dims do not match the dataset shape");
    for (const auto& dims : cfg.private_pool)
        if (dims.front() != exp.data.feature_dim() || dims.back() != exp.data.class_count)
            throw std::runtime_error("private_pool entry does not match the dataset shape");

    std::mt19937_64 part_rng(derive_stream_seed(cfg.seed, kTagPartition, 0));
    const auto allocation = dirichlet_partition(exp.data.labels, cfg.clients, cfg.alpha,
                                                part_rng, cfg.min_per_client);

    exp.server.global_proxy =
        flatten(init_network(cfg.proxy_dims, derive_stream_seed(cfg.seed, kTagProxyInit, 0)));

    std::mt19937_64 pool_rng(derive_stream_seed(cfg.seed, kTagPool, 0));
    exp.clients.reserve(cfg.clients);
    for (int i = 0; i < cfg.clients; ++i) {
        ClientState client;
        client.id = i;
        std::size_t arch;
        if (cfg.pool_assignment_random) {
            std::uniform_int_distribution<std::size_t> pick(0, cfg.private_pool.size() - 1);
            arch = pick(pool_rng);
        } else {
            arch = static_cast<std::size_t>(i) % cfg.private_pool.size();
        }
        client.private_net =
            init_network(cfg.private_pool[arch],
                         derive_stream_seed(cfg.seed, kTagPrivateInit, static_cast<std::uint64_t>(i)));
        client.proxy_net = unflatten(cfg.proxy_dims, exp.server.global_proxy);
        client.splits = split_721(allocation[i], part_rng);
        exp.clients.push_back(std::move(client));
    }
    return exp;
}

std::string metrics_csv_header() {
    return "round,global_acc,proxy_acc,private_acc,mean_eta,mean_set_size_proxy,"
           "mean_set_size_private,bytes_up,bytes_down";
}

std::string metrics_csv_row(const RoundMetrics& m) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%" PRIu64 ",%" PRIu64,
                  m.round, m.global_acc, m.proxy_acc, m.private_acc, m.mean_eta,
                  m.mean_set_size_proxy, m.mean_set_size_private,
                  static_cast<std::uint64_t>(m.bytes_up),
                  static_cast<std::uint64_t>(m.bytes_down));
    return buf;
}

RoundMetrics parse_metrics_row(const std::string& line) {
    RoundMetrics m;
    std::istringstream in(line);
    std::string field;
    auto next = [&]() -> std::string {
        if (!std::getline(in, field, ',')) throw std::runtime_error("short metrics row");
        return field;
    };
    m.round = std::stoi(next());
    m.global_acc = std::stod(next());
    m.proxy_acc = std::stod(next());
    m.private_acc = std::stod(next());
    m.mean_eta = std::stod(next());
    m.mean_set_size_proxy = std::stod(next());
    m.mean_set_size_private = std::stod(next());
    m.bytes_up = std::stoull(next());
    m.bytes_down = std::stoull(next());
    return m;
}

RunResult run_experiment(const RunConfig& cfg, bool local_only) {
    Experiment exp = build_experiment(cfg);

    UarlConfig uarl = cfg.uarl;
    uarl.fedprox_mu = cfg.aggregation == "fedprox" ? cfg.fedprox_mu : 0.0;

    FederationConfig fed;
    fed.sample_ratio = cfg.sample_ratio;
    fed.run_seed = cfg.seed;
    fed.parallel_clients = cfg.parallel_clients;
    fed.local_only = local_only;

    const bool write_files = !cfg.output_dir.empty();
    std::ofstream csv;
    if (write_files) {
        std::filesystem::create_directories(cfg.output_dir);
        csv.open(cfg.output_dir + "/metrics.csv", std::ios::trunc);
        if (!csv) throw std::runtime_error("cannot write to " + cfg.output_dir);
        csv << metrics_csv_header() << "\n";
        csv.flush();
    }

    RunResult result;
    std::mt19937_64 round_rng(derive_stream_seed(cfg.seed, kTagRounds, 0));
    for (int t = 1; t <= cfg.rounds; ++t) {
        const RoundMetrics m =
            run_round(exp.server, exp.clients, exp.data, t, uarl, fed, round_rng);
        result.rounds.push_back(m);
        if (write_files) {
            csv << metrics_csv_row(m) << "\n";
            csv.flush();  // keep partial metrics on a mid-run failure
            save_params(exp.server.global_proxy,
                        cfg.output_dir + "/round_" + std::to_string(t) + ".params");
        }
        log::info("round " + std::to_string(t) + ": global=" + std::to_string(m.global_acc) +
                  " proxy=" + std::to_string(m.proxy_acc) +
                  " private=" + std::to_string(m.private_acc) +
                  " eta=" + std::to_string(m.mean_eta));
    }

    if (write_files) {
        const RoundMetrics& last = result.rounds.back();
        nlohmann::json summary;
        summary["seed"] = cfg.seed;
        summary["rounds_completed"] = static_cast<int>(result.rounds.size());
        summary["local_only"] = local_only;
        summary["final"] = {{"round", last.round},
                            {"global_acc", last.global_acc},
                            {"proxy_acc", last.proxy_acc},
                            {"private_acc", last.private_acc},
                            {"mean_eta", last.mean_eta},
                            {"mean_set_size_proxy", last.mean_set_size_proxy},
                            {"mean_set_size_private", last.mean_set_size_private},
                            {"bytes_up", last.bytes_up},
                            {"bytes_down", last.bytes_down}};
        summary["config"] = config_to_json(cfg);
        std::ofstream out(cfg.output_dir + "/summary.json");
        out << summary.dump(2) << "\n";
    }
    return result;
}

}  // namespace fedtype
