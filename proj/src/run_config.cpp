#include "fedtype/run_config.hpp"

#include <fstream>
#include <set>

namespace fedtype {

namespace {

using nlohmann::json;

class Reader {
public:
    Reader(const json& j, std::string prefix, std::vector<std::string>& errors)
        : j_(j), prefix_(std::move(prefix)), errors_(errors) {}

    void fail(const std::string& field, const std::string& reason) {
        errors_.push_back(path(field) + ": " + reason);
    }

    bool has(const std::string& field) const { return j_.contains(field); }

    template <typename T>
    void get(const std::string& field, T& out) {
        if (!j_.contains(field)) return;
        try {
            out = j_.at(field).get<T>();
        } catch (const json::exception&) {
            fail(field, "wrong type");
        }
    }

    void check_keys(const std::set<std::string>& known) {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!known.count(it.key())) fail(it.key(), "unknown field");
    }

    std::string path(const std::string& field) const {
        return prefix_.empty() ? field : prefix_ + "." + field;
    }

    const json& raw() const { return j_; }

private:
    const json& j_;
    std::string prefix_;
    std::vector<std::string>& errors_;
};

void parse_conformal(const json& j, ConformalConfig& cfg, std::vector<std::string>& errors) {
    Reader r(j, "conformal", errors);
    r.check_keys({"theta", "lambda", "kappa_reg", "u", "g_variant"});
    r.get("theta", cfg.theta);
    r.get("lambda", cfg.lambda);
    r.get("kappa_reg", cfg.kappa_reg);
    if (r.has("g_variant")) {
        std::string name;
        r.get("g_variant", name);
        try {
            cfg.g_variant = parse_g_variant(name);
        } catch (const std::invalid_argument& e) {
            r.fail("g_variant", e.what());
        }
    }
    if (r.has("u")) {
        const json& u = j.at("u");
        if (u.is_string() && u.get<std::string>() == "random") {
            cfg.u_policy.random = true;
        } else if (u.is_number()) {
            cfg.u_policy.random = false;
            cfg.u_policy.fixed_value = u.get<double>();
            if (cfg.u_policy.fixed_value < 0.0 || cfg.u_policy.fixed_value > 1.0)
                r.fail("u", "fixed value must be in [0,1]");
        } else {
            r.fail("u", "expected \"random\" or a number in [0,1]");
        }
    }
    if (cfg.theta <= 0.0 || cfg.theta >= 1.0) r.fail("theta", "must be in (0,1)");
    if (cfg.lambda < 0.0) r.fail("lambda", "must be >= 0");
    if (cfg.kappa_reg < 1) r.fail("kappa_reg", "must be >= 1");
}

void parse_uarl(const json& j, UarlConfig& cfg, std::vector<std::string>& errors) {
    Reader r(j, "uarl", errors);
    r.check_keys({"local_epochs", "batch_size", "lr", "mode", "topk_k", "full_pass_epochs",
                  "eta_small_branch_by_l", "conformal"});
    r.get("local_epochs", cfg.local_epochs);
    r.get("batch_size", cfg.batch_size);
    r.get("lr", cfg.lr);
    r.get("topk_k", cfg.topk_k);
    r.get("full_pass_epochs", cfg.full_pass_epochs);
    r.get("eta_small_branch_by_l", cfg.eta_small_branch_by_l);
    if (r.has("mode")) {
        std::string name;
        r.get("mode", name);
        try {
            cfg.mode = parse_train_mode(name);
        } catch (const std::invalid_argument& e) {
            r.fail("mode", e.what());
        }
    }
    if (j.contains("conformal") && j.at("conformal").is_object())
        parse_conformal(j.at("conformal"), cfg.conformal, errors);
    else if (j.contains("conformal"))
        r.fail("conformal", "expected an object");

    if (cfg.local_epochs < 1) r.fail("local_epochs", "must be >= 1");
    if (cfg.batch_size < 1) r.fail("batch_size", "must be >= 1");
    if (cfg.lr < 0.0) r.fail("lr", "must be >= 0");
    if (cfg.topk_k < 1) r.fail("topk_k", "must be >= 1");
}

void parse_dataset(const json& j, DatasetSpec& spec, std::vector<std::string>& errors) {
    Reader r(j, "dataset", errors);
    std::string type = "synthetic";
    r.get("type", type);
    if (type == "synthetic") {
        spec.synthetic = true;
        r.check_keys({"type", "classes", "dim", "n_per_class", "spread"});
        r.get("classes", spec.synth.classes);
        r.get("dim", spec.synth.dim);
        r.get("n_per_class", spec.synth.n_per_class);
        r.get("spread", spec.synth.spread);
        if (spec.synth.classes < 2) r.fail("classes", "must be >= 2");
        if (spec.synth.dim < 2) r.fail("dim", "must be >= 2");
        if (spec.synth.n_per_class < 1) r.fail("n_per_class", "must be >= 1");
        if (spec.synth.spread < 0.0) r.fail("spread", "must be >= 0");
    } else if (type == "idx") {
        spec.synthetic = false;
        r.check_keys({"type", "images", "labels"});
        r.get("images", spec.idx.images);
        r.get("labels", spec.idx.labels);
        if (spec.idx.images.empty()) r.fail("images", "path required");
        if (spec.idx.labels.empty()) r.fail("labels", "path required");
    } else {
        r.fail("type", "expected \"synthetic\" or \"idx\"");
    }
}

bool valid_dims(const std::vector<int>& dims) {
    if (dims.size() < 2) return false;
    for (int d : dims)
        if (d < 1) return false;
    return true;
}

}  // namespace

ConfigResult parse_run_config(const nlohmann::json& j) {
    ConfigResult result;
    RunConfig& cfg = result.config;
    auto& errors = result.errors;

    Reader r(j, "", errors);
    r.check_keys({"seed", "rounds", "clients", "sample_ratio", "alpha", "min_per_client",
                  "dataset", "proxy_dims", "private_pool", "pool_assignment", "uarl",
                  "aggregation", "output_dir", "parallel_clients"});
    r.get("seed", cfg.seed);
    r.get("rounds", cfg.rounds);
    r.get("clients", cfg.clients);
    r.get("sample_ratio", cfg.sample_ratio);
    r.get("alpha", cfg.alpha);
    r.get("min_per_client", cfg.min_per_client);
    r.get("proxy_dims", cfg.proxy_dims);
    r.get("private_pool", cfg.private_pool);
    r.get("output_dir", cfg.output_dir);
    r.get("parallel_clients", cfg.parallel_clients);

    if (r.has("pool_assignment")) {
        std::string mode;
        r.get("pool_assignment", mode);
        if (mode == "random") cfg.pool_assignment_random = true;
        else if (mode == "round_robin") cfg.pool_assignment_random = false;
        else r.fail("pool_assignment", "expected \"round_robin\" or \"random\"");
    }

    if (j.contains("dataset")) {
        if (j.at("dataset").is_object()) parse_dataset(j.at("dataset"), cfg.dataset, errors);
        else r.fail("dataset", "expected an object");
    }
    if (j.contains("uarl")) {
        if (j.at("uarl").is_object()) parse_uarl(j.at("uarl"), cfg.uarl, errors);
        else r.fail("uarl", "expected an object");
    }
    if (j.contains("aggregation")) {
        const json& agg = j.at("aggregation");
        if (agg.is_object()) {
            Reader ar(agg, "aggregation", errors);
            ar.check_keys({"method", "mu"});
            ar.get("method", cfg.aggregation);
            ar.get("mu", cfg.fedprox_mu);
            if (cfg.aggregation != "fedavg" && cfg.aggregation != "fedprox")
                ar.fail("method", "expected \"fedavg\" or \"fedprox\"");
            if (cfg.fedprox_mu < 0.0) ar.fail("mu", "must be >= 0");
        } else {
            r.fail("aggregation", "expected an object");
        }
    }

    if (cfg.rounds < 1) r.fail("rounds", "must be >= 1");
    if (cfg.clients < 1) r.fail("clients", "must be >= 1");
    if (cfg.sample_ratio <= 0.0 || cfg.sample_ratio > 1.0)
        r.fail("sample_ratio", "must be in (0,1]");
    if (cfg.alpha <= 0.0) r.fail("alpha", "must be > 0");
    if (cfg.min_per_client < 10) r.fail("min_per_client", "must be >= 10 (7:2:1 split needs it)");
    if (cfg.parallel_clients < 1) r.fail("parallel_clients", "must be >= 1");

    // Architecture defaults come from the synthetic spec; IDX runs must name
    // shapes explicitly since the data dimensions are unknown until load time.
    if (cfg.dataset.synthetic) {
        const int dim = cfg.dataset.synth.dim;
        const int classes = cfg.dataset.synth.classes;
        if (cfg.proxy_dims.empty()) cfg.proxy_dims = {dim, 12, classes};
        if (cfg.private_pool.empty())
            cfg.private_pool = {{dim, 48, 24, classes},
                                {dim, 64, classes},
                                {dim, 40, 32, classes},
                                {dim, 56, 16, classes}};
        if (valid_dims(cfg.proxy_dims)) {
            if (cfg.proxy_dims.front() != dim)
                r.fail("proxy_dims", "first entry must equal dataset dim");
            if (cfg.proxy_dims.back() != classes)
                r.fail("proxy_dims", "last entry must equal dataset classes");
        }
        for (std::size_t i = 0; i < cfg.private_pool.size(); ++i) {
            const auto& dims = cfg.private_pool[i];
            if (valid_dims(dims) && (dims.front() != dim || dims.back() != classes))
                r.fail("private_pool[" + std::to_string(i) + "]",
                       "must run from dataset dim to dataset classes");
        }
        if (cfg.uarl.topk_k > classes) r.fail("uarl.topk_k", "must be <= dataset classes");
    } else {
        if (cfg.proxy_dims.empty()) r.fail("proxy_dims", "required for idx datasets");
        if (cfg.private_pool.empty()) r.fail("private_pool", "required for idx datasets");
    }

    if (!cfg.proxy_dims.empty() && !valid_dims(cfg.proxy_dims))
        r.fail("proxy_dims", "needs >= 2 entries, all >= 1");
    for (std::size_t i = 0; i < cfg.private_pool.size(); ++i)
        if (!valid_dims(cfg.private_pool[i]))
            r.fail("private_pool[" + std::to_string(i) + "]", "needs >= 2 entries, all >= 1");

    return result;
}

ConfigResult load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed JSON in " + path + ": " + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("config root must be a JSON object");
    return parse_run_config(j);
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["seed"] = cfg.seed;
    j["rounds"] = cfg.rounds;
    j["clients"] = cfg.clients;
    j["sample_ratio"] = cfg.sample_ratio;
    j["alpha"] = cfg.alpha;
    j["min_per_client"] = cfg.min_per_client;
    if (cfg.dataset.synthetic) {
        j["dataset"] = {{"type", "synthetic"},
                        {"classes", cfg.dataset.synth.classes},
                        {"dim", cfg.dataset.synth.dim},
                        {"n_per_class", cfg.dataset.synth.n_per_class},
                        {"spread", cfg.dataset.synth.spread}};
    } else {
        j["dataset"] = {{"type", "idx"},
                        {"images", cfg.dataset.idx.images},
                        {"labels", cfg.dataset.idx.labels}};
    }
    j["proxy_dims"] = cfg.proxy_dims;
    j["private_pool"] = cfg.private_pool;
    j["pool_assignment"] = cfg.pool_assignment_random ? "random" : "round_robin";
    nlohmann::json u;
    if (cfg.uarl.conformal.u_policy.random) u = "random";
    else u = cfg.uarl.conformal.u_policy.fixed_value;
    j["uarl"] = {{"local_epochs", cfg.uarl.local_epochs},
                 {"batch_size", cfg.uarl.batch_size},
                 {"lr", cfg.uarl.lr},
                 {"mode", to_string(cfg.uarl.mode)},
                 {"topk_k", cfg.uarl.topk_k},
                 {"full_pass_epochs", cfg.uarl.full_pass_epochs},
                 {"eta_small_branch_by_l", cfg.uarl.eta_small_branch_by_l},
                 {"conformal",
                  {{"theta", cfg.uarl.conformal.theta},
                   {"lambda", cfg.uarl.conformal.lambda},
                   {"kappa_reg", cfg.uarl.conformal.kappa_reg},
                   {"u", u},
                   {"g_variant", to_string(cfg.uarl.conformal.g_variant)}}}};
    j["aggregation"] = {{"method", cfg.aggregation}, {"mu", cfg.fedprox_mu}};
    j["output_dir"] = cfg.output_dir;
    j["parallel_clients"] = cfg.parallel_clients;
    return j;
}

}  // namespace fedtype
