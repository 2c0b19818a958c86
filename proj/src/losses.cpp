#include "fedtype/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace fedtype {

LossGrad cross_entropy(const std::vector<double>& logits, int label) {
    if (label < 0 || label >= static_cast<int>(logits.size()))
        throw std::invalid_argument("label out of range");
    LossGrad out;
    out.loss = log_sum_exp(logits) - logits[label];
    out.dlogits = softmax(logits);
    out.dlogits[label] -= 1.0;
    return out;
}

LossGrad forward_kd(const std::vector<double>& teacher_logits,
                    const std::vector<double>& student_logits) {
    if (teacher_logits.size() != student_logits.size())
        throw std::invalid_argument("teacher/student logit length mismatch");
    const auto q = softmax(teacher_logits);
    const auto s_log = log_softmax(student_logits);
    const auto s = softmax(student_logits);
    LossGrad out;
    out.dlogits.resize(student_logits.size());
    for (std::size_t k = 0; k < q.size(); ++k) {
        if (q[k] > 0.0) out.loss += q[k] * (std::log(q[k]) - s_log[k]);
        out.dlogits[k] = s[k] - q[k];
    }
    return out;
}

LossGrad bkd_loss(const std::vector<double>& private_logits, const PredictionSet& s,
                  double eta) {
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("eta must be in [0,1]");
    const int classes = static_cast<int>(private_logits.size());
    for (int y : s.labels)
        if (y < 0 || y >= classes) throw std::invalid_argument("set label out of range");

    LossGrad out;
    out.dlogits.assign(private_logits.size(), 0.0);
    if (s.empty() || eta == 0.0) return out;

    const double lse = log_sum_exp(private_logits);
    const auto p = softmax(private_logits);
    for (int k : s.labels) out.loss -= eta * (private_logits[k] - lse);
    const double m = eta * static_cast<double>(s.size());
    for (int c = 0; c < classes; ++c) out.dlogits[c] = m * p[c];
    for (int k : s.labels) out.dlogits[k] -= eta;
    return out;
}

ParamLossGrad fedprox_term(const ParamVector& local, const ParamVector& global_ref, double mu) {
    if (local.size() != global_ref.size())
        throw std::invalid_argument("parameter vector length mismatch");
    if (mu < 0.0) throw std::invalid_argument("mu must be >= 0");
    ParamLossGrad out;
    out.dparams.resize(local.size());
    for (std::size_t k = 0; k < local.size(); ++k) {
        const double d = local[k] - global_ref[k];
        out.loss += 0.5 * mu * d * d;
        out.dparams[k] = mu * d;
    }
    return out;
}

TrainMode parse_train_mode(const std::string& name) {
    if (name == "full") return TrainMode::full;
    if (name == "sym") return TrainMode::sym;
    if (name == "topk") return TrainMode::topk;
    if (name == "eta1") return TrainMode::eta1;
    if (name == "g05") return TrainMode::g05;
    throw std::invalid_argument("unknown mode: " + name);
}

std::string to_string(TrainMode mode) {
    switch (mode) {
        case TrainMode::full: return "full";
        case TrainMode::sym: return "sym";
        case TrainMode::topk: return "topk";
        case TrainMode::eta1: return "eta1";
        case TrainMode::g05: return "g05";
    }
    return "full";
}

CompositeLoss composite_client_loss(const std::vector<double>& x, int label,
                                    const DenseNet& private_net, const DenseNet& proxy_net,
                                    const PredictionSet& s, const PredictionSet& l, double eta,
                                    TrainMode mode, std::uint64_t* bkd_evals) {
    (void)l;  // l only feeds eta upstream; the loss itself uses s
    const auto private_logits = forward_logits(private_net, x);
    const auto proxy_logits = forward_logits(proxy_net, x);

    CompositeLoss out;

    auto ce_private = cross_entropy(private_logits, label);
    out.private_loss = ce_private.loss;
    out.dlogits_private = std::move(ce_private.dlogits);

    if (mode == TrainMode::sym) {
        auto kd = forward_kd(proxy_logits, private_logits);
        out.private_loss += kd.loss;
        for (std::size_t k = 0; k < kd.dlogits.size(); ++k)
            out.dlogits_private[k] += kd.dlogits[k];
    } else {
        if (bkd_evals != nullptr) ++*bkd_evals;
        auto bkd = bkd_loss(private_logits, s, eta);
        out.private_loss += bkd.loss;
        for (std::size_t k = 0; k < bkd.dlogits.size(); ++k)
            out.dlogits_private[k] += bkd.dlogits[k];
    }

    auto ce_proxy = cross_entropy(proxy_logits, label);
    out.proxy_loss = ce_proxy.loss;
    out.dlogits_proxy = std::move(ce_proxy.dlogits);

    auto fkd = forward_kd(private_logits, proxy_logits);
    out.proxy_loss += fkd.loss;
    for (std::size_t k = 0; k < fkd.dlogits.size(); ++k)
        out.dlogits_proxy[k] += fkd.dlogits[k];

    return out;
}

}  // namespace fedtype
