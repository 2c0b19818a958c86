#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedtype/dense_net.hpp"
#include "fedtype/prediction_set.hpp"

namespace fedtype {

// A scalar loss plus its gradient w.r.t. the logits the loss was taken on.
struct LossGrad {
    double loss = 0.0;
    std::vector<double> dlogits;
};

// loss = -log softmax(logits)[label], gradient = softmax(logits) - one_hot(label).
LossGrad cross_entropy(const std::vector<double>& logits, int label);

// KL(softmax(teacher) || softmax(student)). The teacher is treated as a
// constant; the gradient is w.r.t. the student logits only:
// d/d(student) = softmax(student) - softmax(teacher).
LossGrad forward_kd(const std::vector<double>& teacher_logits,
                    const std::vector<double>& student_logits);

// Ranking-based behavior imitation term: -eta * sum_{k in s} log softmax(logits)[k].
// The normalizer runs over all classes (confident set plus the rest), so with
// s = all classes and eta = 1 this is the negative sum of log-softmax values.
// Minimizing it pushes up the logits of the labels in s. Empty s gives loss 0.
LossGrad bkd_loss(const std::vector<double>& private_logits, const PredictionSet& s,
                  double eta);

struct ParamLossGrad {
    double loss = 0.0;
    ParamVector dparams;
};

// Proximal penalty (mu/2)*||local - global_ref||^2 with gradient mu*(local - global_ref).
ParamLossGrad fedprox_term(const ParamVector& local, const ParamVector& global_ref, double mu);

// Local-training variants. full is the proposed objective; sym swaps the
// backward term for plain distillation; topk/eta1/g05 change how the sets and
// weights are produced upstream and share full's loss shape.
enum class TrainMode { full, sym, topk, eta1, g05 };

TrainMode parse_train_mode(const std::string& name);
std::string to_string(TrainMode mode);

// Both per-sample objectives of the joint client update:
//   private objective = CE(private(x), y) + backward term
//   proxy objective   = CE(proxy(x), y) + forward KD from the (detached) private net
// In sym mode the backward term is KD from the detached proxy into the private
// net; otherwise it is bkd_loss over s weighted by eta. bkd_evals counts how
// often the bkd path ran (the sym path must never touch it).
struct CompositeLoss {
    double private_loss = 0.0;
    double proxy_loss = 0.0;
    std::vector<double> dlogits_private;
    std::vector<double> dlogits_proxy;
};

CompositeLoss composite_client_loss(const std::vector<double>& x, int label,
                                    const DenseNet& private_net, const DenseNet& proxy_net,
                                    const PredictionSet& s, const PredictionSet& l, double eta,
                                    TrainMode mode, std::uint64_t* bkd_evals = nullptr);

}  // namespace fedtype
