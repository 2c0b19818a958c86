#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedtype {

// Flat parameter carrier. Layout: for each layer l, weights[l] in row-major
// order (out x in), followed by biases[l]. This order is what flatten/unflatten
// and the on-disk blob format use.
using ParamVector = std::vector<double>;

// Fully connected ReLU classifier. Hidden layers use ReLU, the last layer is
// linear and its outputs are logits. All arithmetic is in doubles.
struct DenseNet {
    std::vector<int> layer_dims;                 // input dim, hidden dims..., class count
    std::vector<std::vector<double>> weights;    // weights[l]: layer_dims[l+1] x layer_dims[l], row-major
    std::vector<std::vector<double>> biases;     // biases[l]: layer_dims[l+1]

    int input_dim() const { return layer_dims.front(); }
    int class_count() const { return layer_dims.back(); }
    std::size_t param_count() const;
};

std::size_t param_count(const std::vector<int>& layer_dims);

// Seeded Glorot-uniform weights (+/- sqrt(6/(fan_in+fan_out))), zero biases.
// Same (dims, seed) always yields the same network.
DenseNet init_network(const std::vector<int>& layer_dims, std::uint64_t seed);

std::vector<double> forward_logits(const DenseNet& net, const std::vector<double>& x);

// Gradient of a scalar loss w.r.t. all parameters (flatten layout), given the
// loss gradient w.r.t. the output logits.
ParamVector backward(const DenseNet& net, const std::vector<double>& x,
                     const std::vector<double>& dloss_dlogits);

struct AdamState {
    std::vector<double> m;  // first moment
    std::vector<double> v;  // second moment
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState make_adam_state(const DenseNet& net);

// In-place Adam update in flatten order. Rejects non-finite gradient entries.
void adam_step(DenseNet& net, const ParamVector& grad, AdamState& state, double lr);

ParamVector flatten(const DenseNet& net);
DenseNet unflatten(const std::vector<int>& layer_dims, const ParamVector& params);

// Checkpoint blob: 8-byte little-endian length header, then raw little-endian
// 64-bit floats in flatten order.
void save_params(const ParamVector& params, const std::string& path);
ParamVector load_params(const std::string& path);

// Numerically stable helpers shared by the loss and conformal code.
std::vector<double> softmax(const std::vector<double>& logits);
std::vector<double> log_softmax(const std::vector<double>& logits);
double log_sum_exp(const std::vector<double>& logits);

}  // namespace fedtype
