#include "fedtype/dense_net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace fedtype {

namespace {

void check_dims(const std::vector<int>& layer_dims) {
    if (layer_dims.size() < 2)
        throw std::invalid_argument("layer_dims needs at least input and output");
    for (int d : layer_dims)
        if (d < 1) throw std::invalid_argument("layer_dims entries must be >= 1");
}

// Forward pass keeping every layer's activation; activations[0] is the input,
// activations[L] the logits.
std::vector<std::vector<double>> forward_trace(const DenseNet& net, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != net.input_dim())
        throw std::invalid_argument("input dimension mismatch");
    const std::size_t layers = net.weights.size();
    std::vector<std::vector<double>> acts(layers + 1);
    acts[0] = x;
    for (std::size_t l = 0; l < layers; ++l) {
        const int in = net.layer_dims[l];
        const int out = net.layer_dims[l + 1];
        std::vector<double> z(out);
        for (int o = 0; o < out; ++o) {
            double s = net.biases[l][o];
            const double* row = net.weights[l].data() + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) s += row[i] * acts[l][i];
            z[o] = s;
        }
        if (l + 1 < layers)
            for (double& v : z) v = std::max(0.0, v);  // ReLU on hidden layers
        acts[l + 1] = std::move(z);
    }
    return acts;
}

}  // namespace

std::size_t param_count(const std::vector<int>& layer_dims) {
    check_dims(layer_dims);
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l)
        n += static_cast<std::size_t>(layer_dims[l]) * layer_dims[l + 1] + layer_dims[l + 1];
    return n;
}

std::size_t DenseNet::param_count() const { return fedtype::param_count(layer_dims); }

DenseNet init_network(const std::vector<int>& layer_dims, std::uint64_t seed) {
    check_dims(layer_dims);
    DenseNet net;
    net.layer_dims = layer_dims;
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const int in = layer_dims[l];
        const int out = layer_dims[l + 1];
        const double bound = std::sqrt(6.0 / (in + out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        std::vector<double> w(static_cast<std::size_t>(in) * out);
        for (double& v : w) v = dist(rng);
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(out, 0.0);
    }
    return net;
}

std::vector<double> forward_logits(const DenseNet& net, const std::vector<double>& x) {
    return forward_trace(net, x).back();
}

ParamVector backward(const DenseNet& net, const std::vector<double>& x,
                     const std::vector<double>& dloss_dlogits) {
    if (static_cast<int>(dloss_dlogits.size()) != net.class_count())
        throw std::invalid_argument("dloss_dlogits dimension mismatch");
    const auto acts = forward_trace(net, x);
    const std::size_t layers = net.weights.size();

    ParamVector grad(net.param_count(), 0.0);
    // Per-layer offsets into the flat gradient, matching flatten order.
    std::vector<std::size_t> offsets(layers);
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        offsets[l] = off;
        off += static_cast<std::size_t>(net.layer_dims[l]) * net.layer_dims[l + 1] +
               net.layer_dims[l + 1];
    }

    std::vector<double> delta = dloss_dlogits;
    for (std::size_t li = layers; li-- > 0;) {
        const int in = net.layer_dims[li];
        const int out = net.layer_dims[li + 1];
        double* gw = grad.data() + offsets[li];
        double* gb = gw + static_cast<std::size_t>(in) * out;
        for (int o = 0; o < out; ++o) {
            for (int i = 0; i < in; ++i)
                gw[static_cast<std::size_t>(o) * in + i] = delta[o] * acts[li][i];
            gb[o] = delta[o];
        }
        if (li > 0) {
            std::vector<double> prev(in, 0.0);
            for (int i = 0; i < in; ++i) {
                if (acts[li][i] <= 0.0) continue;  // ReLU gate
                double s = 0.0;
                for (int o = 0; o < out; ++o)
                    s += delta[o] * net.weights[li][static_cast<std::size_t>(o) * in + i];
                prev[i] = s;
            }
            delta = std::move(prev);
        }
    }
    return grad;
}

AdamState make_adam_state(const DenseNet& net) {
    AdamState st;
    st.m.assign(net.param_count(), 0.0);
    st.v.assign(net.param_count(), 0.0);
    return st;
}

void adam_step(DenseNet& net, const ParamVector& grad, AdamState& state, double lr) {
    const std::size_t n = net.param_count();
    if (grad.size() != n) throw std::invalid_argument("gradient length mismatch");
    if (state.m.size() != n || state.v.size() != n)
        throw std::invalid_argument("adam state length mismatch");
    for (double g : grad)
        if (!std::isfinite(g)) throw std::invalid_argument("non-finite gradient entry");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    ParamVector params = flatten(net);
    for (std::size_t k = 0; k < n; ++k) {
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * grad[k];
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * grad[k] * grad[k];
        const double mhat = state.m[k] / bc1;
        const double vhat = state.v[k] / bc2;
        params[k] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
    net = unflatten(net.layer_dims, params);
}

ParamVector flatten(const DenseNet& net) {
    ParamVector out;
    out.reserve(net.param_count());
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        out.insert(out.end(), net.weights[l].begin(), net.weights[l].end());
        out.insert(out.end(), net.biases[l].begin(), net.biases[l].end());
    }
    return out;
}

DenseNet unflatten(const std::vector<int>& layer_dims, const ParamVector& params) {
    check_dims(layer_dims);
    if (params.size() != param_count(layer_dims))
        throw std::invalid_argument("parameter vector length mismatch");
    DenseNet net;
    net.layer_dims = layer_dims;
    std::size_t pos = 0;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const std::size_t nw = static_cast<std::size_t>(layer_dims[l]) * layer_dims[l + 1];
        const std::size_t nb = layer_dims[l + 1];
        net.weights.emplace_back(params.begin() + pos, params.begin() + pos + nw);
        pos += nw;
        net.biases.emplace_back(params.begin() + pos, params.begin() + pos + nb);
        pos += nb;
    }
    return net;
}

namespace {

void put_u64_le(std::ofstream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64_le(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (in.gcount() != 8) throw std::runtime_error("truncated parameter blob");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_params(const ParamVector& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    put_u64_le(out, params.size());
    for (double d : params) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
        out.write(reinterpret_cast<const char*>(b), 8);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

ParamVector load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    const std::uint64_t n = get_u64_le(in);
    ParamVector params(n);
    for (std::uint64_t k = 0; k < n; ++k) {
        unsigned char b[8];
        in.read(reinterpret_cast<char*>(b), 8);
        if (in.gcount() != 8) throw std::runtime_error("truncated parameter blob");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        std::memcpy(&params[k], &bits, 8);
    }
    return params;
}

double log_sum_exp(const std::vector<double>& logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (double v : logits) s += std::exp(v - mx);
    return mx + std::log(s);
}

std::vector<double> softmax(const std::vector<double>& logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double s = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        p[k] = std::exp(logits[k] - mx);
        s += p[k];
    }
    for (double& v : p) v /= s;
    return p;
}

std::vector<double> log_softmax(const std::vector<double>& logits) {
    const double lse = log_sum_exp(logits);
    std::vector<double> out(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) out[k] = logits[k] - lse;
    return out;
}

}  // namespace fedtype
