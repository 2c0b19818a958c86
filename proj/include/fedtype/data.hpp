#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedtype {

struct Dataset {
    std::vector<std::vector<double>> features;  // all vectors share one dimension
    std::vector<int> labels;                    // in [0, class_count)
    int class_count = 0;

    std::size_t size() const { return features.size(); }
    int feature_dim() const { return features.empty() ? 0 : static_cast<int>(features[0].size()); }
};

// One client's index lists into the shared Dataset.
struct ClientSplit {
    std::vector<int> train;
    std::vector<int> test;
    std::vector<int> conformal;  // held out for conformal calibration
};

// Label-skewed allocation: per class, a Dirichlet(alpha,...,alpha) draw over
// the clients decides how that class's samples are shared out. The whole
// allocation is resampled until every client holds at least min_per_client
// samples.
std::vector<std::vector<int>> dirichlet_partition(const std::vector<int>& labels, int n_clients,
                                                  double alpha, std::mt19937_64& rng,
                                                  int min_per_client = 10);

// Shuffled 7:2:1 split: floor(0.7n) train, floor(0.2n) test, remainder conformal.
ClientSplit split_721(std::vector<int> indices, std::mt19937_64& rng);

// Gaussian-mixture classification data: class means are a seeded random
// orthonormal frame scaled by `spread` (random unit vectors once classes
// outnumber dimensions), unit isotropic noise. spread = 0 makes the classes
// indistinguishable.
Dataset synth_gaussian(int classes, int dim, int n_per_class, double spread, std::uint64_t seed);

// IDX binary loader (big-endian, standard MNIST layout). Pixels are scaled to
// [0,1] and flattened.
struct IdxError : std::runtime_error {
    enum class Kind { bad_magic, truncated, count_mismatch, io };
    Kind kind;
    IdxError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

Dataset load_idx(const std::string& images_path, const std::string& labels_path);

}  // namespace fedtype
