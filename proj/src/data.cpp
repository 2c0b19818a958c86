#include "fedtype/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace fedtype {

std::vector<std::vector<int>> dirichlet_partition(const std::vector<int>& labels, int n_clients,
                                                  double alpha, std::mt19937_64& rng,
                                                  int min_per_client) {
    if (n_clients < 1) throw std::invalid_argument("n_clients must be >= 1");
    if (alpha <= 0.0) throw std::invalid_argument("alpha must be > 0");
    if (labels.empty()) throw std::invalid_argument("empty label list");
    if (static_cast<std::size_t>(n_clients) * min_per_client > labels.size())
        throw std::runtime_error("min_per_client infeasible for dataset size");

    const int classes = 1 + *std::max_element(labels.begin(), labels.end());
    std::vector<std::vector<int>> by_class(classes);
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[labels[i]].push_back(static_cast<int>(i));

    std::gamma_distribution<double> gamma(alpha, 1.0);
    const int max_attempts = 1000;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        std::vector<std::vector<int>> out(n_clients);
        for (int c = 0; c < classes; ++c) {
            auto idxs = by_class[c];
            if (idxs.empty()) continue;
            std::shuffle(idxs.begin(), idxs.end(), rng);

            std::vector<double> props(n_clients);
            double total = 0.0;
            for (double& p : props) {
                p = gamma(rng);
                total += p;
            }
            if (total <= 0.0) {  // vanishingly unlikely; retry the class draw
                --c;
                continue;
            }
            // Cumulative cut points so the class is split exactly.
            const int n = static_cast<int>(idxs.size());
            double cum = 0.0;
            int start = 0;
            for (int k = 0; k < n_clients; ++k) {
                cum += props[k] / total;
                const int end = (k + 1 == n_clients)
                                    ? n
                                    : static_cast<int>(std::lround(cum * n));
                for (int i = start; i < std::min(end, n); ++i) out[k].push_back(idxs[i]);
                start = std::min(std::max(start, end), n);
            }
        }
        const bool ok = std::all_of(out.begin(), out.end(), [&](const std::vector<int>& v) {
            return static_cast<int>(v.size()) >= min_per_client;
        });
        if (ok) return out;
    }
    throw std::runtime_error("dirichlet_partition: could not satisfy min_per_client");
}

ClientSplit split_721(std::vector<int> indices, std::mt19937_64& rng) {
    if (indices.size() < 10) throw std::invalid_argument("split_721 needs at least 10 indices");
    std::shuffle(indices.begin(), indices.end(), rng);
    const std::size_t n = indices.size();
    const std::size_t n_train = 7 * n / 10;  // floor(0.7n), exactly
    const std::size_t n_test = 2 * n / 10;
    ClientSplit split;
    split.train.assign(indices.begin(), indices.begin() + n_train);
    split.test.assign(indices.begin() + n_train, indices.begin() + n_train + n_test);
    split.conformal.assign(indices.begin() + n_train + n_test, indices.end());
    return split;
}

Dataset synth_gaussian(int classes, int dim, int n_per_class, double spread, std::uint64_t seed) {
    if (classes < 2) throw std::invalid_argument("classes must be >= 2");
    if (dim < 2) throw std::invalid_argument("dim must be >= 2");
    if (n_per_class < 1) throw std::invalid_argument("n_per_class must be >= 1");
    if (spread < 0.0) throw std::invalid_argument("spread must be >= 0");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Random unit directions, orthonormalized against the ones already drawn
    // while the dimension allows it, so class means sit well apart.
    std::vector<std::vector<double>> dirs;
    for (int c = 0; c < classes; ++c) {
        std::vector<double> v(dim);
        double norm = 0.0;
        for (int tries = 0; tries < 100; ++tries) {
            for (double& x : v) x = gauss(rng);
            if (c < dim) {
                for (const auto& u : dirs) {
                    double dot = 0.0;
                    for (int k = 0; k < dim; ++k) dot += v[k] * u[k];
                    for (int k = 0; k < dim; ++k) v[k] -= dot * u[k];
                }
            }
            norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
            if (norm > 1e-9) break;
        }
        for (double& x : v) x /= norm;
        dirs.push_back(std::move(v));
    }

    Dataset data;
    data.class_count = classes;
    data.features.reserve(static_cast<std::size_t>(classes) * n_per_class);
    data.labels.reserve(static_cast<std::size_t>(classes) * n_per_class);
    for (int c = 0; c < classes; ++c) {
        for (int j = 0; j < n_per_class; ++j) {
            std::vector<double> x(dim);
            for (int k = 0; k < dim; ++k) x[k] = spread * dirs[c][k] + gauss(rng);
            data.features.push_back(std::move(x));
            data.labels.push_back(c);
        }
    }
    return data;
}

namespace {

std::uint32_t read_u32_be(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw IdxError(IdxError::Kind::truncated, "truncated IDX file: " + path);
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IdxError(IdxError::Kind::io, "cannot open: " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IdxError(IdxError::Kind::io, "cannot open: " + labels_path);

    if (read_u32_be(img, images_path) != 0x00000803u)
        throw IdxError(IdxError::Kind::bad_magic, "bad image magic in " + images_path);
    const std::uint32_t n_images = read_u32_be(img, images_path);
    const std::uint32_t rows = read_u32_be(img, images_path);
    const std::uint32_t cols = read_u32_be(img, images_path);

    if (read_u32_be(lab, labels_path) != 0x00000801u)
        throw IdxError(IdxError::Kind::bad_magic, "bad label magic in " + labels_path);
    const std::uint32_t n_labels = read_u32_be(lab, labels_path);

    if (n_images != n_labels)
        throw IdxError(IdxError::Kind::count_mismatch, "image/label count mismatch");

    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    Dataset data;
    data.features.reserve(n_images);
    data.labels.reserve(n_images);
    std::vector<unsigned char> buf(pixels);
    int max_label = 0;
    for (std::uint32_t i = 0; i < n_images; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
        if (img.gcount() != static_cast<std::streamsize>(pixels))
            throw IdxError(IdxError::Kind::truncated, "truncated IDX file: " + images_path);
        std::vector<double> x(pixels);
        for (std::size_t k = 0; k < pixels; ++k) x[k] = buf[k] / 255.0;
        data.features.push_back(std::move(x));

        char lbl;
        lab.read(&lbl, 1);
        if (lab.gcount() != 1)
            throw IdxError(IdxError::Kind::truncated, "truncated IDX file: " + labels_path);
        const int y = static_cast<unsigned char>(lbl);
        data.labels.push_back(y);
        max_label = std::max(max_label, y);
    }
    data.class_count = max_label + 1;
    return data;
}

}  // namespace fedtype
