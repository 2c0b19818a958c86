#pragma once

#include <algorithm>
#include <vector>

namespace fedtype {

// A set of class labels, kept sorted ascending and unique.
struct PredictionSet {
    std::vector<int> labels;

    PredictionSet() = default;
    explicit PredictionSet(std::vector<int> ls) : labels(std::move(ls)) {
        std::sort(labels.begin(), labels.end());
        labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    }

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
    bool contains(int y) const {
        return std::binary_search(labels.begin(), labels.end(), y);
    }
};

inline std::size_t intersection_size(const PredictionSet& a, const PredictionSet& b) {
    std::size_t n = 0;
    auto it = a.labels.begin();
    auto jt = b.labels.begin();
    while (it != a.labels.end() && jt != b.labels.end()) {
        if (*it < *jt) ++it;
        else if (*jt < *it) ++jt;
        else { ++n; ++it; ++jt; }
    }
    return n;
}

inline std::size_t union_size(const PredictionSet& a, const PredictionSet& b) {
    return a.size() + b.size() - intersection_size(a, b);
}

inline bool is_subset(const PredictionSet& a, const PredictionSet& b) {
    return intersection_size(a, b) == a.size();
}

}  // namespace fedtype
