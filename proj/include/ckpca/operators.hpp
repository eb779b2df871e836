#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "ckpca/errors.hpp"

namespace ckpca {

/// Non-overlapping blocks used by the pooled within-segment covariance
/// estimator. The first r-1 segments have length alpha; the last segment
/// absorbs the remainder, so its length is in [alpha, 2*alpha).
struct SegmentScheme {
    Eigen::Index n = 0;
    Eigen::Index alpha = 0;
    Eigen::Index r = 0;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> boundaries;  // 0-based [begin, end)
};

inline SegmentScheme make_segments(Eigen::Index n,
                                   std::optional<Eigen::Index> alpha = std::nullopt) {
    if (n < 4) {
        throw InvalidAlpha("segmentation needs at least 4 observations");
    }
    Eigen::Index a;
    if (alpha.has_value()) {
        a = *alpha;
        if (a < 2 || a > n / 2) {
            throw InvalidAlpha("alpha must satisfy 2 <= alpha <= n/2");
        }
    } else {
        a = static_cast<Eigen::Index>(std::floor(std::sqrt(static_cast<double>(n))));
    }
    SegmentScheme scheme;
    scheme.n = n;
    scheme.alpha = a;
    scheme.r = n / a;
    scheme.boundaries.reserve(static_cast<std::size_t>(scheme.r));
    for (Eigen::Index m = 0; m < scheme.r; ++m) {
        const Eigen::Index begin = m * a;
        const Eigen::Index end = (m + 1 == scheme.r) ? n : begin + a;
        scheme.boundaries.emplace_back(begin, end);
    }
    return scheme;
}

/// Grouping of observations into d non-empty categories, 0-based labels.
struct Partition {
    std::vector<int> labels;
    int d = 0;
    std::vector<Eigen::Index> sizes;

    Eigen::Index n() const { return static_cast<Eigen::Index>(labels.size()); }

    /// Builds a partition from arbitrary integer labels; ids are compacted
    /// to 0..d-1 in increasing order of the original values.
    static Partition from_labels(const std::vector<int>& raw) {
        if (raw.empty()) {
            throw EmptyInput("partition needs at least one observation");
        }
        std::map<int, int> remap;
        for (int v : raw) remap.emplace(v, 0);
        int next = 0;
        for (auto& kv : remap) kv.second = next++;
        Partition part;
        part.d = next;
        part.labels.reserve(raw.size());
        part.sizes.assign(static_cast<std::size_t>(next), 0);
        for (int v : raw) {
            const int id = remap.at(v);
            part.labels.push_back(id);
            ++part.sizes[static_cast<std::size_t>(id)];
        }
        return part;
    }
};

enum class CenteringMode { ChangePoint, Cluster };

/// Pair of n x n centering operators: `global` removes the grand mean,
/// `within` removes per-group means with the mode-specific weights. Both
/// annihilate constant vectors and are positive semidefinite; `within` is
/// zero outside the diagonal group blocks.
struct CenteringPair {
    Eigen::MatrixXd global;
    Eigen::MatrixXd within;
    CenteringMode mode = CenteringMode::ChangePoint;

    Eigen::MatrixXd corrected() const { return global - within; }
};

namespace detail {

inline Eigen::MatrixXd grand_mean_centering(Eigen::Index n) {
    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::MatrixXd g = Eigen::MatrixXd::Constant(n, n, -inv_n * inv_n);
    g.diagonal().array() += inv_n;
    return g;
}

// Adds weight * (I - J/size) on the rows/columns given by `members`.
inline void add_group_centering(Eigen::MatrixXd& within,
                                const std::vector<Eigen::Index>& members, double weight) {
    const double inv_size = 1.0 / static_cast<double>(members.size());
    for (std::size_t a = 0; a < members.size(); ++a) {
        for (std::size_t b = 0; b < members.size(); ++b) {
            const double base = (a == b ? 1.0 : 0.0) - inv_size;
            within(members[a], members[b]) += weight * base;
        }
    }
}

}  // namespace detail

/// Operators for the ordered-data mode: global = (1/n)(I - J/n), within
/// assembled per segment m with weight 1/(r*(n_m - 1)) and mean subtraction
/// by the segment's actual size n_m.
inline CenteringPair changepoint_operators(const SegmentScheme& scheme) {
    const Eigen::Index n = scheme.n;
    CenteringPair pair;
    pair.mode = CenteringMode::ChangePoint;
    pair.global = detail::grand_mean_centering(n);
    pair.within = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [begin, end] : scheme.boundaries) {
        const Eigen::Index size = end - begin;
        if (size < 2) {
            throw SegmentTooSmall("every segment must contain at least 2 observations");
        }
        std::vector<Eigen::Index> members(static_cast<std::size_t>(size));
        for (Eigen::Index i = 0; i < size; ++i) members[static_cast<std::size_t>(i)] = begin + i;
        const double weight =
            1.0 / (static_cast<double>(scheme.r) * static_cast<double>(size - 1));
        detail::add_group_centering(pair.within, members, weight);
    }
    return pair;
}

/// Operators for the unordered-category mode: global as above, within is the
/// weighted pooled projector with a single weight 1/(n - d) per category.
inline CenteringPair cluster_operators(const Partition& partition) {
    const Eigen::Index n = partition.n();
    const int d = partition.d;
    if (d < 2) {
        throw CategoryTooSmall("clustering operators need at least 2 categories");
    }
    if (n <= static_cast<Eigen::Index>(d)) {
        throw CategoryTooSmall("need more observations than categories");
    }
    std::vector<std::vector<Eigen::Index>> groups(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < n; ++i) {
        groups[static_cast<std::size_t>(partition.labels[static_cast<std::size_t>(i)])].push_back(i);
    }
    for (const auto& g : groups) {
        if (g.size() < 2) {
            throw CategoryTooSmall("every category must contain at least 2 observations");
        }
    }
    CenteringPair pair;
    pair.mode = CenteringMode::Cluster;
    pair.global = detail::grand_mean_centering(n);
    pair.within = Eigen::MatrixXd::Zero(n, n);
    const double weight = 1.0 / static_cast<double>(n - d);
    for (const auto& g : groups) {
        detail::add_group_centering(pair.within, g, weight);
    }
    return pair;
}

}  // namespace ckpca
