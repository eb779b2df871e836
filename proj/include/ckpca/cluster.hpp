#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "ckpca/errors.hpp"
#include "ckpca/reduction.hpp"
#include "ckpca/seeding.hpp"

namespace ckpca {

struct KMeansResult {
    Partition partition;
    Eigen::MatrixXd centroids;  // d x q
    double wcss = 0.0;
};

namespace detail {

inline Eigen::Index sample_proportional(const Eigen::VectorXd& weights, std::mt19937_64& rng) {
    const double total = weights.sum();
    if (!(total > 0.0)) {
        return std::uniform_int_distribution<Eigen::Index>(0, weights.size() - 1)(rng);
    }
    const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        acc += weights(i);
        if (u <= acc) return i;
    }
    return weights.size() - 1;
}

inline Eigen::MatrixXd kmeanspp_centroids(const Eigen::MatrixXd& Z, int d,
                                          std::mt19937_64& rng) {
    const Eigen::Index n = Z.rows();
    Eigen::MatrixXd centroids(d, Z.cols());
    const Eigen::Index first = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
    centroids.row(0) = Z.row(first);
    Eigen::VectorXd dist_sq =
        (Z.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < d; ++c) {
        const Eigen::Index pick = sample_proportional(dist_sq, rng);
        centroids.row(c) = Z.row(pick);
        dist_sq = dist_sq.cwiseMin(
            (Z.rowwise() - centroids.row(c)).rowwise().squaredNorm());
    }
    return centroids;
}

struct LloydOutcome {
    std::vector<int> labels;
    Eigen::MatrixXd centroids;
    double wcss = 0.0;
};

inline LloydOutcome lloyd(const Eigen::MatrixXd& Z, Eigen::MatrixXd centroids, int max_iter) {
    const Eigen::Index n = Z.rows();
    const int d = static_cast<int>(centroids.rows());
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(d), 0);

    auto assign = [&]() {
        bool changed = false;
        std::fill(counts.begin(), counts.end(), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (Z.row(i) - centroids.row(0)).squaredNorm();
            for (int c = 1; c < d; ++c) {
                const double dist = (Z.row(i) - centroids.row(c)).squaredNorm();
                if (dist < best_d) {
                    best_d = dist;
                    best = c;
                }
            }
            if (labels[static_cast<std::size_t>(i)] != best) changed = true;
            labels[static_cast<std::size_t>(i)] = best;
            ++counts[static_cast<std::size_t>(best)];
        }
        return changed;
    };

    assign();
    for (int iter = 0; iter < max_iter; ++iter) {
        // Empty clusters are reseeded from the point farthest from its centroid.
        for (int c = 0; c < d; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            Eigen::Index farthest = 0;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const int l = labels[static_cast<std::size_t>(i)];
                const double dist = (Z.row(i) - centroids.row(l)).squaredNorm();
                if (dist > far_d) {
                    far_d = dist;
                    farthest = i;
                }
            }
            centroids.row(c) = Z.row(farthest);
            --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(farthest)])];
            labels[static_cast<std::size_t>(farthest)] = c;
            counts[static_cast<std::size_t>(c)] = 1;
        }
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(d, Z.cols());
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(labels[static_cast<std::size_t>(i)]) += Z.row(i);
        }
        for (int c = 0; c < d; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centroids.row(c) =
                    sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            }
        }
        if (!assign()) break;
    }

    LloydOutcome out;
    out.labels = std::move(labels);
    out.centroids = std::move(centroids);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.wcss += (Z.row(i) - out.centroids.row(out.labels[static_cast<std::size_t>(i)]))
                        .squaredNorm();
    }
    return out;
}

}  // namespace detail

/// Lloyd iterations with k-means++ seeding; the restart with the lowest
/// within-cluster sum of squares wins. Deterministic given the seed.
inline KMeansResult kmeans(const Eigen::MatrixXd& Z, int d, int restarts = 10,
                           int max_iter = 100, std::uint64_t seed = 0) {
    const Eigen::Index n = Z.rows();
    if (d < 1) throw Error("number of categories must be positive");
    if (n < d) throw TooFewPoints("need at least d observations");

    detail::LloydOutcome best;
    best.wcss = std::numeric_limits<double>::infinity();
    for (int t = 0; t < std::max(restarts, 1); ++t) {
        std::mt19937_64 rng = make_engine(derive_seed(seed, static_cast<std::uint64_t>(t)));
        detail::LloydOutcome out =
            detail::lloyd(Z, detail::kmeanspp_centroids(Z, d, rng), max_iter);
        if (out.wcss < best.wcss) best = std::move(out);
    }
    KMeansResult result;
    result.partition = Partition::from_labels(best.labels);
    result.centroids = std::move(best.centroids);
    result.wcss = best.wcss;
    return result;
}

/// Fraction of observation pairs on which two partitions agree (together in
/// both or apart in both), computed from the contingency table.
inline double rand_index(const Partition& p1, const Partition& p2) {
    const Eigen::Index n = p1.n();
    if (n != p2.n()) {
        throw LengthMismatch("partitions have different lengths");
    }
    if (n < 2) {
        throw TooFewPoints("Rand index needs at least 2 observations");
    }
    using U = unsigned long long;
    auto choose2 = [](U x) { return x * (x - 1) / 2; };
    std::vector<U> cross(static_cast<std::size_t>(p1.d) * static_cast<std::size_t>(p2.d), 0);
    std::vector<U> a(static_cast<std::size_t>(p1.d), 0);
    std::vector<U> b(static_cast<std::size_t>(p2.d), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto l1 = static_cast<std::size_t>(p1.labels[static_cast<std::size_t>(i)]);
        const auto l2 = static_cast<std::size_t>(p2.labels[static_cast<std::size_t>(i)]);
        ++cross[l1 * static_cast<std::size_t>(p2.d) + l2];
        ++a[l1];
        ++b[l2];
    }
    U together_both = 0;
    for (U c : cross) together_both += choose2(c);
    U together_1 = 0;
    for (U c : a) together_1 += choose2(c);
    U together_2 = 0;
    for (U c : b) together_2 += choose2(c);
    const U total = choose2(static_cast<U>(n));
    const U agreements = total + 2 * together_both - together_1 - together_2;
    return static_cast<double>(agreements) / static_cast<double>(total);
}

/// Converts each change-point set into segment labels and applies the Rand
/// index.
inline double segmentation_rand_index(const std::vector<Eigen::Index>& true_cps,
                                      const std::vector<Eigen::Index>& est_cps,
                                      Eigen::Index n) {
    auto to_labels = [n](const std::vector<Eigen::Index>& cps) {
        std::vector<int> labels(static_cast<std::size_t>(n), 0);
        Eigen::Index prev = 0;
        int id = 0;
        for (const Eigen::Index z : cps) {
            if (z <= prev || z >= n) {
                throw Error("change points must be strictly ascending in 1..n-1");
            }
            prev = z;
        }
        std::size_t next = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            while (next < cps.size() && i >= cps[next]) {
                ++next;
                ++id;
            }
            labels[static_cast<std::size_t>(i)] = id;
        }
        return Partition::from_labels(labels);
    };
    return rand_index(to_labels(true_cps), to_labels(est_cps));
}

struct IterClusterConfig {
    int d = 2;
    int max_outer_iterations = 20;
    double ri_stop = 0.999;
    int kmeans_restarts = 10;
    int kmeans_max_iter = 100;
    TrrConfig trr;
    std::uint64_t seed = 0;
};

struct IterClusterResult {
    Partition partition;
    int outer_iterations = 0;
    bool converged = false;
    std::vector<int> q_hat_trace;
    std::vector<double> ri_trace;
};

namespace detail {

// Categories below size 2 cannot be centered; each one is merged into the
// category with the nearest centroid before the operators are rebuilt.
inline Partition repair_small_categories(const Partition& part, const Eigen::MatrixXd& Z) {
    std::vector<int> labels = part.labels;
    for (;;) {
        Partition current = Partition::from_labels(labels);
        int tiny = -1;
        for (int c = 0; c < current.d; ++c) {
            if (current.sizes[static_cast<std::size_t>(c)] < 2) {
                tiny = c;
                break;
            }
        }
        if (tiny < 0) return current;
        if (current.d <= 2) {
            throw CategoryTooSmall("cannot merge: fewer than 2 viable categories remain");
        }
        Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(current.d, Z.cols());
        for (Eigen::Index i = 0; i < current.n(); ++i) {
            centroids.row(current.labels[static_cast<std::size_t>(i)]) += Z.row(i);
        }
        for (int c = 0; c < current.d; ++c) {
            centroids.row(c) /= static_cast<double>(current.sizes[static_cast<std::size_t>(c)]);
        }
        int target = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < current.d; ++c) {
            if (c == tiny) continue;
            const double dist = (centroids.row(c) - centroids.row(tiny)).squaredNorm();
            if (dist < best) {
                best = dist;
                target = c;
            }
        }
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (current.labels[i] == tiny) labels[i] = target;
            else labels[i] = current.labels[i];
        }
    }
}

}  // namespace detail

/// Iterative subspace clustering: an uncorrected spectrum with d-1 directions
/// seeds the first partition; each outer round rebuilds the corrected
/// operators from the current partition, re-selects the dimension by the
/// ridge ratio, reduces, and re-clusters, until consecutive partitions have
/// Rand index above ri_stop.
inline IterClusterResult iterative_subspace_cluster(const Eigen::MatrixXd& X,
                                                    const IterClusterConfig& config,
                                                    std::optional<KernelSpec> kernel = {}) {
    const Eigen::Index n = X.rows();
    if (config.d < 2) throw CategoryTooSmall("need at least 2 categories");
    if (n < 2 * config.d) throw TooFewPoints("need at least 2*d observations");
    if (!(config.ri_stop > 0.0 && config.ri_stop <= 1.0)) {
        throw Error("ri_stop must lie in (0, 1]");
    }

    const KernelSpec spec = detail::resolve_kernel(X, kernel);
    const GramMatrix K = gram(X, spec);
    const GramEigen ge(K);
    const Eigen::MatrixXd global = detail::grand_mean_centering(n);
    const double c_n =
        config.trr.c_n.value_or(detail::ridge_or_floor(n, X.cols(), RidgeMode::Kernel));

    IterClusterResult result;

    const int q0 = std::max(1, std::min(config.d - 1, static_cast<int>(n) - 1));
    const Spectrum initial = ge.corrected_spectrum(global);
    Eigen::MatrixXd reduced = K.values * initial.coefficients.leftCols(q0);
    Partition current =
        kmeans(reduced, config.d, config.kmeans_restarts, config.kmeans_max_iter,
               derive_seed(config.seed, 0))
            .partition;
    result.q_hat_trace.push_back(q0);

    for (int outer = 1; outer <= config.max_outer_iterations; ++outer) {
        const Partition repaired = detail::repair_small_categories(current, reduced);
        const CenteringPair pair = cluster_operators(repaired);
        const Spectrum spectrum = ge.corrected_spectrum(pair.corrected());
        const TrrResult sel = trr_select(spectrum.eigenvalues, c_n, config.trr.tau);
        reduced = K.values * spectrum.coefficients.leftCols(sel.q_hat);
        const Partition next =
            kmeans(reduced, config.d, config.kmeans_restarts, config.kmeans_max_iter,
                   derive_seed(config.seed, static_cast<std::uint64_t>(outer)))
                .partition;
        const double ri = rand_index(next, current);
        result.q_hat_trace.push_back(sel.q_hat);
        result.ri_trace.push_back(ri);
        result.outer_iterations = outer;
        current = next;
        if (ri > config.ri_stop) {
            result.converged = true;
            break;
        }
    }
    result.partition = std::move(current);
    return result;
}

}  // namespace ckpca
