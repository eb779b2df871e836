#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "ckpca/errors.hpp"
#include "ckpca/reduction.hpp"
#include "ckpca/seeding.hpp"

namespace ckpca {

struct DetectorConfig {
    int min_size = 30;
    int n_permutations = 199;
    double significance = 0.05;
    std::optional<int> max_changes;
    std::uint64_t seed = 0;

    void validate() const {
        if (min_size < 2) throw Error("min_size must be at least 2");
        if (n_permutations < 19) throw Error("need at least 19 permutations");
        if (!(significance > 0.0 && significance < 1.0)) {
            throw Error("significance must lie in (0, 1)");
        }
        if (max_changes.has_value() && *max_changes < 0) {
            throw Error("max_changes must be nonnegative");
        }
    }
};

/// One tested segment: the best split found in [begin, end), its statistic
/// and permutation p-value, and whether the split was accepted.
struct SplitTest {
    Eigen::Index begin = 0;
    Eigen::Index end = 0;
    Eigen::Index split = 0;  // size of the left part, i.e. the change location
    double statistic = 0.0;
    double p_value = 1.0;
    bool accepted = false;
};

/// Estimated change locations. A change at z means the distributions differ
/// between positions <= z and > z (1-based reading of the 0-based row index).
struct ChangePointResult {
    std::vector<Eigen::Index> change_points;
    Eigen::Index s_hat = 0;
    std::vector<SplitTest> tests;
    // Reduction metadata when the detector ran on reduced data.
    int q_hat = 0;
    bool significant_direction = true;
    double bandwidth = 0.0;
    double c_n = 0.0;
};

/// Two-sample energy divergence with Euclidean distances (exponent 1):
/// (mk/(m+k)) * [2*mean cross-distance - mean within-A - mean within-B].
/// Exactly symmetric in its arguments.
inline double energy_statistic(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    const Eigen::Index m = A.rows();
    const Eigen::Index k = B.rows();
    if (m < 2 || k < 2) {
        throw TooFewPoints("energy statistic needs at least 2 points per sample");
    }
    if (A.cols() != B.cols()) {
        throw DimensionMismatch("samples have different dimensions");
    }
    Eigen::MatrixXd cross(m, k);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            cross(i, j) = (A.row(i) - B.row(j)).norm();
        }
    }
    // Accumulating in both nesting orders and averaging keeps the result
    // bit-identical under argument swap; the loops are written out so the
    // summation order does not depend on the memory layout.
    double sum_rows = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) sum_rows += cross(i, j);
    }
    double sum_cols = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
        for (Eigen::Index i = 0; i < m; ++i) sum_cols += cross(i, j);
    }
    const double between = 0.5 * (sum_rows + sum_cols);

    auto within_mean = [](const Eigen::MatrixXd& Z) {
        const Eigen::Index r = Z.rows();
        double sum = 0.0;
        for (Eigen::Index i = 0; i < r; ++i) {
            for (Eigen::Index j = i + 1; j < r; ++j) {
                sum += (Z.row(i) - Z.row(j)).norm();
            }
        }
        return sum / (0.5 * static_cast<double>(r) * static_cast<double>(r - 1));
    };

    const double dm = static_cast<double>(m);
    const double dk = static_cast<double>(k);
    const double bracket =
        2.0 * between / (dm * dk) - (within_mean(A) + within_mean(B));
    return (dm * dk / (dm + dk)) * bracket;
}

namespace detail {

inline Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& Z) {
    const Eigen::Index n = Z.rows();
    Eigen::MatrixXd d(n, n);
    const Eigen::MatrixXd zt = Z.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = (zt.col(i) - zt.col(j)).norm();
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

struct BestSplit {
    Eigen::Index offset = -1;  // size of the left part within the segment
    double statistic = -std::numeric_limits<double>::infinity();
};

// Scans every admissible split of `rows` (data row ids in segment order),
// maintaining the three distance sums incrementally; O(L^2) lookups total.
// Ties keep the smallest split index.
inline BestSplit best_split(const Eigen::MatrixXd& D, const std::vector<Eigen::Index>& rows,
                            Eigen::Index min_size) {
    const Eigen::Index len = static_cast<Eigen::Index>(rows.size());
    BestSplit best;
    if (len < 2 * min_size) return best;

    double within_left = 0.0;
    double within_right = 0.0;
    double between = 0.0;
    for (Eigen::Index j = 1; j < len; ++j) {
        between += D(rows[0], rows[j]);
        for (Eigen::Index i = 1; i < j; ++i) {
            within_right += D(rows[i], rows[j]);
        }
    }

    for (Eigen::Index z = 1; z <= len - min_size; ++z) {
        if (z >= 2) {
            // Move rows[z-1] from the right block to the left block.
            const Eigen::Index e = rows[z - 1];
            double to_left = 0.0;
            for (Eigen::Index i = 0; i < z - 1; ++i) to_left += D(rows[i], e);
            double to_right = 0.0;
            for (Eigen::Index j = z; j < len; ++j) to_right += D(e, rows[j]);
            within_left += to_left;
            within_right -= to_right;
            between += to_right - to_left;
        }
        if (z < min_size) continue;
        const double m = static_cast<double>(z);
        const double k = static_cast<double>(len - z);
        const double bracket = 2.0 * between / (m * k) -
                               within_left / (0.5 * m * (m - 1.0)) -
                               within_right / (0.5 * k * (k - 1.0));
        const double stat = (m * k / (m + k)) * bracket;
        if (stat > best.statistic) {
            best.statistic = stat;
            best.offset = z;
        }
    }
    return best;
}

}  // namespace detail

/// Hierarchical divisive segmentation: each current segment is split at the
/// energy-maximizing location if a within-segment permutation test (with
/// re-maximization per permutation) accepts it at the configured level.
/// Deterministic given the seed: every segment draws its permutation seeds
/// from a generator keyed on (seed, begin, end), independent of traversal.
inline ChangePointResult divisive_segment(const Eigen::MatrixXd& Z,
                                          const DetectorConfig& config) {
    config.validate();
    const Eigen::Index n = Z.rows();
    const Eigen::Index min_size = config.min_size;
    if (n < 2 * min_size) {
        throw TooShort("need at least 2*min_size observations");
    }
    const Eigen::MatrixXd D = detail::pairwise_distances(Z);

    ChangePointResult result;
    result.q_hat = static_cast<int>(Z.cols());

    auto test_segment = [&](Eigen::Index begin, Eigen::Index end, auto&& self) -> void {
        if (end - begin < 2 * min_size) return;
        if (config.max_changes.has_value() &&
            static_cast<int>(result.change_points.size()) >= *config.max_changes) {
            return;
        }
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(end - begin));
        std::iota(rows.begin(), rows.end(), begin);
        const detail::BestSplit observed = detail::best_split(D, rows, min_size);
        if (observed.offset < 0) return;

        std::mt19937_64 seeder = make_engine(
            derive_seed(config.seed, static_cast<std::uint64_t>(begin),
                        static_cast<std::uint64_t>(end)));
        std::vector<std::uint64_t> perm_seeds(static_cast<std::size_t>(config.n_permutations));
        for (auto& s : perm_seeds) s = seeder();

        int count_ge = 0;
        std::vector<Eigen::Index> shuffled = rows;
        for (const std::uint64_t ps : perm_seeds) {
            std::mt19937_64 rng(ps);
            shuffled.assign(rows.begin(), rows.end());
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            const detail::BestSplit permuted = detail::best_split(D, shuffled, min_size);
            if (permuted.statistic >= observed.statistic) ++count_ge;
        }
        const double p_value =
            (1.0 + count_ge) / (1.0 + static_cast<double>(config.n_permutations));
        const bool accepted = p_value <= config.significance;

        SplitTest test;
        test.begin = begin;
        test.end = end;
        test.split = begin + observed.offset;
        test.statistic = observed.statistic;
        test.p_value = p_value;
        test.accepted = accepted;
        result.tests.push_back(test);

        if (accepted) {
            result.change_points.push_back(test.split);
            self(begin, test.split, self);
            self(test.split, end, self);
        }
    };
    test_segment(0, n, test_segment);

    std::sort(result.change_points.begin(), result.change_points.end());
    result.s_hat = static_cast<Eigen::Index>(result.change_points.size());
    return result;
}

enum class PipelineMode { Ckpca, Cpca, Raw, KpcaBaseline };

inline std::string to_string(PipelineMode mode) {
    switch (mode) {
        case PipelineMode::Ckpca: return "ckpca";
        case PipelineMode::Cpca: return "cpca";
        case PipelineMode::Raw: return "raw";
        case PipelineMode::KpcaBaseline: return "kpca";
    }
    return "unknown";
}

struct PipelineConfig {
    PipelineMode mode = PipelineMode::Ckpca;
    std::optional<KernelSpec> kernel;
    std::optional<Eigen::Index> alpha;
    TrrConfig trr;
    DetectorConfig detector;
    double kpca_cumulative_variance = 0.95;
};

/// End-to-end detection: dimension reduction (per mode) followed by divisive
/// segmentation on the reduced rows. Raw mode skips the reduction; the
/// uncorrected baseline selects its dimension by cumulative variance.
inline ChangePointResult detect_pipeline(const Eigen::MatrixXd& X, const PipelineConfig& config) {
    const Eigen::Index n = X.rows();
    switch (config.mode) {
        case PipelineMode::Raw: {
            ChangePointResult result = divisive_segment(X, config.detector);
            result.q_hat = static_cast<int>(X.cols());
            return result;
        }
        case PipelineMode::Ckpca:
        case PipelineMode::Cpca: {
            ReduceConfig rc;
            rc.mode = config.mode == PipelineMode::Ckpca ? ReductionMode::CkpcaChangePoint
                                                         : ReductionMode::Cpca;
            rc.kernel = config.kernel;
            rc.alpha = config.alpha;
            rc.trr = config.trr;
            const ReducedData red = reduce(X, rc);
            ChangePointResult result = divisive_segment(red.reduced, config.detector);
            result.q_hat = red.q_hat;
            result.significant_direction = red.significant;
            result.bandwidth = red.bandwidth;
            result.c_n = red.c_n;
            return result;
        }
        case PipelineMode::KpcaBaseline: {
            const KernelSpec kernel = detail::resolve_kernel(X, config.kernel);
            const GramMatrix K = gram(X, kernel);
            const GramEigen ge(K);
            const CenteringPair pair = changepoint_operators(make_segments(n, config.alpha));
            const Spectrum spectrum = ge.corrected_spectrum(pair.global);
            const int q =
                cumulative_variance_dimension(spectrum.eigenvalues, config.kpca_cumulative_variance);
            const Eigen::MatrixXd reduced = K.values * spectrum.coefficients.leftCols(q);
            ChangePointResult result = divisive_segment(reduced, config.detector);
            result.q_hat = q;
            result.bandwidth = kernel.family == KernelFamily::Linear ? 0.0 : kernel.bandwidth;
            return result;
        }
    }
    throw Error("unknown pipeline mode");
}

}  // namespace ckpca
