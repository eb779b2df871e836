#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>

#include "ckpca/dimsel.hpp"
#include "ckpca/errors.hpp"
#include "ckpca/kernels.hpp"
#include "ckpca/operators.hpp"

namespace ckpca {

/// Real spectrum of a corrected kernel problem, eigenvalues descending.
/// Column i of `coefficients` is the expansion vector alpha_i (length n,
/// normalized so alpha^T K alpha = 1) or, in the linear special case, the
/// eigenvector b_i (length p, unit Euclidean norm).
struct Spectrum {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd coefficients;
};

/// p x p corrected scatter matrix of the linear special case.
struct DeltaMatrix {
    Eigen::MatrixXd values;
};

namespace detail {

// Flips each column so that its entry of largest magnitude is positive.
inline void fix_column_signs(Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        Eigen::Index argmax = 0;
        m.col(j).cwiseAbs().maxCoeff(&argmax);
        if (m(argmax, j) < 0.0) {
            m.col(j) = -m.col(j);
        }
    }
}

}  // namespace detail

/// Rank-revealing eigendecomposition of a Gram matrix, reused across
/// corrected-spectrum solves that share the same kernel matrix.
///
/// The product C*K is not symmetric, so its spectrum is computed through the
/// congruent symmetric problem K^{1/2} C K^{1/2}: both have the same nonzero
/// eigenvalues, the symmetric form keeps them real, and eigenvectors map back
/// through the pseudo-inverse square root. Eigenvalues of K below
/// rank_tol_factor * lambda_max are treated as zero.
class GramEigen {
  public:
    explicit GramEigen(const GramMatrix& K, double rank_tol_factor = 1e-10)
        : K_(K.values) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K_);
        if (es.info() != Eigen::Success) {
            throw Error("Gram eigendecomposition failed");
        }
        basis_ = es.eigenvectors();
        lambda_ = es.eigenvalues();  // ascending
        const double lambda_max = lambda_.size() > 0 ? lambda_(lambda_.size() - 1) : 0.0;
        const double tol = rank_tol_factor * std::max(lambda_max, 0.0);
        const Eigen::Index n = lambda_.size();
        sqrt_lambda_.setZero(n);
        inv_sqrt_lambda_.setZero(n);
        rank_ = 0;
        if (lambda_max > 0.0) {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (lambda_(i) > tol) {
                    sqrt_lambda_(i) = std::sqrt(lambda_(i));
                    inv_sqrt_lambda_(i) = 1.0 / sqrt_lambda_(i);
                    ++rank_;
                }
            }
        }
    }

    Eigen::Index size() const { return K_.rows(); }
    Eigen::Index rank() const { return rank_; }
    const Eigen::MatrixXd& gram() const { return K_; }

    /// Spectrum of C*K for a symmetric centering matrix C.
    Spectrum corrected_spectrum(const Eigen::MatrixXd& C) const {
        const Eigen::Index n = size();
        if (C.rows() != n || C.cols() != n) {
            throw DimensionMismatch("centering matrix size does not match the Gram matrix");
        }
        if (rank_ == 0) {
            throw DegenerateGram("Gram matrix has rank 0");
        }
        // Work in the eigenbasis of K: K^{1/2} C K^{1/2} = Q W Q^T with
        // W = Lambda^{1/2} (Q^T C Q) Lambda^{1/2}.
        Eigen::MatrixXd projected = basis_.transpose() * (C * basis_);
        Eigen::MatrixXd w = sqrt_lambda_.asDiagonal() * projected * sqrt_lambda_.asDiagonal();
        w = 0.5 * (w + w.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w);
        if (es.info() != Eigen::Success) {
            throw Error("corrected eigendecomposition failed");
        }
        Spectrum spectrum;
        spectrum.eigenvalues = es.eigenvalues().reverse();
        Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();
        // alpha = K^{+1/2} (Q v) = Q (Lambda^{+1/2} v); alpha^T K alpha equals
        // the squared norm of v restricted to the retained eigendirections.
        Eigen::MatrixXd scaled = inv_sqrt_lambda_.asDiagonal() * vecs;
        for (Eigen::Index j = 0; j < vecs.cols(); ++j) {
            double norm_sq = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (inv_sqrt_lambda_(i) > 0.0) {
                    norm_sq += vecs(i, j) * vecs(i, j);
                }
            }
            if (norm_sq > 1e-300) {
                scaled.col(j) /= std::sqrt(norm_sq);
            }
        }
        spectrum.coefficients = basis_ * scaled;
        detail::fix_column_signs(spectrum.coefficients);
        return spectrum;
    }

  private:
    Eigen::MatrixXd K_;
    Eigen::MatrixXd basis_;
    Eigen::VectorXd lambda_;
    Eigen::VectorXd sqrt_lambda_;
    Eigen::VectorXd inv_sqrt_lambda_;
    Eigen::Index rank_ = 0;
};

inline Spectrum corrected_kernel_spectrum(const GramMatrix& K, const CenteringPair& centering) {
    GramEigen ge(K);
    return ge.corrected_spectrum(centering.corrected());
}

/// Linear special case: Delta_n = X^T (L - U) X, exactly symmetric.
inline DeltaMatrix cpca_delta(const Eigen::MatrixXd& X, const SegmentScheme& scheme) {
    if (X.rows() != scheme.n) {
        throw DimensionMismatch("segment scheme does not match the data");
    }
    const CenteringPair pair = changepoint_operators(scheme);
    const Eigen::MatrixXd c = pair.corrected();
    const Eigen::MatrixXd t = X.transpose() * (c * X);
    DeltaMatrix delta;
    delta.values = 0.5 * (t + t.transpose());
    return delta;
}

enum class ReductionMode { CkpcaChangePoint, CkpcaCluster, Cpca };

/// Output of a reduction: the selected dimension, the coefficient basis B_n,
/// and the reduced data K*B_n (kernel modes) or X*B_n (linear mode). When the
/// ridge-ratio selector finds no significant direction, q_hat falls back to 1
/// and `significant` is false.
struct ReducedData {
    ReductionMode mode = ReductionMode::CkpcaChangePoint;
    int q_hat = 1;
    bool significant = false;
    Eigen::MatrixXd basis;
    Eigen::MatrixXd reduced;
    Eigen::VectorXd eigenvalues;
    double c_n = 0.0;
    double tau = 0.5;
    double bandwidth = 0.0;  // 0 when no kernel bandwidth is involved
};

struct ReduceConfig {
    ReductionMode mode = ReductionMode::CkpcaChangePoint;
    std::optional<KernelSpec> kernel;        // bandwidth <= 0 requests the data-driven rule
    std::optional<Eigen::Index> alpha;       // segment length override (ordered modes)
    std::optional<Partition> partition;      // required for the cluster mode
    TrrConfig trr;
};

namespace detail {

// The ridge formula needs n >= 16; for smaller toy inputs the n-term is
// frozen at its n = 16 value so tiny inputs still reduce instead of failing.
inline double ridge_or_floor(Eigen::Index n, Eigen::Index p, RidgeMode mode) {
    const Eigen::Index floor_n = std::max<Eigen::Index>(n, 16);
    const double base = 0.2 * std::log(std::log(static_cast<double>(floor_n)));
    const double scale = (mode == RidgeMode::Kernel)
                             ? std::sqrt(1.0 / static_cast<double>(n))
                             : std::sqrt(static_cast<double>(p) / static_cast<double>(n));
    return base * scale;
}

// Data-driven bandwidth; constant data gets an arbitrary positive bandwidth
// since every translation-invariant kernel then yields the all-ones Gram
// matrix regardless of h.
inline KernelSpec resolve_kernel(const Eigen::MatrixXd& X, std::optional<KernelSpec> spec) {
    KernelSpec k = spec.value_or(KernelSpec{});
    if (k.family != KernelFamily::Linear && !(k.bandwidth > 0.0)) {
        try {
            k.bandwidth = select_bandwidth(X, k.m);
        } catch (const AllConstantData&) {
            k.bandwidth = 1.0;
        }
    }
    return k;
}

}  // namespace detail

inline ReducedData reduce(const Eigen::MatrixXd& X, const ReduceConfig& config) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    ReducedData out;
    out.mode = config.mode;
    out.tau = config.trr.tau;
    const auto select = [&out](const Eigen::VectorXd& values, double c_n) {
        if (values.size() < 2) return TrrResult{1, false};
        return trr_select(values, c_n, out.tau);
    };

    Eigen::MatrixXd feature;  // K (kernel modes) or X (linear mode)
    if (config.mode == ReductionMode::Cpca) {
        const SegmentScheme scheme = make_segments(n, config.alpha);
        const DeltaMatrix delta = cpca_delta(X, scheme);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(delta.values);
        if (es.info() != Eigen::Success) {
            throw Error("eigendecomposition of the corrected scatter failed");
        }
        out.eigenvalues = es.eigenvalues().reverse();
        Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();
        detail::fix_column_signs(vecs);
        out.c_n = config.trr.c_n.value_or(detail::ridge_or_floor(n, p, RidgeMode::Linear));
        const TrrResult sel = select(out.eigenvalues, out.c_n);
        out.q_hat = sel.q_hat;
        out.significant = sel.significant;
        out.basis = vecs.leftCols(out.q_hat);
        feature = X;
    } else {
        const KernelSpec kernel = detail::resolve_kernel(X, config.kernel);
        out.bandwidth = kernel.family == KernelFamily::Linear ? 0.0 : kernel.bandwidth;
        const GramMatrix K = gram(X, kernel);
        CenteringPair pair;
        if (config.mode == ReductionMode::CkpcaCluster) {
            if (!config.partition.has_value()) {
                throw Error("cluster reduction requires a partition");
            }
            if (config.partition->n() != n) {
                throw LengthMismatch("partition length does not match the data");
            }
            pair = cluster_operators(*config.partition);
        } else {
            pair = changepoint_operators(make_segments(n, config.alpha));
        }
        const Spectrum spectrum = corrected_kernel_spectrum(K, pair);
        out.eigenvalues = spectrum.eigenvalues;
        out.c_n = config.trr.c_n.value_or(detail::ridge_or_floor(n, p, RidgeMode::Kernel));
        const TrrResult sel = select(out.eigenvalues, out.c_n);
        out.q_hat = sel.q_hat;
        out.significant = sel.significant;
        out.basis = spectrum.coefficients.leftCols(out.q_hat);
        feature = K.values;
    }
    out.reduced = feature * out.basis;
    return out;
}

}  // namespace ckpca
