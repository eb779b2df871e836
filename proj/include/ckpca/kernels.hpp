#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "ckpca/errors.hpp"

namespace ckpca {

enum class KernelFamily { Gaussian, Laplace, Exponential, Linear };

inline std::string to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::Gaussian: return "gaussian";
        case KernelFamily::Laplace: return "laplace";
        case KernelFamily::Exponential: return "exponential";
        case KernelFamily::Linear: return "linear";
    }
    return "unknown";
}

/// Kernel function with its bandwidth h and the multiplier m of the
/// data-driven rule h^2 = m * p * mean(column variances). A non-positive
/// bandwidth requests the data-driven rule wherever data is available.
struct KernelSpec {
    KernelFamily family = KernelFamily::Gaussian;
    double bandwidth = 0.0;  // ignored by Linear
    double m = 0.8;

    void validate() const {
        if (m <= 0.0) {
            throw InvalidKernel("kernel tuning multiplier m must be positive");
        }
        if (family != KernelFamily::Linear && !(bandwidth > 0.0)) {
            throw InvalidKernel("kernel bandwidth must be positive");
        }
    }
};

/// n x n symmetric positive semidefinite matrix of pairwise kernel values.
struct GramMatrix {
    Eigen::MatrixXd values;

    Eigen::Index size() const { return values.rows(); }
};

/// Bandwidth rule h = sqrt(m * p * mean over columns of the unbiased sample
/// variance). Deterministic; invariant under row permutation.
inline double select_bandwidth(const Eigen::MatrixXd& X, double m = 0.8) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (n < 2) {
        throw TooFewPoints("bandwidth selection needs at least 2 observations");
    }
    if (m <= 0.0) {
        throw InvalidKernel("kernel tuning multiplier m must be positive");
    }
    double total_var = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double mean = X.col(j).mean();
        total_var += (X.col(j).array() - mean).square().sum() / static_cast<double>(n - 1);
    }
    const double mean_var = total_var / static_cast<double>(p);
    if (mean_var <= 0.0) {
        throw AllConstantData("every column has zero sample variance");
    }
    return std::sqrt(m * static_cast<double>(p) * mean_var);
}

namespace detail {

// Kernel value from contiguous coordinate views; shared by kernel_eval and gram.
template <typename VecA, typename VecB>
double kernel_value(const KernelSpec& spec, const VecA& x, const VecB& y) {
    switch (spec.family) {
        case KernelFamily::Gaussian: {
            const double sq = (x - y).squaredNorm();
            return std::exp(-sq / (2.0 * spec.bandwidth * spec.bandwidth));
        }
        case KernelFamily::Laplace: {
            const double l1 = (x - y).cwiseAbs().sum();
            return std::exp(-l1 / spec.bandwidth);
        }
        case KernelFamily::Exponential: {
            const double l2 = (x - y).norm();
            return std::exp(-l2 / spec.bandwidth);
        }
        case KernelFamily::Linear:
            return x.dot(y);
    }
    throw InvalidKernel("unknown kernel family");
}

}  // namespace detail

inline double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y) {
    spec.validate();
    if (x.size() != y.size()) {
        throw DimensionMismatch("kernel arguments have different lengths");
    }
    return detail::kernel_value(spec, x, y);
}

/// Pairwise kernel matrix. Each unordered pair is evaluated once, so the
/// result is exactly symmetric; translation-invariant families get an exact
/// unit diagonal.
inline GramMatrix gram(const Eigen::MatrixXd& X, const KernelSpec& spec) {
    spec.validate();
    const Eigen::Index n = X.rows();
    if (n < 2) {
        throw TooFewPoints("Gram matrix needs at least 2 observations");
    }
    // Transpose once so observations are contiguous columns.
    const Eigen::MatrixXd xt = X.transpose();
    GramMatrix K;
    K.values.resize(n, n);
    const bool translation_invariant = spec.family != KernelFamily::Linear;
    for (Eigen::Index i = 0; i < n; ++i) {
        K.values(i, i) = translation_invariant ? 1.0 : xt.col(i).squaredNorm();
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = detail::kernel_value(spec, xt.col(i), xt.col(j));
            K.values(i, j) = v;
            K.values(j, i) = v;
        }
    }
    return K;
}

}  // namespace ckpca
