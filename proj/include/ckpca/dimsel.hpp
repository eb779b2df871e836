#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "ckpca/errors.hpp"

namespace ckpca {

enum class RidgeMode { Kernel, Linear };

/// Default ridge for the thresholding ridge ratio:
/// 0.2*ln(ln n)*sqrt(1/n) (Kernel) or 0.2*ln(ln n)*sqrt(p/n) (Linear).
inline double default_ridge(Eigen::Index n, Eigen::Index p, RidgeMode mode) {
    if (n < 16) {
        throw NTooSmall("ridge formula requires n >= 16");
    }
    if (p < 1) {
        throw DimensionMismatch("p must be at least 1");
    }
    const double base = 0.2 * std::log(std::log(static_cast<double>(n)));
    const double scale = (mode == RidgeMode::Kernel)
                             ? std::sqrt(1.0 / static_cast<double>(n))
                             : std::sqrt(static_cast<double>(p) / static_cast<double>(n));
    return base * scale;
}

struct TrrConfig {
    double tau = 0.5;
    std::optional<double> c_n;  // defaults to the mode formula when absent
    RidgeMode mode = RidgeMode::Kernel;
};

struct TrrResult {
    int q_hat = 1;
    bool significant = false;
};

/// Largest k whose ridge ratio (lambda_{k+1}+c)/(lambda_k+c) falls below tau.
/// Negative eigenvalues are clamped to zero before forming ratios; when no k
/// qualifies the result is q_hat = 1 with significant = false.
inline TrrResult trr_select(const Eigen::VectorXd& eigenvalues, double c_n, double tau) {
    if (eigenvalues.size() < 2) {
        throw TooFewPoints("ridge ratio selection needs at least 2 eigenvalues");
    }
    if (!(c_n > 0.0)) {
        throw Error("ridge value must be positive");
    }
    if (!(tau > 0.0 && tau < 1.0)) {
        throw Error("tau must lie in (0, 1)");
    }
    Eigen::VectorXd lam = eigenvalues.cwiseMax(0.0);
    const double jitter = 1e-12 * std::max(1.0, lam(0));
    for (Eigen::Index k = 0; k + 1 < lam.size(); ++k) {
        if (lam(k + 1) > lam(k) + jitter) {
            throw Error("eigenvalues must be nonincreasing after clamping");
        }
        lam(k + 1) = std::min(lam(k + 1), lam(k));
    }
    TrrResult result;
    for (Eigen::Index k = 0; k + 1 < lam.size(); ++k) {
        const double ratio = (lam(k + 1) + c_n) / (lam(k) + c_n);
        if (ratio <= tau) {
            result.q_hat = static_cast<int>(k) + 1;
            result.significant = true;
        }
    }
    if (!result.significant) {
        result.q_hat = 1;
    }
    return result;
}

/// Smallest q whose leading eigenvalues reach `ratio` of the total mass
/// (negatives clamped); the selector used by the uncorrected baseline.
inline int cumulative_variance_dimension(const Eigen::VectorXd& eigenvalues, double ratio) {
    Eigen::VectorXd lam = eigenvalues.cwiseMax(0.0);
    const double total = lam.sum();
    if (!(total > 0.0)) {
        return 1;
    }
    double acc = 0.0;
    for (Eigen::Index k = 0; k < lam.size(); ++k) {
        acc += lam(k);
        if (acc >= ratio * total) {
            return static_cast<int>(k) + 1;
        }
    }
    return static_cast<int>(lam.size());
}

}  // namespace ckpca
