#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ckpca/errors.hpp"
#include "ckpca/operators.hpp"
#include "ckpca/seeding.hpp"

namespace ckpca {

enum class ScenarioKind { Ex1Case1, Ex1Case2, Ex2, MeanShift, ClusterShells };
enum class Balance { Balanced, Imbalanced };

inline std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::Ex1Case1: return "ex1case1";
        case ScenarioKind::Ex1Case2: return "ex1case2";
        case ScenarioKind::Ex2: return "ex2";
        case ScenarioKind::MeanShift: return "meanshift";
        case ScenarioKind::ClusterShells: return "clustershells";
    }
    return "unknown";
}

/// Synthetic scenario description. Change-point kinds emit n rows over 8
/// segments; the balanced layout puts changes at i*n/8, the imbalanced layout
/// is the fixed pattern (30,170,350,440,520,630,710) with n = 800.
/// ClusterShells emits d = 3 spherical shells with radii in [2k-2, 2k-1].
struct Scenario {
    ScenarioKind kind = ScenarioKind::Ex1Case1;
    Eigen::Index p = 100;
    Eigen::Index n = 800;
    Balance balance = Balance::Balanced;
    double b = 0.5;             // covariance parameter of the Ex1 cases
    double df = 4.0;            // t degrees of freedom (Ex2)
    double shift = 2.0;         // mean jump magnitude (MeanShift)
    bool t_unit_variance = true;  // rescale the t draws to unit-variance margins
    double outlier_fraction = 0.0;
    double outlier_magnitude = 5.0;
    double outlier_sparsity = 0.05;
    std::uint64_t seed = 0;
};

struct GeneratedData {
    Eigen::MatrixXd X;
    std::vector<Eigen::Index> change_points;  // change-point kinds
    std::vector<int> labels;                  // cluster kinds
};

/// Rows i.i.d. N(mean, cov). The covariance is factored by Cholesky with an
/// eigendecomposition fallback for semidefinite inputs.
inline Eigen::MatrixXd sample_mvnormal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                       Eigen::Index count, std::mt19937_64& rng) {
    const Eigen::Index p = mean.size();
    if (cov.rows() != p || cov.cols() != p) {
        throw DimensionMismatch("covariance size does not match the mean");
    }
    Eigen::MatrixXd factor;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) {
        factor = llt.matrixL();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        const double max_eig = es.eigenvalues().cwiseAbs().maxCoeff();
        if ((es.eigenvalues().array() < -1e-8 * std::max(max_eig, 1.0)).any()) {
            throw NotPSD("covariance has a negative eigenvalue");
        }
        factor = es.eigenvectors() *
                 es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd out(count, p);
    Eigen::VectorXd z(p);
    for (Eigen::Index i = 0; i < count; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) z(j) = normal(rng);
        out.row(i) = (mean + factor * z).transpose();
    }
    return out;
}

/// Rows i.i.d. multivariate t via the scale mixture z / sqrt(w/df) with
/// z ~ N(0, scale) and w ~ chi^2_df; row covariance is scale * df/(df-2).
inline Eigen::MatrixXd sample_mvt(double df, const Eigen::MatrixXd& scale, Eigen::Index count,
                                  std::mt19937_64& rng) {
    if (!(df > 0.0)) {
        throw BadDf("degrees of freedom must be positive");
    }
    const Eigen::Index p = scale.rows();
    Eigen::MatrixXd gauss = sample_mvnormal(Eigen::VectorXd::Zero(p), scale, count, rng);
    std::chi_squared_distribution<double> chi2(df);
    for (Eigen::Index i = 0; i < count; ++i) {
        const double w = chi2(rng);
        gauss.row(i) /= std::sqrt(w / df);
    }
    return gauss;
}

namespace detail {

inline Eigen::MatrixXd ar1_covariance(Eigen::Index p, double rho) {
    Eigen::MatrixXd cov(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            cov(i, j) = std::pow(rho, std::abs(static_cast<double>(i - j)));
        }
    }
    return cov;
}

// 1.5*I plus equicorrelation: diagonal 2.5, off-diagonal b.
inline Eigen::MatrixXd ex1_case1_covariance(Eigen::Index p, double b) {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(p, p, b);
    cov.diagonal().setConstant(2.5);
    return cov;
}

// 1.5*I plus the AR(b) profile: diagonal 2.5, off-diagonal b^|i-j|.
inline Eigen::MatrixXd ex1_case2_covariance(Eigen::Index p, double b) {
    Eigen::MatrixXd cov = ar1_covariance(p, b);
    cov.diagonal().array() += 1.5;
    return cov;
}

inline Eigen::MatrixXd sample_uniform_box(double half_width, Eigen::Index count,
                                          Eigen::Index p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(-half_width, half_width);
    Eigen::MatrixXd out(count, p);
    for (Eigen::Index i = 0; i < count; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) out(i, j) = uni(rng);
    }
    return out;
}

inline std::vector<Eigen::Index> changepoint_layout(const Scenario& scenario) {
    if (scenario.balance == Balance::Imbalanced) {
        if (scenario.n != 800) {
            throw BadScenario("the imbalanced layout is defined for n = 800");
        }
        return {30, 170, 350, 440, 520, 630, 710};
    }
    if (scenario.n < 8 || scenario.n % 8 != 0) {
        throw BadScenario("the balanced layout needs n divisible by 8");
    }
    std::vector<Eigen::Index> cps;
    for (Eigen::Index i = 1; i <= 7; ++i) cps.push_back(i * scenario.n / 8);
    return cps;
}

}  // namespace detail

/// Draws one scenario instance together with its ground truth.
inline GeneratedData generate(const Scenario& scenario) {
    if (scenario.p < 1) throw BadScenario("p must be at least 1");
    std::mt19937_64 rng = make_engine(scenario.seed);
    GeneratedData data;

    if (scenario.kind == ScenarioKind::ClusterShells) {
        std::vector<Eigen::Index> sizes;
        if (scenario.balance == Balance::Imbalanced) {
            if (scenario.n != 600) {
                throw BadScenario("the imbalanced shell scenario is defined for n = 600");
            }
            sizes = {300, 200, 100};
        } else {
            if (scenario.n < 6) throw BadScenario("need at least 2 points per shell");
            const Eigen::Index base = scenario.n / 3;
            sizes = {base, base, scenario.n - 2 * base};
        }
        data.X.resize(scenario.n, scenario.p);
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd direction(scenario.p);
        Eigen::Index row = 0;
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            const double lo = 2.0 * static_cast<double>(k + 1) - 2.0;
            const double hi = lo + 1.0;
            std::uniform_real_distribution<double> radius(lo, hi);
            for (Eigen::Index i = 0; i < sizes[k]; ++i, ++row) {
                const double sigma = radius(rng);
                for (Eigen::Index j = 0; j < scenario.p; ++j) direction(j) = normal(rng);
                direction /= direction.norm();
                data.X.row(row) = (sigma * direction).transpose();
                data.labels.push_back(static_cast<int>(k));
            }
        }
        return data;
    }

    data.change_points = detail::changepoint_layout(scenario);
    data.X.resize(scenario.n, scenario.p);
    std::vector<Eigen::Index> bounds;
    bounds.push_back(0);
    bounds.insert(bounds.end(), data.change_points.begin(), data.change_points.end());
    bounds.push_back(scenario.n);

    Eigen::MatrixXd cov_a;
    switch (scenario.kind) {
        case ScenarioKind::Ex1Case1:
            cov_a = detail::ex1_case1_covariance(scenario.p, scenario.b);
            break;
        case ScenarioKind::Ex1Case2:
            cov_a = detail::ex1_case2_covariance(scenario.p, scenario.b);
            break;
        case ScenarioKind::Ex2:
            cov_a = detail::ar1_covariance(scenario.p, 0.5);
            break;
        case ScenarioKind::MeanShift:
            cov_a = Eigen::MatrixXd::Identity(scenario.p, scenario.p);
            break;
        default:
            throw BadScenario("unknown scenario kind");
    }
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(scenario.p);

    for (std::size_t seg = 0; seg + 1 < bounds.size(); ++seg) {
        const Eigen::Index begin = bounds[seg];
        const Eigen::Index len = bounds[seg + 1] - begin;
        const bool odd_segment = seg % 2 == 0;  // segments 1,3,5,7 in 1-based counting
        Eigen::MatrixXd block;
        switch (scenario.kind) {
            case ScenarioKind::Ex1Case1:
            case ScenarioKind::Ex1Case2:
                block = odd_segment ? sample_mvnormal(zero, cov_a, len, rng)
                                    : detail::sample_uniform_box(3.0, len, scenario.p, rng);
                break;
            case ScenarioKind::Ex2:
                if (odd_segment) {
                    block = sample_mvnormal(zero, cov_a, len, rng);
                } else {
                    block = sample_mvt(scenario.df, cov_a, len, rng);
                    if (scenario.t_unit_variance && scenario.df > 2.0) {
                        block *= std::sqrt((scenario.df - 2.0) / scenario.df);
                    }
                }
                break;
            case ScenarioKind::MeanShift: {
                Eigen::VectorXd mean = zero;
                if (!odd_segment) mean(0) = scenario.shift;
                block = sample_mvnormal(mean, cov_a, len, rng);
                break;
            }
            default:
                throw BadScenario("unknown scenario kind");
        }
        data.X.middleRows(begin, len) = block;
    }
    return data;
}

/// Shifts a random `fraction` of the rows of each true segment by a sparse
/// spike vector: round(sparsity*p) coordinates equal to `magnitude`, drawn
/// once per segment.
inline Eigen::MatrixXd inject_outliers(const Eigen::MatrixXd& X,
                                       const std::vector<Eigen::Index>& change_points,
                                       double fraction, double magnitude, double sparsity,
                                       std::mt19937_64& rng) {
    if (fraction < 0.0 || fraction >= 1.0) {
        throw BadScenario("outlier fraction must lie in [0, 1)");
    }
    Eigen::MatrixXd out = X;
    if (fraction == 0.0) return out;
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    std::vector<Eigen::Index> bounds;
    bounds.push_back(0);
    bounds.insert(bounds.end(), change_points.begin(), change_points.end());
    bounds.push_back(n);

    const auto n_coords =
        std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::llround(sparsity * p)));
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(p));
    for (std::size_t seg = 0; seg + 1 < bounds.size(); ++seg) {
        const Eigen::Index begin = bounds[seg];
        const Eigen::Index len = bounds[seg + 1] - begin;
        const auto n_rows = static_cast<Eigen::Index>(std::llround(fraction * len));
        if (n_rows == 0) continue;
        std::iota(coords.begin(), coords.end(), 0);
        std::shuffle(coords.begin(), coords.end(), rng);
        Eigen::VectorXd spike = Eigen::VectorXd::Zero(p);
        for (Eigen::Index c = 0; c < n_coords; ++c) {
            spike(coords[static_cast<std::size_t>(c)]) = magnitude;
        }
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(len));
        std::iota(rows.begin(), rows.end(), begin);
        std::shuffle(rows.begin(), rows.end(), rng);
        for (Eigen::Index r = 0; r < n_rows; ++r) {
            out.row(rows[static_cast<std::size_t>(r)]) += spike.transpose();
        }
    }
    return out;
}

struct ReplicationRecord {
    std::uint64_t seed = 0;
    double s_hat = 0.0;
    double ri = 0.0;
    int q_hat = 0;
    bool significant = false;
};

struct RunReport {
    int replications = 0;
    double mean_s_hat = 0.0;
    double rmse_s_hat = 0.0;
    double mean_ri = 0.0;
    double sd_ri = 0.0;
    std::vector<ReplicationRecord> records;
};

inline RunReport aggregate(const std::vector<ReplicationRecord>& records, double s_true) {
    if (records.empty()) {
        throw EmptyInput("no replication records");
    }
    RunReport report;
    report.replications = static_cast<int>(records.size());
    report.records = records;
    double sq_err = 0.0;
    for (const auto& r : records) {
        report.mean_s_hat += r.s_hat;
        report.mean_ri += r.ri;
        sq_err += (r.s_hat - s_true) * (r.s_hat - s_true);
    }
    const double count = static_cast<double>(records.size());
    report.mean_s_hat /= count;
    report.mean_ri /= count;
    report.rmse_s_hat = std::sqrt(sq_err / count);
    double var_ri = 0.0;
    for (const auto& r : records) {
        var_ri += (r.ri - report.mean_ri) * (r.ri - report.mean_ri);
    }
    report.sd_ri = records.size() > 1 ? std::sqrt(var_ri / (count - 1.0)) : 0.0;
    return report;
}

}  // namespace ckpca
