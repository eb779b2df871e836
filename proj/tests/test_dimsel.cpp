#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "ckpca/dimsel.hpp"

using namespace ckpca;

namespace {

// Literal restatement of the selector definition, kept independent of the
// implementation: the largest k with (lam[k+1]+c)/(lam[k]+c) <= tau after
// clamping negatives.
TrrResult brute_force_trr(std::vector<double> lam, double c, double tau) {
    for (auto& v : lam) v = std::max(v, 0.0);
    TrrResult r;
    for (std::size_t k = 0; k + 1 < lam.size(); ++k) {
        if ((lam[k + 1] + c) / (lam[k] + c) <= tau) {
            r.q_hat = static_cast<int>(k) + 1;
            r.significant = true;
        }
    }
    if (!r.significant) r.q_hat = 1;
    return r;
}

Eigen::VectorXd vec(std::initializer_list<double> vals) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
    Eigen::Index i = 0;
    for (double x : vals) v(i++) = x;
    return v;
}

}  // namespace

TEST(DefaultRidge, KernelFormula) {
    EXPECT_NEAR(default_ridge(800, 100, RidgeMode::Kernel), 0.013434, 1e-5);
}

TEST(DefaultRidge, LinearFormulaScalesBySqrtP) {
    EXPECT_NEAR(default_ridge(800, 100, RidgeMode::Linear), 0.13434, 1e-4);
    EXPECT_NEAR(default_ridge(800, 100, RidgeMode::Linear),
                10.0 * default_ridge(800, 100, RidgeMode::Kernel), 1e-12);
}

TEST(DefaultRidge, SmallNRejected) {
    EXPECT_THROW(default_ridge(15, 10, RidgeMode::Kernel), NTooSmall);
    EXPECT_GT(default_ridge(16, 10, RidgeMode::Kernel), 0.0);
}

TEST(TrrSelect, TwoLargeEigenvalues) {
    const TrrResult r = trr_select(vec({10.0, 1.0, 1e-6, 1e-6}), 0.01, 0.5);
    EXPECT_EQ(r.q_hat, 2);
    EXPECT_TRUE(r.significant);
}

TEST(TrrSelect, FlatSpectrumNotSignificant) {
    const TrrResult r = trr_select(vec({5.0, 5.0, 5.0}), 0.1, 0.5);
    EXPECT_EQ(r.q_hat, 1);
    EXPECT_FALSE(r.significant);
}

TEST(TrrSelect, SingleDirection) {
    const TrrResult r = trr_select(vec({1.0, 0.0, 0.0}), 0.013434, 0.5);
    EXPECT_EQ(r.q_hat, 1);
    EXPECT_TRUE(r.significant);
}

TEST(TrrSelect, NegativesClampedBeforeRatios) {
    // With the trailing negatives clamped to 0 the ratio at k=1 is c/(1+c).
    const TrrResult r = trr_select(vec({1.0, -0.2, -0.5}), 0.01, 0.5);
    EXPECT_EQ(r.q_hat, 1);
    EXPECT_TRUE(r.significant);
}

TEST(TrrSelect, ScaleCovariance) {
    const Eigen::VectorXd lam = vec({4.0, 1.5, 0.3, 0.01, 0.0});
    for (double c : {0.001, 0.05, 0.4}) {
        const TrrResult base = trr_select(lam, c, 0.5);
        for (double s : {0.1, 3.0, 250.0}) {
            const TrrResult scaled = trr_select(s * lam, s * c, 0.5);
            EXPECT_EQ(scaled.q_hat, base.q_hat);
            EXPECT_EQ(scaled.significant, base.significant);
        }
    }
}

TEST(TrrSelect, MatchesBruteForceOnGrid) {
    for (int ai = 1; ai <= 10; ++ai) {
        for (int bi = 1; bi <= 10; ++bi) {
            const double a = static_cast<double>(ai);
            const double b = 0.01 + (1.0 - 0.01) * (bi - 1) / 9.0;
            if (b > a) continue;
            const std::vector<double> lam = {a, b, 0.0, 0.0};
            for (double c : {0.005, 0.0134, 0.1, 0.3}) {
                const TrrResult expect = brute_force_trr(lam, c, 0.5);
                const TrrResult got = trr_select(vec({a, b, 0.0, 0.0}), c, 0.5);
                EXPECT_EQ(got.q_hat, expect.q_hat) << "a=" << a << " b=" << b << " c=" << c;
                EXPECT_EQ(got.significant, expect.significant);
            }
        }
    }
}

TEST(TrrSelect, Guards) {
    EXPECT_THROW(trr_select(vec({1.0}), 0.01, 0.5), TooFewPoints);
    EXPECT_THROW(trr_select(vec({1.0, 0.5}), 0.0, 0.5), Error);
    EXPECT_THROW(trr_select(vec({1.0, 0.5}), 0.01, 1.0), Error);
    EXPECT_THROW(trr_select(vec({0.5, 1.0}), 0.01, 0.5), Error);
}

TEST(CumulativeVariance, SelectsSmallestQ) {
    EXPECT_EQ(cumulative_variance_dimension(vec({9.0, 0.5, 0.5}), 0.95), 2);
    EXPECT_EQ(cumulative_variance_dimension(vec({9.0, 0.5, 0.5}), 0.9), 1);
    EXPECT_EQ(cumulative_variance_dimension(vec({1.0, 1.0, 1.0, 1.0}), 0.95), 4);
    EXPECT_EQ(cumulative_variance_dimension(vec({0.0, 0.0}), 0.95), 1);
    EXPECT_EQ(cumulative_variance_dimension(vec({2.0, -5.0}), 0.95), 1);
}
