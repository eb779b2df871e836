#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ckpca/detect.hpp"
#include "test_util.hpp"

using namespace ckpca;

namespace {

Eigen::MatrixXd column(std::initializer_list<double> vals) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(vals.size()), 1);
    Eigen::Index i = 0;
    for (double v : vals) m(i++, 0) = v;
    return m;
}

Eigen::MatrixXd two_level_signal(Eigen::Index n_first, Eigen::Index n_second, double jump,
                                 std::mt19937_64& rng) {
    Eigen::MatrixXd z = testutil::random_matrix(n_first + n_second, 1, rng);
    z.bottomRows(n_second).array() += jump;
    return z;
}

}  // namespace

TEST(EnergyStatistic, CoincidingPointsGiveZero) {
    const Eigen::MatrixXd a = column({1.5, 1.5, 1.5});
    EXPECT_DOUBLE_EQ(energy_statistic(a, a), 0.0);
}

TEST(EnergyStatistic, HandValue) {
    const Eigen::MatrixXd a = column({0.0, 0.0});
    const Eigen::MatrixXd b = column({1.0, 1.0});
    EXPECT_DOUBLE_EQ(energy_statistic(a, b), 2.0);
}

TEST(EnergyStatistic, OneHomogeneousInScale) {
    std::mt19937_64 rng(31);
    const Eigen::MatrixXd a = testutil::random_matrix(6, 3, rng);
    const Eigen::MatrixXd b = testutil::random_matrix(9, 3, rng);
    const double base = energy_statistic(a, b);
    for (double t : {0.25, 2.0, 17.0}) {
        EXPECT_NEAR(energy_statistic(t * a, t * b), t * base, 1e-10 * std::abs(t * base));
    }
}

TEST(EnergyStatistic, ExactArgumentSymmetry) {
    std::mt19937_64 rng(32);
    for (int t = 0; t < 10; ++t) {
        const Eigen::MatrixXd a = testutil::random_matrix(5 + (t % 3), 2, rng);
        const Eigen::MatrixXd b = testutil::random_matrix(4 + (t % 5), 2, rng);
        EXPECT_EQ(energy_statistic(a, b), energy_statistic(b, a));
    }
}

TEST(EnergyStatistic, RowPermutationInvariance) {
    std::mt19937_64 rng(33);
    const Eigen::MatrixXd a = testutil::random_matrix(7, 2, rng);
    const Eigen::MatrixXd b = testutil::random_matrix(5, 2, rng);
    Eigen::MatrixXd ap = a;
    ap.row(0).swap(ap.row(6));
    ap.row(2).swap(ap.row(4));
    Eigen::MatrixXd bp = b;
    bp.row(1).swap(bp.row(3));
    EXPECT_NEAR(energy_statistic(ap, bp), energy_statistic(a, b),
                1e-12 * std::abs(energy_statistic(a, b)));
}

TEST(EnergyStatistic, Guards) {
    const Eigen::MatrixXd a = column({0.0});
    const Eigen::MatrixXd b = column({1.0, 2.0});
    EXPECT_THROW(energy_statistic(a, b), TooFewPoints);
    Eigen::MatrixXd c(2, 2);
    c.setZero();
    EXPECT_THROW(energy_statistic(b, c), DimensionMismatch);
}

// Dual route: the incremental scan must reproduce the directly evaluated
// statistic at every admissible split, and pick the maximizing one.
TEST(DivisiveSegment, ScanMatchesDirectStatistic) {
    std::mt19937_64 rng(34);
    const Eigen::Index n = 40;
    const Eigen::Index min_size = 5;
    const Eigen::MatrixXd z = testutil::random_matrix(n, 2, rng);
    const Eigen::MatrixXd d = detail::pairwise_distances(z);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    const detail::BestSplit best = detail::best_split(d, rows, min_size);

    double expected_best = -1e300;
    Eigen::Index expected_offset = -1;
    for (Eigen::Index zoff = min_size; zoff <= n - min_size; ++zoff) {
        const double stat =
            energy_statistic(z.topRows(zoff), z.bottomRows(n - zoff));
        if (stat > expected_best) {
            expected_best = stat;
            expected_offset = zoff;
        }
    }
    EXPECT_EQ(best.offset, expected_offset);
    EXPECT_NEAR(best.statistic, expected_best, 1e-9 * std::max(1.0, std::abs(expected_best)));
}

TEST(DivisiveSegment, NullLevelHolds) {
    int false_positives = 0;
    const int runs = 100;
    for (int rep = 0; rep < runs; ++rep) {
        std::mt19937_64 rng(400 + rep);
        const Eigen::MatrixXd z = testutil::random_matrix(200, 1, rng);
        DetectorConfig config;
        config.min_size = 30;
        config.n_permutations = 99;
        config.seed = static_cast<std::uint64_t>(rep);
        if (divisive_segment(z, config).s_hat > 0) ++false_positives;
    }
    EXPECT_LE(false_positives, 10);  // nominal level 0.05 spread over the recursion
}

TEST(DivisiveSegment, StrongSignalFindsTheChange) {
    int exact_hit = 0;
    int located = 0;
    const int runs = 100;
    for (int rep = 0; rep < runs; ++rep) {
        std::mt19937_64 rng(500 + rep);
        const Eigen::MatrixXd z = two_level_signal(100, 100, 5.0, rng);
        DetectorConfig config;
        config.min_size = 30;
        config.n_permutations = 199;
        config.seed = static_cast<std::uint64_t>(rep);
        const ChangePointResult res = divisive_segment(z, config);
        const bool near_100 = std::any_of(
            res.change_points.begin(), res.change_points.end(),
            [](Eigen::Index cp) { return std::abs(static_cast<long>(cp) - 100L) <= 5; });
        if (near_100) ++located;
        if (near_100 && res.s_hat == 1) ++exact_hit;
    }
    // The split itself is essentially always found; the s_hat = 1 count is
    // bounded by the two follow-up tests each running at level 0.05.
    EXPECT_GE(located, 95);
    EXPECT_GE(exact_hit, 85);
}

TEST(DivisiveSegment, ZeroColumnInvariance) {
    std::mt19937_64 rng(35);
    const Eigen::MatrixXd z = two_level_signal(60, 60, 3.0, rng);
    Eigen::MatrixXd padded(z.rows(), 2);
    padded.col(0) = z.col(0);
    padded.col(1).setZero();
    DetectorConfig config;
    config.min_size = 20;
    config.n_permutations = 49;
    config.seed = 9;
    const ChangePointResult a = divisive_segment(z, config);
    const ChangePointResult b = divisive_segment(padded, config);
    EXPECT_EQ(a.change_points, b.change_points);
}

TEST(DivisiveSegment, MinSpacingInvariant) {
    for (int rep = 0; rep < 5; ++rep) {
        std::mt19937_64 rng(36 + rep);
        Eigen::MatrixXd z = testutil::random_matrix(240, 1, rng);
        z.middleRows(80, 80).array() += 4.0;  // two changes, 80 apart
        DetectorConfig config;
        config.min_size = 30;
        config.n_permutations = 99;
        config.seed = static_cast<std::uint64_t>(rep);
        const ChangePointResult res = divisive_segment(z, config);
        Eigen::Index prev = 0;
        for (const Eigen::Index cp : res.change_points) {
            EXPECT_GE(cp - prev, config.min_size);
            prev = cp;
        }
        EXPECT_GE(z.rows() - prev, config.min_size);
        EXPECT_EQ(res.s_hat, static_cast<Eigen::Index>(res.change_points.size()));
        EXPECT_TRUE(std::is_sorted(res.change_points.begin(), res.change_points.end()));
    }
}

TEST(DivisiveSegment, DeterministicGivenSeed) {
    std::mt19937_64 rng(37);
    const Eigen::MatrixXd z = two_level_signal(70, 50, 2.0, rng);
    DetectorConfig config;
    config.min_size = 20;
    config.n_permutations = 99;
    config.seed = 1234;
    const ChangePointResult a = divisive_segment(z, config);
    const ChangePointResult b = divisive_segment(z, config);
    EXPECT_EQ(a.change_points, b.change_points);
    ASSERT_EQ(a.tests.size(), b.tests.size());
    for (std::size_t i = 0; i < a.tests.size(); ++i) {
        EXPECT_EQ(a.tests[i].p_value, b.tests[i].p_value);
        EXPECT_EQ(a.tests[i].statistic, b.tests[i].statistic);
    }
}

TEST(DivisiveSegment, MaxChangesCap) {
    std::mt19937_64 rng(38);
    Eigen::MatrixXd z = testutil::random_matrix(300, 1, rng);
    z.middleRows(100, 100).array() += 5.0;
    DetectorConfig config;
    config.min_size = 30;
    config.n_permutations = 99;
    config.seed = 5;
    config.max_changes = 1;
    const ChangePointResult res = divisive_segment(z, config);
    EXPECT_LE(res.s_hat, 1);
}

TEST(DivisiveSegment, TooShortRejected) {
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(50, 1);
    DetectorConfig config;
    config.min_size = 30;
    EXPECT_THROW(divisive_segment(z, config), TooShort);
}

// Changes found on the reduced coordinate agree with changes found on the
// known one-dimensional projection of the mean-shift construction.
TEST(DetectPipeline, MatchesOracleProjectionLocations) {
    int agree = 0;
    const int runs = 20;
    for (int rep = 0; rep < runs; ++rep) {
        std::mt19937_64 rng(700 + rep);
        Eigen::MatrixXd x = testutil::random_matrix(400, 20, rng);
        x.bottomRows(200).col(0).array() += 3.0;

        PipelineConfig pc;
        pc.mode = PipelineMode::Cpca;
        pc.detector.min_size = 30;
        pc.detector.n_permutations = 99;
        pc.detector.seed = static_cast<std::uint64_t>(rep);
        const ChangePointResult reduced_res = detect_pipeline(x, pc);

        const Eigen::MatrixXd oracle = x.col(0);
        const ChangePointResult oracle_res = divisive_segment(oracle, pc.detector);

        if (reduced_res.s_hat == oracle_res.s_hat && reduced_res.s_hat >= 1) {
            bool all_close = true;
            for (Eigen::Index i = 0; i < reduced_res.s_hat; ++i) {
                if (std::abs(static_cast<long>(reduced_res.change_points[i]) -
                             static_cast<long>(oracle_res.change_points[i])) > 10) {
                    all_close = false;
                }
            }
            if (all_close) ++agree;
        }
    }
    EXPECT_GE(agree, 18);
}

// Without a change no direction reaches significance, so every null run must
// carry the fallback flag. The reduced coordinate itself is a data-dependent
// selection, so downstream split counts on pure-null input are not asserted
// here; the detector's own level is covered by NullLevelHolds above.
TEST(DetectPipeline, NullDataFlagsNoDirection) {
    const int runs = 10;
    for (int rep = 0; rep < runs; ++rep) {
        std::mt19937_64 rng(801 + rep);
        const Eigen::MatrixXd x = testutil::random_matrix(200, 10, rng);
        PipelineConfig pc;
        pc.mode = PipelineMode::Ckpca;
        pc.detector.min_size = 30;
        pc.detector.n_permutations = 99;
        pc.detector.seed = static_cast<std::uint64_t>(rep);
        const ChangePointResult res = detect_pipeline(x, pc);
        EXPECT_FALSE(res.significant_direction);
        EXPECT_EQ(res.q_hat, 1);
    }
}

TEST(DetectPipeline, RawAndBaselineRun) {
    std::mt19937_64 rng(802);
    Eigen::MatrixXd x = testutil::random_matrix(120, 5, rng);
    x.bottomRows(60).array() += 2.0;
    PipelineConfig pc;
    pc.detector.min_size = 20;
    pc.detector.n_permutations = 49;
    pc.detector.seed = 3;
    pc.mode = PipelineMode::Raw;
    const ChangePointResult raw = detect_pipeline(x, pc);
    EXPECT_EQ(raw.q_hat, 5);
    pc.mode = PipelineMode::KpcaBaseline;
    const ChangePointResult baseline = detect_pipeline(x, pc);
    EXPECT_GE(baseline.q_hat, 1);
}
