#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "ckpca/cluster.hpp"
#include "ckpca/detect.hpp"
#include "ckpca/simdata.hpp"

namespace ckpca {

/// Replication harness settings shared by the CLI bench command and the
/// verification suite.
struct BenchConfig {
    Scenario scenario;
    int replications = 50;
    std::uint64_t seed = 0;
    std::optional<KernelSpec> kernel;
    std::optional<Eigen::Index> alpha;
    TrrConfig trr;
    DetectorConfig detector;
    double kpca_cumulative_variance = 0.95;
    int cluster_d = 3;
    int kmeans_restarts = 10;
    int kmeans_max_iter = 100;
    int max_outer_iterations = 20;
    double ri_stop = 0.999;
};

/// One detection method over `replications` scenario draws; the Rand index is
/// measured between estimated and true segmentations.
inline RunReport bench_changepoint(const BenchConfig& config, PipelineMode method) {
    std::vector<ReplicationRecord> records;
    records.reserve(static_cast<std::size_t>(config.replications));
    const double s_true = 7.0;
    for (int rep = 0; rep < config.replications; ++rep) {
        Scenario scenario = config.scenario;
        scenario.seed = derive_seed(config.seed, static_cast<std::uint64_t>(rep));
        GeneratedData data = generate(scenario);
        if (scenario.outlier_fraction > 0.0) {
            std::mt19937_64 rng = make_engine(derive_seed(scenario.seed, 0xc0ffeeULL));
            data.X = inject_outliers(data.X, data.change_points, scenario.outlier_fraction,
                                     scenario.outlier_magnitude, scenario.outlier_sparsity, rng);
        }
        PipelineConfig pc;
        pc.mode = method;
        pc.kernel = config.kernel;
        pc.alpha = config.alpha;
        pc.trr = config.trr;
        pc.detector = config.detector;
        pc.detector.seed = derive_seed(scenario.seed, 0xdecafULL);
        pc.kpca_cumulative_variance = config.kpca_cumulative_variance;
        const ChangePointResult res = detect_pipeline(data.X, pc);

        ReplicationRecord record;
        record.seed = scenario.seed;
        record.s_hat = static_cast<double>(res.s_hat);
        record.ri = segmentation_rand_index(data.change_points, res.change_points,
                                            data.X.rows());
        record.q_hat = res.q_hat;
        record.significant = res.significant_direction;
        records.push_back(record);
    }
    return aggregate(records, s_true);
}

enum class ClusterMethod { IterativeCorrected, RawKmeans };

/// Clustering benchmark: iterative corrected reduction + K-means, or K-means
/// on the raw rows; the Rand index is measured against the true labels.
inline RunReport bench_cluster(const BenchConfig& config, ClusterMethod method) {
    std::vector<ReplicationRecord> records;
    records.reserve(static_cast<std::size_t>(config.replications));
    for (int rep = 0; rep < config.replications; ++rep) {
        Scenario scenario = config.scenario;
        scenario.seed = derive_seed(config.seed, static_cast<std::uint64_t>(rep));
        const GeneratedData data = generate(scenario);
        const Partition truth = Partition::from_labels(data.labels);

        ReplicationRecord record;
        record.seed = scenario.seed;
        if (method == ClusterMethod::IterativeCorrected) {
            IterClusterConfig icc;
            icc.d = config.cluster_d;
            icc.max_outer_iterations = config.max_outer_iterations;
            icc.ri_stop = config.ri_stop;
            icc.kmeans_restarts = config.kmeans_restarts;
            icc.kmeans_max_iter = config.kmeans_max_iter;
            icc.trr = config.trr;
            icc.seed = derive_seed(scenario.seed, 0xc105ULL);
            const IterClusterResult res = iterative_subspace_cluster(data.X, icc, config.kernel);
            record.ri = rand_index(res.partition, truth);
            record.q_hat = res.q_hat_trace.empty() ? 0 : res.q_hat_trace.back();
            record.significant = res.converged;
        } else {
            const KMeansResult res =
                kmeans(data.X, config.cluster_d, config.kmeans_restarts,
                       config.kmeans_max_iter, derive_seed(scenario.seed, 0xaaULL));
            record.ri = rand_index(res.partition, truth);
            record.q_hat = static_cast<int>(data.X.cols());
            record.significant = true;
        }
        records.push_back(record);
    }
    return aggregate(records, 0.0);
}

}  // namespace ckpca
