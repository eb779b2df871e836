#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ckpca/ckpca.hpp"

namespace {

using nlohmann::json;

struct Options {
    std::string input;
    std::string output;
    std::string config_path;
    std::string mode;
    std::string kernel = "gaussian";
    double m = 0.8;
    std::int64_t alpha = 0;  // 0: default floor(sqrt(n))
    double tau = 0.5;
    double cn = 0.0;  // 0: default ridge formula
    std::int64_t min_size = 30;
    std::int64_t permutations = 199;
    double alpha_sig = 0.05;
    std::int64_t max_changes = 0;  // 0: unlimited
    std::int64_t d = 3;
    std::int64_t reps = 50;
    std::uint64_t seed = 0;
    std::string scenario;
    bool t_unit_variance = true;
    double outlier_frac = 0.0;
    std::int64_t p = 0;  // 0: scenario default
    std::int64_t n = 0;  // 0: scenario default
    std::string balance = "balanced";
    double df = 4.0;
    double b = 0.5;
    double delta = 2.0;
};

ckpca::KernelFamily kernel_from_string(const std::string& name) {
    if (name == "gaussian") return ckpca::KernelFamily::Gaussian;
    if (name == "laplace") return ckpca::KernelFamily::Laplace;
    if (name == "exponential") return ckpca::KernelFamily::Exponential;
    if (name == "linear") return ckpca::KernelFamily::Linear;
    throw ckpca::BadScenario("unknown kernel '" + name + "'");
}

ckpca::PipelineMode pipeline_from_string(const std::string& name) {
    if (name == "ckpca") return ckpca::PipelineMode::Ckpca;
    if (name == "cpca") return ckpca::PipelineMode::Cpca;
    if (name == "raw") return ckpca::PipelineMode::Raw;
    if (name == "kpca") return ckpca::PipelineMode::KpcaBaseline;
    throw ckpca::BadScenario("unknown mode '" + name + "'");
}

ckpca::ScenarioKind scenario_from_string(const std::string& name) {
    if (name == "ex1case1") return ckpca::ScenarioKind::Ex1Case1;
    if (name == "ex1case2") return ckpca::ScenarioKind::Ex1Case2;
    if (name == "ex2") return ckpca::ScenarioKind::Ex2;
    if (name == "meanshift") return ckpca::ScenarioKind::MeanShift;
    if (name == "clustershells") return ckpca::ScenarioKind::ClusterShells;
    throw ckpca::BadScenario("unknown scenario '" + name + "'");
}

ckpca::Balance balance_from_string(const std::string& name) {
    if (name == "balanced") return ckpca::Balance::Balanced;
    if (name == "imbalanced") return ckpca::Balance::Imbalanced;
    throw ckpca::BadScenario("unknown balance '" + name + "'");
}

// Flags override the config file, so the file is applied before parsing.
void apply_config_file(Options& opt, const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ckpca::BadScenario("cannot open config file '" + path + "'");
    }
    json j;
    in >> j;
    auto get = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("input", opt.input);
    get("output", opt.output);
    get("mode", opt.mode);
    get("kernel", opt.kernel);
    get("m", opt.m);
    get("alpha", opt.alpha);
    get("tau", opt.tau);
    get("cn", opt.cn);
    get("min-size", opt.min_size);
    get("permutations", opt.permutations);
    get("alpha-sig", opt.alpha_sig);
    get("max-changes", opt.max_changes);
    get("d", opt.d);
    get("reps", opt.reps);
    get("seed", opt.seed);
    get("scenario", opt.scenario);
    get("t-unit-variance", opt.t_unit_variance);
    get("outlier-frac", opt.outlier_frac);
    get("p", opt.p);
    get("n", opt.n);
    get("balance", opt.balance);
    get("df", opt.df);
    get("b", opt.b);
    get("delta", opt.delta);
}

ckpca::KernelSpec make_kernel(const Options& opt) {
    ckpca::KernelSpec spec;
    spec.family = kernel_from_string(opt.kernel);
    spec.bandwidth = 0.0;  // data-driven rule
    spec.m = opt.m;
    return spec;
}

ckpca::TrrConfig make_trr(const Options& opt) {
    ckpca::TrrConfig trr;
    trr.tau = opt.tau;
    if (opt.cn > 0.0) trr.c_n = opt.cn;
    return trr;
}

ckpca::DetectorConfig make_detector(const Options& opt) {
    ckpca::DetectorConfig det;
    det.min_size = static_cast<int>(opt.min_size);
    det.n_permutations = static_cast<int>(opt.permutations);
    det.significance = opt.alpha_sig;
    if (opt.max_changes > 0) det.max_changes = static_cast<int>(opt.max_changes);
    det.seed = opt.seed;
    return det;
}

json config_echo(const Options& opt, const std::string& command) {
    json j;
    j["command"] = command;
    j["input"] = opt.input;
    j["output"] = opt.output;
    j["mode"] = opt.mode;
    j["kernel"] = opt.kernel;
    j["m"] = opt.m;
    j["alpha"] = opt.alpha;
    j["tau"] = opt.tau;
    j["cn"] = opt.cn;
    j["min-size"] = opt.min_size;
    j["permutations"] = opt.permutations;
    j["alpha-sig"] = opt.alpha_sig;
    j["max-changes"] = opt.max_changes;
    j["d"] = opt.d;
    j["reps"] = opt.reps;
    j["seed"] = opt.seed;
    j["scenario"] = opt.scenario;
    j["t-unit-variance"] = opt.t_unit_variance;
    j["outlier-frac"] = opt.outlier_frac;
    j["p"] = opt.p;
    j["n"] = opt.n;
    j["balance"] = opt.balance;
    j["df"] = opt.df;
    j["b"] = opt.b;
    j["delta"] = opt.delta;
    return j;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) {
        throw ckpca::Error("cannot write '" + path + "'");
    }
    out << j.dump(2) << '\n';
}

json report_from_run(const ckpca::RunReport& report) {
    json j;
    j["replications"] = report.replications;
    j["mean_s_hat"] = report.mean_s_hat;
    j["rmse_s_hat"] = report.rmse_s_hat;
    j["mean_ri"] = report.mean_ri;
    j["sd_ri"] = report.sd_ri;
    json records = json::array();
    for (const auto& r : report.records) {
        records.push_back({{"seed", r.seed},
                           {"s_hat", r.s_hat},
                           {"ri", r.ri},
                           {"q_hat", r.q_hat},
                           {"significant", r.significant}});
    }
    j["records"] = records;
    return j;
}

int run_reduce(const Options& opt) {
    if (opt.input.empty()) throw ckpca::BadScenario("reduce requires --input");
    const ckpca::CsvMatrix csv = ckpca::read_csv_matrix(opt.input);
    const std::string mode = opt.mode.empty() ? "ckpca" : opt.mode;
    const std::string prefix = opt.output.empty() ? "ckpca_reduce" : opt.output;

    ckpca::ReducedData red;
    if (mode == "kpca") {
        const ckpca::KernelSpec kernel = ckpca::detail::resolve_kernel(csv.values, make_kernel(opt));
        const ckpca::GramMatrix K = ckpca::gram(csv.values, kernel);
        const ckpca::GramEigen ge(K);
        const auto scheme = ckpca::make_segments(
            csv.values.rows(),
            opt.alpha > 0 ? std::optional<Eigen::Index>(opt.alpha) : std::nullopt);
        const ckpca::CenteringPair pair = ckpca::changepoint_operators(scheme);
        const ckpca::Spectrum spectrum = ge.corrected_spectrum(pair.global);
        red.mode = ckpca::ReductionMode::CkpcaChangePoint;
        red.q_hat = ckpca::cumulative_variance_dimension(spectrum.eigenvalues, 0.95);
        red.significant = true;
        red.eigenvalues = spectrum.eigenvalues;
        red.basis = spectrum.coefficients.leftCols(red.q_hat);
        red.reduced = K.values * red.basis;
        red.bandwidth = kernel.family == ckpca::KernelFamily::Linear ? 0.0 : kernel.bandwidth;
        red.tau = opt.tau;
    } else {
        ckpca::ReduceConfig rc;
        rc.mode = mode == "cpca" ? ckpca::ReductionMode::Cpca
                                 : ckpca::ReductionMode::CkpcaChangePoint;
        if (mode != "cpca") rc.kernel = make_kernel(opt);
        if (opt.alpha > 0) rc.alpha = opt.alpha;
        rc.trr = make_trr(opt);
        red = ckpca::reduce(csv.values, rc);
    }

    ckpca::write_csv_matrix(prefix + ".csv", red.reduced);
    json j;
    j["config"] = config_echo(opt, "reduce");
    j["q_hat"] = red.q_hat;
    j["significant"] = red.significant;
    j["no_significant_direction"] = !red.significant;
    j["c_n"] = red.c_n;
    j["tau"] = red.tau;
    j["bandwidth"] = red.bandwidth;
    j["eigenvalues"] = std::vector<double>(
        red.eigenvalues.data(), red.eigenvalues.data() + red.eigenvalues.size());
    write_json(prefix + ".json", j);
    std::cout << "wrote " << prefix << ".csv and " << prefix << ".json (q_hat=" << red.q_hat
              << ")\n";
    return 0;
}

int run_detect(const Options& opt) {
    if (opt.input.empty()) throw ckpca::BadScenario("detect requires --input");
    const ckpca::CsvMatrix csv = ckpca::read_csv_matrix(opt.input);
    const std::string mode = opt.mode.empty() ? "ckpca" : opt.mode;
    const std::string prefix = opt.output.empty() ? "ckpca_detect" : opt.output;

    ckpca::PipelineConfig pc;
    pc.mode = pipeline_from_string(mode);
    pc.kernel = make_kernel(opt);
    if (opt.alpha > 0) pc.alpha = opt.alpha;
    pc.trr = make_trr(opt);
    pc.detector = make_detector(opt);
    const ckpca::ChangePointResult res = ckpca::detect_pipeline(csv.values, pc);

    json j;
    j["config"] = config_echo(opt, "detect");
    j["change_points"] = res.change_points;
    j["s_hat"] = res.s_hat;
    j["q_hat"] = res.q_hat;
    j["no_significant_direction"] = !res.significant_direction;
    j["bandwidth"] = res.bandwidth;
    j["c_n"] = res.c_n;
    j["seed"] = opt.seed;
    json tests = json::array();
    for (const auto& t : res.tests) {
        tests.push_back({{"begin", t.begin},
                         {"end", t.end},
                         {"split", t.split},
                         {"statistic", t.statistic},
                         {"p_value", t.p_value},
                         {"accepted", t.accepted}});
    }
    j["tests"] = tests;
    write_json(prefix + ".json", j);

    // Plot data: row index, leading coordinate used by the detector, marker.
    Eigen::VectorXd coordinate;
    if (pc.mode == ckpca::PipelineMode::Raw) {
        coordinate = csv.values.col(0);
    } else {
        ckpca::ReduceConfig rc;
        rc.mode = pc.mode == ckpca::PipelineMode::Cpca ? ckpca::ReductionMode::Cpca
                                                       : ckpca::ReductionMode::CkpcaChangePoint;
        if (pc.mode != ckpca::PipelineMode::Cpca) rc.kernel = pc.kernel;
        rc.alpha = pc.alpha;
        rc.trr = pc.trr;
        coordinate = ckpca::reduce(csv.values, rc).reduced.col(0);
    }
    Eigen::MatrixXd plot(coordinate.size(), 3);
    for (Eigen::Index i = 0; i < coordinate.size(); ++i) {
        plot(i, 0) = static_cast<double>(i + 1);
        plot(i, 1) = coordinate(i);
        plot(i, 2) = 0.0;
    }
    for (const Eigen::Index z : res.change_points) plot(z - 1, 2) = 1.0;
    ckpca::write_csv_matrix(prefix + "_plot.csv", plot,
                            {"index", "coordinate", "change_point"});
    std::cout << "wrote " << prefix << ".json and " << prefix << "_plot.csv (s_hat="
              << res.s_hat << ")\n";
    return 0;
}

int run_cluster(const Options& opt) {
    if (opt.input.empty()) throw ckpca::BadScenario("cluster requires --input");
    const ckpca::CsvMatrix csv = ckpca::read_csv_matrix(opt.input);
    const std::string prefix = opt.output.empty() ? "ckpca_cluster" : opt.output;

    ckpca::IterClusterConfig icc;
    icc.d = static_cast<int>(opt.d);
    icc.trr = make_trr(opt);
    icc.seed = opt.seed;
    const ckpca::IterClusterResult res =
        ckpca::iterative_subspace_cluster(csv.values, icc, make_kernel(opt));

    Eigen::MatrixXd labels(res.partition.n(), 1);
    for (Eigen::Index i = 0; i < res.partition.n(); ++i) {
        labels(i, 0) = res.partition.labels[static_cast<std::size_t>(i)] + 1;
    }
    ckpca::write_csv_matrix(prefix + "_labels.csv", labels, {"label"});

    json j;
    j["config"] = config_echo(opt, "cluster");
    j["d"] = res.partition.d;
    j["q_hat_per_iteration"] = res.q_hat_trace;
    j["outer_iterations"] = res.outer_iterations;
    j["converged"] = res.converged;
    j["ri_trace"] = res.ri_trace;
    write_json(prefix + ".json", j);
    std::cout << "wrote " << prefix << "_labels.csv and " << prefix << ".json (iterations="
              << res.outer_iterations << ")\n";
    return 0;
}

int run_bench(const Options& opt) {
    if (opt.scenario.empty()) {
        throw ckpca::BadScenario("bench requires --scenario");
    }
    ckpca::BenchConfig bc;
    bc.scenario.kind = scenario_from_string(opt.scenario);
    bc.scenario.balance = balance_from_string(opt.balance);
    const bool cluster_scenario = bc.scenario.kind == ckpca::ScenarioKind::ClusterShells;
    bc.scenario.p = opt.p > 0 ? opt.p : 100;
    bc.scenario.n = opt.n > 0 ? opt.n : (cluster_scenario ? 600 : 800);
    bc.scenario.df = opt.df;
    bc.scenario.b = opt.b;
    bc.scenario.shift = opt.delta;
    bc.scenario.t_unit_variance = opt.t_unit_variance;
    bc.scenario.outlier_fraction = opt.outlier_frac;
    bc.replications = static_cast<int>(opt.reps);
    bc.seed = opt.seed;
    bc.kernel = make_kernel(opt);
    if (opt.alpha > 0) bc.alpha = opt.alpha;
    bc.trr = make_trr(opt);
    bc.detector = make_detector(opt);
    bc.cluster_d = static_cast<int>(opt.d);

    const std::string prefix =
        opt.output.empty() ? ("ckpca_bench_" + opt.scenario) : opt.output;

    json results;
    Eigen::MatrixXd table;
    std::vector<std::string> methods;
    if (cluster_scenario) {
        methods = opt.mode.empty() ? std::vector<std::string>{"ckpca", "raw"}
                                   : std::vector<std::string>{opt.mode};
        table.resize(static_cast<Eigen::Index>(methods.size()), 4);
        for (std::size_t i = 0; i < methods.size(); ++i) {
            const auto method = methods[i] == "ckpca" ? ckpca::ClusterMethod::IterativeCorrected
                                                      : ckpca::ClusterMethod::RawKmeans;
            if (methods[i] != "ckpca" && methods[i] != "raw") {
                throw ckpca::BadScenario("cluster bench modes are {ckpca, raw}");
            }
            const ckpca::RunReport report = ckpca::bench_cluster(bc, method);
            results[methods[i]] = report_from_run(report);
            table(static_cast<Eigen::Index>(i), 0) = report.mean_s_hat;
            table(static_cast<Eigen::Index>(i), 1) = report.rmse_s_hat;
            table(static_cast<Eigen::Index>(i), 2) = report.mean_ri;
            table(static_cast<Eigen::Index>(i), 3) = report.sd_ri;
        }
    } else {
        methods = opt.mode.empty() ? std::vector<std::string>{"ckpca", "cpca", "kpca", "raw"}
                                   : std::vector<std::string>{opt.mode};
        table.resize(static_cast<Eigen::Index>(methods.size()), 4);
        for (std::size_t i = 0; i < methods.size(); ++i) {
            const ckpca::PipelineMode mode = pipeline_from_string(methods[i]);
            const ckpca::RunReport report = ckpca::bench_changepoint(bc, mode);
            results[methods[i]] = report_from_run(report);
            table(static_cast<Eigen::Index>(i), 0) = report.mean_s_hat;
            table(static_cast<Eigen::Index>(i), 1) = report.rmse_s_hat;
            table(static_cast<Eigen::Index>(i), 2) = report.mean_ri;
            table(static_cast<Eigen::Index>(i), 3) = report.sd_ri;
        }
    }

    json j;
    j["config"] = config_echo(opt, "bench");
    j["results"] = results;
    write_json(prefix + ".json", j);

    std::ofstream csv(prefix + ".csv");
    if (!csv) throw ckpca::Error("cannot write '" + prefix + ".csv'");
    csv << "method,s_hat,rmse,ri,sd_ri\n";
    for (std::size_t i = 0; i < methods.size(); ++i) {
        csv << methods[i];
        for (Eigen::Index c = 0; c < 4; ++c) {
            csv << ',' << ckpca::format_double(table(static_cast<Eigen::Index>(i), c));
        }
        csv << '\n';
    }
    std::cout << "wrote " << prefix << ".json and " << prefix << ".csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    Options opt;
    CLI::App app{"Corrected kernel PCA: dimension reduction, change-point detection, clustering"};
    app.require_subcommand(1);

    // The config file is applied before flag parsing so flags override it.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") opt.config_path = argv[i + 1];
    }
    if (!opt.config_path.empty()) {
        try {
            apply_config_file(opt, opt.config_path);
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return 2;
        }
    }

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opt.config_path, "JSON config file mirroring the flags");
        cmd->add_option("--output", opt.output, "output path prefix");
        cmd->add_option("--seed", opt.seed, "random seed");
        cmd->add_option("--kernel", opt.kernel, "gaussian|laplace|exponential|linear");
        cmd->add_option("--m", opt.m, "bandwidth rule multiplier");
        cmd->add_option("--alpha", opt.alpha, "segment length (default floor(sqrt(n)))");
        cmd->add_option("--tau", opt.tau, "ridge ratio threshold");
        cmd->add_option("--cn", opt.cn, "ridge value (default by formula)");
    };

    CLI::App* reduce = app.add_subcommand("reduce", "reduce a CSV matrix");
    add_common(reduce);
    reduce->add_option("--input", opt.input, "input CSV");
    reduce->add_option("--mode", opt.mode, "ckpca|cpca|kpca");

    CLI::App* detect = app.add_subcommand("detect", "detect change points in a CSV matrix");
    add_common(detect);
    detect->add_option("--input", opt.input, "input CSV");
    detect->add_option("--mode", opt.mode, "ckpca|cpca|raw|kpca");
    detect->add_option("--min-size", opt.min_size, "minimum segment length");
    detect->add_option("--permutations", opt.permutations, "permutation count");
    detect->add_option("--alpha-sig", opt.alpha_sig, "significance level");
    detect->add_option("--max-changes", opt.max_changes, "cap on accepted changes");

    CLI::App* cluster = app.add_subcommand("cluster", "cluster a CSV matrix");
    add_common(cluster);
    cluster->add_option("--input", opt.input, "input CSV");
    cluster->add_option("--d", opt.d, "number of categories");

    CLI::App* bench = app.add_subcommand("bench", "run a simulation benchmark");
    add_common(bench);
    bench->add_option("scenario,--scenario", opt.scenario,
                      "ex1case1|ex1case2|ex2|meanshift|clustershells");
    bench->add_option("--mode", opt.mode, "restrict to one method");
    bench->add_option("--reps", opt.reps, "replications");
    bench->add_option("--p", opt.p, "data dimension");
    bench->add_option("--n", opt.n, "sample size");
    bench->add_option("--balance", opt.balance, "balanced|imbalanced");
    bench->add_option("--df", opt.df, "t degrees of freedom (ex2)");
    bench->add_option("--b", opt.b, "covariance parameter (ex1 cases)");
    bench->add_option("--delta", opt.delta, "mean jump magnitude (meanshift)");
    bench->add_option("--min-size", opt.min_size, "minimum segment length");
    bench->add_option("--permutations", opt.permutations, "permutation count");
    bench->add_option("--alpha-sig", opt.alpha_sig, "significance level");
    bench->add_option("--d", opt.d, "number of categories (cluster scenario)");
    bench->add_option("--outlier-frac", opt.outlier_frac, "outlier row fraction");
    bench->add_flag("--t-unit-variance,!--no-t-unit-variance", opt.t_unit_variance,
                    "rescale t draws to unit variance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (reduce->parsed()) return run_reduce(opt);
        if (detect->parsed()) return run_detect(opt);
        if (cluster->parsed()) return run_cluster(opt);
        if (bench->parsed()) return run_bench(opt);
    } catch (const ckpca::BadScenario& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
