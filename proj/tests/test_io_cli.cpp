#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "ckpca/io.hpp"
#include "ckpca/simdata.hpp"
#include "test_util.hpp"

using namespace ckpca;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class TempDir {
  public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                ("ckpca_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    fs::path path() const { return path_; }

  private:
    fs::path path_;
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(CKPCA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(CsvIo, HeaderAutoDetected) {
    TempDir dir;
    const fs::path file = dir.path() / "in.csv";
    std::ofstream(file) << "a,b\n1,2\n3,4\n";
    const CsvMatrix m = read_csv_matrix(file.string());
    EXPECT_TRUE(m.had_header);
    EXPECT_EQ(m.header, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(m.values.rows(), 2);
    EXPECT_DOUBLE_EQ(m.values(1, 1), 4.0);
}

TEST(CsvIo, NoHeader) {
    TempDir dir;
    const fs::path file = dir.path() / "in.csv";
    std::ofstream(file) << "1.5,2\n-3e2,4\n";
    const CsvMatrix m = read_csv_matrix(file.string());
    EXPECT_FALSE(m.had_header);
    EXPECT_DOUBLE_EQ(m.values(1, 0), -300.0);
}

TEST(CsvIo, NonNumericCellNamesRowAndColumn) {
    TempDir dir;
    const fs::path file = dir.path() / "in.csv";
    std::ofstream(file) << "1,2\n3,oops\n";
    try {
        read_csv_matrix(file.string());
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("row 2"), std::string::npos);
        EXPECT_NE(what.find("column 2"), std::string::npos);
    }
}

TEST(CsvIo, RaggedRowRejected) {
    TempDir dir;
    const fs::path file = dir.path() / "in.csv";
    std::ofstream(file) << "1,2\n3\n";
    EXPECT_THROW(read_csv_matrix(file.string()), ParseError);
}

TEST(CsvIo, RoundTripExact) {
    TempDir dir;
    std::mt19937_64 rng(61);
    const Eigen::MatrixXd x = testutil::random_matrix(7, 3, rng);
    const fs::path file = dir.path() / "out.csv";
    write_csv_matrix(file.string(), x);
    const CsvMatrix back = read_csv_matrix(file.string());
    EXPECT_EQ((back.values - x).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run_cli("definitely-not-a-command"), 2);
    EXPECT_EQ(run_cli("bench --scenario unknown --reps 1"), 2);
    EXPECT_EQ(run_cli("bench unknown --reps 1"), 2);  // positional scenario form
    EXPECT_EQ(run_cli("reduce"), 2);                  // missing --input
}

TEST(Cli, ReduceHappyPath) {
    TempDir dir;
    Scenario sc;
    sc.kind = ScenarioKind::MeanShift;
    sc.p = 5;
    sc.n = 160;
    sc.shift = 3.0;
    sc.seed = 12;
    const GeneratedData data = generate(sc);
    const fs::path in = dir.path() / "x.csv";
    write_csv_matrix(in.string(), data.X);
    const fs::path out = dir.path() / "red";
    ASSERT_EQ(run_cli("reduce --input " + in.string() + " --mode cpca --output " + out.string()),
              0);
    const json report = json::parse(slurp(out.string() + ".json"));
    EXPECT_GE(report.at("q_hat").get<int>(), 1);
    const CsvMatrix reduced = read_csv_matrix(out.string() + ".csv");
    EXPECT_EQ(reduced.values.rows(), 160);
    EXPECT_EQ(reduced.values.cols(), report.at("q_hat").get<int>());
}

TEST(Cli, MissingInputExitsOne) {
    EXPECT_EQ(run_cli("reduce --input /nonexistent/x.csv"), 1);
}

TEST(Cli, NonNumericCsvExitsOne) {
    TempDir dir;
    const fs::path in = dir.path() / "x.csv";
    std::ofstream(in) << "1,2\n3,bad\n";
    EXPECT_EQ(run_cli("reduce --input " + in.string() + " --output " +
                      (dir.path() / "o").string()),
              1);
}

// The linear kernel and the direct linear route must report the same nonzero
// spectrum through the command line as well.
TEST(Cli, LinearKernelAgreesWithCpca) {
    TempDir dir;
    std::mt19937_64 rng(62);
    Eigen::MatrixXd x = testutil::random_matrix(60, 4, rng);
    x.bottomRows(30).col(0).array() += 2.0;
    const fs::path in = dir.path() / "x.csv";
    write_csv_matrix(in.string(), x);

    const fs::path out_k = dir.path() / "kernel";
    const fs::path out_c = dir.path() / "cpca";
    ASSERT_EQ(run_cli("reduce --input " + in.string() + " --mode ckpca --kernel linear --output " +
                      out_k.string()),
              0);
    ASSERT_EQ(run_cli("reduce --input " + in.string() + " --mode cpca --output " +
                      out_c.string()),
              0);
    const json jk = json::parse(slurp(out_k.string() + ".json"));
    const json jc = json::parse(slurp(out_c.string() + ".json"));
    auto eig = [](const json& j) {
        const std::vector<double> all = j.at("eigenvalues").get<std::vector<double>>();
        Eigen::VectorXd v(static_cast<Eigen::Index>(all.size()));
        for (std::size_t i = 0; i < all.size(); ++i) v(static_cast<Eigen::Index>(i)) = all[i];
        return testutil::nonzero_eigenvalues(v, 1e-9);
    };
    const std::vector<double> ek = eig(jk);
    const std::vector<double> ec = eig(jc);
    ASSERT_EQ(ek.size(), ec.size());
    for (std::size_t i = 0; i < ec.size(); ++i) {
        EXPECT_NEAR(ek[i], ec[i], 1e-6 * std::abs(ec[i]));
    }
}

TEST(Cli, DetectWritesReportAndPlot) {
    TempDir dir;
    Scenario sc;
    sc.kind = ScenarioKind::MeanShift;
    sc.p = 4;
    sc.n = 160;
    sc.shift = 4.0;
    sc.seed = 13;
    const GeneratedData data = generate(sc);
    const fs::path in = dir.path() / "x.csv";
    write_csv_matrix(in.string(), data.X);
    const fs::path out = dir.path() / "det";
    ASSERT_EQ(run_cli("detect --input " + in.string() +
                      " --mode cpca --min-size 15 --permutations 49 --seed 3 --output " +
                      out.string()),
              0);
    const json report = json::parse(slurp(out.string() + ".json"));
    EXPECT_TRUE(report.contains("change_points"));
    EXPECT_TRUE(report.contains("tests"));
    const CsvMatrix plot = read_csv_matrix(out.string() + "_plot.csv");
    EXPECT_TRUE(plot.had_header);
    EXPECT_EQ(plot.values.rows(), 160);
    EXPECT_EQ(plot.values.cols(), 3);
}

TEST(Cli, ClusterWritesLabels) {
    TempDir dir;
    Scenario sc;
    sc.kind = ScenarioKind::ClusterShells;
    sc.n = 60;
    sc.p = 8;
    sc.seed = 14;
    const GeneratedData data = generate(sc);
    const fs::path in = dir.path() / "x.csv";
    write_csv_matrix(in.string(), data.X);
    const fs::path out = dir.path() / "clu";
    ASSERT_EQ(run_cli("cluster --input " + in.string() + " --d 3 --seed 5 --output " +
                      out.string()),
              0);
    const CsvMatrix labels = read_csv_matrix(out.string() + "_labels.csv");
    EXPECT_EQ(labels.values.rows(), 60);
    const json report = json::parse(slurp(out.string() + ".json"));
    EXPECT_EQ(report.at("d").get<int>(), 3);
    EXPECT_TRUE(report.contains("ri_trace"));
}

TEST(Cli, BenchSmallClusterScenarioDeterministic) {
    TempDir dir;
    // Rerun the identical command and compare the regenerated bytes.
    const fs::path out = dir.path() / "bench";
    const std::string cmd =
        "bench clustershells --n 36 --p 4 --reps 2 --seed 3 --d 3 --output " + out.string();
    ASSERT_EQ(run_cli(cmd), 0);
    const std::string j1 = slurp(out.string() + ".json");
    const std::string c1 = slurp(out.string() + ".csv");
    ASSERT_EQ(run_cli(cmd), 0);
    ASSERT_FALSE(j1.empty());
    EXPECT_EQ(j1, slurp(out.string() + ".json"));
    EXPECT_EQ(c1, slurp(out.string() + ".csv"));
}

TEST(Cli, ConfigFileProvidesDefaultsFlagsOverride) {
    TempDir dir;
    Scenario sc;
    sc.kind = ScenarioKind::MeanShift;
    sc.p = 3;
    sc.n = 160;
    sc.seed = 15;
    const GeneratedData data = generate(sc);
    const fs::path in = dir.path() / "x.csv";
    write_csv_matrix(in.string(), data.X);
    const fs::path cfg = dir.path() / "cfg.json";
    std::ofstream(cfg) << R"({"input": ")" << in.string()
                       << R"(", "mode": "cpca", "tau": 0.4})";
    const fs::path out = dir.path() / "red";
    ASSERT_EQ(run_cli("reduce --config " + cfg.string() + " --output " + out.string()), 0);
    const json report = json::parse(slurp(out.string() + ".json"));
    EXPECT_DOUBLE_EQ(report.at("tau").get<double>(), 0.4);
    EXPECT_EQ(report.at("config").at("mode").get<std::string>(), "cpca");
}
