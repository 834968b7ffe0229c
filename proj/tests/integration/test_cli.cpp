#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  fs::path dir;

  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::temp_directory_path() / "windcast_cli" / info->name();
    fs::remove_all(dir);
    fs::create_directories(dir);
    json cfg = {{"run_id", "run"},
                {"out_dir", "unused"},
                {"synth", {{"n_records", 1200}}},
                {"filter", {{"epochs", 15}, {"min_cluster_rows", 50}}},
                {"forecaster", {{"hidden1", 6}, {"max_epochs", 2}, {"batch_size", 128}}},
                {"experiment", {{"bs_grid", {128, 256}}, {"lr_grid", {1e-3, 1e-2}}, {"horizons", {1, 3}}}},
                {"search", {{"budget", 10}, {"population", 5}, {"max_epochs", 2}, {"bs_grid", {128, 256}}, {"lr_grid", {1e-3, 1e-2}}}}};
    write("cfg.json", cfg.dump());
  }

  void write(const std::string& name, const std::string& text) { std::ofstream(dir / name) << text; }

  Outcome run(const std::string& args, const std::string& env = "") {
    const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
    // Relative paths in `args` resolve inside the test directory.
    const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" WINDCAST_CLI "' --config '" + (dir / "cfg.json").string() + "' --out '" +
                            dir.string() + "' " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.out = slurp(out);
    o.err = slurp(err);
    return o;
  }

  std::vector<std::vector<std::string>> csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string c;
      while (std::getline(ss, c, ',')) cells.push_back(c);
      rows.push_back(cells);
    }
    return rows;
  }
};

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("nonsense").code, 2);
  EXPECT_EQ(run("forecast").code, 2);
  EXPECT_EQ(run("experiment not-a-kind").code, 2);
  write("bad.json", R"({"sed": 3})");
  const auto o = run("synth", "WINDCAST_CONFIG='" + (dir / "bad.json").string() + "'");
  // --config on the command line wins over the environment.
  EXPECT_EQ(o.code, 0);
  const std::string cmd = "'" WINDCAST_CLI "' --config '" + (dir / "bad.json").string() + "' synth > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 2);
}

TEST_F(Cli, TrainForecastEvaluate) {
  ASSERT_EQ(run("synth -o data.csv").code, 0) << run("synth -o data.csv").err;
  const auto data = (dir / "data.csv").string();
  ASSERT_EQ(run("train -i " + data + " -m model.json --variant M3").code, 0);
  const auto ingest = run("ingest -i " + data);
  ASSERT_EQ(ingest.code, 0);
  const auto f = run("forecast -m model.json -i " + data + " -o pred.csv");
  ASSERT_EQ(f.code, 0) << f.err;
  const auto rows = csv(dir / "pred.csv");
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows[0], (std::vector<std::string>{"timestamp", "predicted_kw", "measured_kw"}));
  // Gap-free 1200 records, lookback 6, horizon 1.
  EXPECT_EQ(rows.size() - 1, 1200u - 6u);

  const auto direct = run("evaluate -m model.json -i " + data);
  const auto rescored = run("evaluate -p pred.csv");
  ASSERT_EQ(direct.code, 0) << direct.err;
  ASSERT_EQ(rescored.code, 0) << rescored.err;
  const auto a = json::parse(direct.out), b = json::parse(rescored.out);
  EXPECT_EQ(a.at("units"), "kW");
  for (const char* k : {"mse", "rmse", "mae"})
    EXPECT_NEAR(a.at(k).get<double>(), b.at(k).get<double>(), 1e-9 * std::max(1.0, a.at(k).get<double>())) << k;
}

TEST_F(Cli, ForecastNamesMissingColumn) {
  ASSERT_EQ(run("synth -o data.csv").code, 0);
  ASSERT_EQ(run("train -i " + (dir / "data.csv").string() + " -m model.json --variant M3").code, 0);
  std::ifstream in(dir / "data.csv");
  std::ofstream out(dir / "nopower.csv");
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (i != 3) out << (i ? "," : "") << cells[i];
    out << '\n';
  }
  out.close();
  ASSERT_NE(slurp(dir / "data.csv").find(",power,"), std::string::npos);
  const auto o = run("forecast -m model.json -i " + (dir / "nopower.csv").string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("power"), std::string::npos);
  EXPECT_NE(o.err.find("M3"), std::string::npos);
}

TEST_F(Cli, CorruptCheckpointFails) {
  write("model.json", "{\"format_version\": 1, \"weights\": {}}");
  write("x.csv", "timestamp,wind_speed\n");
  EXPECT_EQ(run("forecast -m model.json -i " + (dir / "x.csv").string()).code, 1);
}

TEST_F(Cli, ModelComparisonIsReproducible) {
  const auto o = run("experiment model-comparison");
  ASSERT_EQ(o.code, 0) << o.err;
  const auto report = json::parse(slurp(dir / "run" / "report.json"));
  EXPECT_TRUE(report.at("complete").get<bool>());
  const auto results = json::parse(slurp(dir / "run" / "results.json"));
  EXPECT_EQ(results.size(), 16u);  // 4 variants x 2 batch sizes x 2 learning rates
  EXPECT_EQ(report.at("friedman").at("rank_vector").size(), 4u);
  const std::string first = slurp(dir / "run" / "results.json");

  ASSERT_EQ(run("report-plots " + (dir / "run").string()).code, 0);
  const auto grid = csv(dir / "run" / "plots" / "grid_surface.csv");
  EXPECT_EQ(grid.size() - 1, 2u * 2u);  // |bs| x |lr|

  fs::rename(dir / "run", dir / "first");
  ASSERT_EQ(run("experiment model-comparison").code, 0);
  EXPECT_EQ(slurp(dir / "run" / "results.json"), first);
  EXPECT_EQ(slurp(dir / "run" / "report.json"), slurp(dir / "first" / "report.json"));
}

TEST_F(Cli, OutlierAblationScatter) {
  ASSERT_EQ(run("experiment outlier-ablation").code, 0);
  ASSERT_EQ(run("report-plots " + (dir / "run").string()).code, 0);
  const auto rows = csv(dir / "run" / "plots" / "power_curve_scatter.csv");
  ASSERT_GT(rows.size(), 1u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"wind_speed", "power_kw", "removed"}));
  std::set<std::string> flags;
  for (std::size_t i = 1; i < rows.size(); ++i) flags.insert(rows[i].at(2));
  EXPECT_EQ(flags, (std::set<std::string>{"0", "1"}));
}

TEST_F(Cli, OptimizerComparisonRespectsBudget) {
  const auto o = run("experiment optimizer-comparison");
  ASSERT_EQ(o.code, 0) << o.err;
  std::size_t traces = 0;
  for (const auto& e : fs::directory_iterator(dir / "run" / "traces")) {
    if (e.path().extension() != ".json") continue;
    ++traces;
    const auto t = json::parse(slurp(e.path()));
    EXPECT_LE(t.at("evaluations").get<std::size_t>(), 10u) << e.path();
  }
  EXPECT_GE(traces, 3u);
  ASSERT_EQ(run("report-plots " + (dir / "run").string()).code, 0);
  const auto rows = csv(dir / "run" / "plots" / "convergence.csv");
  ASSERT_GT(rows.size(), 1u);
  std::map<std::string, double> last;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].at(3).empty()) continue;
    const double best = std::stod(rows[i][3]);
    auto it = last.find(rows[i][0]);
    if (it != last.end()) {
      EXPECT_LE(best, it->second) << rows[i][0];
    }
    last[rows[i][0]] = best;
  }
}

TEST_F(Cli, GridLargerThanBudgetIsUsageError) {
  json cfg = json::parse(slurp(dir / "cfg.json"));
  cfg["search"]["budget"] = 5;
  cfg["search"]["bs_grid"] = {128, 256, 512};
  cfg["search"]["lr_grid"] = {1e-3, 1e-2};
  write("cfg.json", cfg.dump());
  EXPECT_EQ(run("experiment optimizer-comparison").code, 2);
}

TEST_F(Cli, ReportPlotsOnEmptyRun) {
  fs::create_directories(dir / "empty");
  const auto o = run("report-plots " + (dir / "empty").string());
  EXPECT_EQ(o.code, 1);
  EXPECT_FALSE(o.err.empty());
}

TEST_F(Cli, EnvironmentOverrides) {
  ASSERT_EQ(run("synth -o a.csv", "WINDCAST_SEED=5").code, 0);
  ASSERT_EQ(run("synth -o b.csv", "WINDCAST_SEED=5").code, 0);
  ASSERT_EQ(run("synth -o c.csv", "WINDCAST_SEED=6").code, 0);
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_NE(slurp(dir / "a.csv"), slurp(dir / "c.csv"));
  EXPECT_EQ(run("synth -o d.csv --seed 5", "WINDCAST_SEED=6").code, 0);
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "d.csv"));
}

TEST_F(Cli, TuneBenchmark) {
  const auto o = run("tune -a sade --benchmark sphere --dim 3 --budget 300 -o tune.json");
  ASSERT_EQ(o.code, 0) << o.err;
  const auto j = json::parse(slurp(dir / "tune.json"));
  EXPECT_LE(j.at("best").at("evaluations").get<std::size_t>(), 300u);
  EXPECT_TRUE(fs::exists(dir / "tune.csv"));
}
