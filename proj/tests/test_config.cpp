#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dadpfl/config.hpp"
#include "dadpfl/runner.hpp"

using namespace dadpfl;

namespace {

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string problems_of(const std::string& yaml) {
  try {
    parse_config_text(yaml, "cfg.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

ExperimentConfig small_run() {
  ExperimentConfig cfg;
  cfg.seed = 5;
  cfg.K = 5;
  cfg.M = 2;
  cfg.N = 1;
  cfg.T = 4;
  cfg.E_l = 1;
  cfg.hidden = 8;
  cfg.batch_size = 16;
  cfg.dataset.classes = 3;
  cfg.dataset.dim = 4;
  cfg.dataset.samples_per_client = 30;
  return cfg;
}

}  // namespace

TEST(Config, EmptyDocumentKeepsDefaults) {
  const auto c = parse_config_text("", "empty.yaml");
  const ExperimentConfig d;
  EXPECT_EQ(c.K, 100u);
  EXPECT_EQ(c.M, 10u);
  EXPECT_EQ(c.T, 500u);
  EXPECT_EQ(c.E_l, 5u);
  EXPECT_DOUBLE_EQ(c.lr, 0.1);
  EXPECT_DOUBLE_EQ(c.lr_decay, 0.998);
  EXPECT_DOUBLE_EQ(c.weight_decay, 5e-4);
  EXPECT_EQ(c.batch_size, 128u);
  EXPECT_DOUBLE_EQ(c.target_sparsity, 0.8);
  EXPECT_DOUBLE_EQ(c.c, d.c);
  EXPECT_TRUE(validate(c).empty());
}

TEST(Config, ReadsNestedValues) {
  const auto c = parse_config_text(
      "K: 16\nM: 4\nN: 4\ndelta_pr: 0.02\ntopology: ring\ntstar_rule: paper-literal\n"
      "pqi:\n  beta: 0.3\npartition:\n  kind: pathological\n  n_cls: 3\ntheta_grid: [0, 0.5, 1]\n");
  EXPECT_EQ(c.K, 16u);
  EXPECT_DOUBLE_EQ(c.delta_pr, 0.02);
  EXPECT_EQ(c.topology, Topology::Ring);
  EXPECT_EQ(c.tstar_rule, TStarRule::PaperLiteral);
  EXPECT_DOUBLE_EQ(c.pqi.beta, 0.3);
  EXPECT_EQ(c.partition.kind, PartitionConfig::Kind::Pathological);
  EXPECT_EQ(c.partition.n_cls, 3u);
  EXPECT_EQ(c.theta_grid.size(), 3u);
}

TEST(Config, NExceedingMNamesBothFields) {
  const auto msg = problems_of("M: 5\nN: 6\n");
  EXPECT_NE(msg.find("N"), std::string::npos);
  EXPECT_NE(msg.find("M=5"), std::string::npos);
  EXPECT_NE(msg.find("N=6"), std::string::npos);
}

TEST(Config, UnknownKeyReportsLine) {
  const auto msg = problems_of("K: 10\nM: 3\nbogus: 1\n");
  EXPECT_NE(msg.find("cfg.yaml:3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("bogus"), std::string::npos);
}

TEST(Config, TypeAndSyntaxErrors) {
  EXPECT_NE(problems_of("K: ten\n").find("cfg.yaml:1"), std::string::npos);
  EXPECT_NE(problems_of("K: 10\nM: [1,\n").find("parse error"), std::string::npos);
  EXPECT_NE(problems_of("topology: star\n").find("must be one of"), std::string::npos);
}

TEST(Config, ListsEveryProblem) {
  try {
    parse_config_text("K: 1\nlr: -1\npqi:\n  beta: 2\nnope: 3\n", "cfg.yaml");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_GE(e.problems().size(), 4u);
  }
}

TEST(Config, ReadsFileFromDisk) {
  const auto p = std::filesystem::temp_directory_path() / "dadpfl_cfg_test.yaml";
  std::ofstream(p) << "seed: 9\nT: 3\n";
  const auto c = parse_config(p);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.T, 3u);
  EXPECT_THROW(parse_config(p.string() + ".missing"), std::exception);
}

TEST(Runner, GitBlobHash) {
  EXPECT_EQ(git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(Runner, ScheduleAnalysisIsMonotoneInN) {
  ExperimentConfig cfg;
  cfg.K = 20;
  cfg.schedule_analysis.m_values = {2, 5};
  cfg.schedule_analysis.n_values = {0, 1, 2, 5};
  cfg.schedule_analysis.iterations = 300;
  cfg.schedule_analysis.durations.kind = DurationConfig::Kind::Constant;
  const auto j = cmd_schedule_analyze(cfg);
  std::size_t lastM = 0;
  double lastWait = -1.0;
  for (const auto& row : j["rows"]) {
    const std::size_t M = row["M"];
    if (M != lastM) lastWait = -1.0, lastM = M;
    const double par = row["mean_parallelism"], wait = row["mean_client_wait"];
    EXPECT_GT(wait, lastWait);
    // For N >= 1 parallelism only counts clients with no prior neighbours.
    if (row["N"] == 0) {
      EXPECT_DOUBLE_EQ(par, 1.0);
      EXPECT_EQ(wait, 0.0);
    } else {
      EXPECT_LT(par, 1.0);
    }
    lastWait = wait;
  }
  EXPECT_EQ(j["rows"].size(), 7u);

  cfg.schedule_analysis.m_values = {25};
  EXPECT_THROW(cmd_schedule_analyze(cfg), ConfigError);
}

TEST(Runner, RunIsReproducibleAndCostReportReadsIt) {
  const auto cfg = small_run();
  const auto base = std::filesystem::temp_directory_path() / "dadpfl_run_test";
  std::filesystem::remove_all(base);
  const auto a = cmd_run(cfg, "seed: 5\n", base / "a", 1);
  const auto b = cmd_run(cfg, "seed: 5\n", base / "b", 3);
  EXPECT_EQ(read_all(a.metrics_csv), read_all(b.metrics_csv));
  EXPECT_EQ(read_all(a.prune_events_csv), read_all(b.prune_events_csv));
  const auto summary = nlohmann::json::parse(read_all(a.summary_json));
  EXPECT_EQ(summary["rounds"], 4);
  EXPECT_EQ(summary["input_hashes"]["config"], git_blob_hash("seed: 5\n"));

  const auto table = read_metrics_csv(a.metrics_csv);
  ASSERT_EQ(table.rows.size(), 4u);
  const auto rep = cmd_cost_report(table, cfg);
  EXPECT_EQ(rep["c_total"].size(), cfg.theta_grid.size());
  const double ct = rep["c_time"], ce = rep["c_energy"];
  EXPECT_DOUBLE_EQ(rep["c_total"][0].get<double>(), ct);
  EXPECT_DOUBLE_EQ(rep["c_total"][10].get<double>(), ce);
  EXPECT_DOUBLE_EQ(ce, table.rows.back().cum_energy_j);
}

TEST(Runner, PartitionInspectPathological) {
  auto cfg = small_run();
  cfg.K = 10;
  cfg.M = 3;
  cfg.dataset.classes = 10;
  cfg.partition.kind = PartitionConfig::Kind::Pathological;
  cfg.partition.n_cls = 2;
  const auto csv = cmd_partition_inspect(cfg);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("client,class_0,", 0), 0u);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream ls(line);
    std::string cell;
    std::vector<long> v;
    while (std::getline(ls, cell, ',')) v.push_back(std::stol(cell));
    ASSERT_EQ(v.size(), 12u);
    int distinct = 0;
    for (std::size_t c = 1; c <= 10; ++c) distinct += v[c] > 0;
    EXPECT_LE(distinct, 2);
  }
  EXPECT_EQ(rows, 10u);
}
