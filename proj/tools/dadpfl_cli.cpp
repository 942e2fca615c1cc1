// Experiment runner: run | schedule-analyze | cost-report | partition-inspect.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dadpfl/config.hpp"
#include "dadpfl/runner.hpp"

namespace fs = std::filesystem;
using dadpfl::ExperimentConfig;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  std::string out_dir = ".";
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dadpfl::ConfigError({"cannot open config '" + path + "'"});
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Config file, then the SEED environment variable, then --seed.
ExperimentConfig load(const Common& c, std::string& text) {
  text = c.config_path.empty() ? std::string() : slurp(c.config_path);
  ExperimentConfig cfg = dadpfl::parse_config_text(text, c.config_path.empty() ? "<defaults>" : c.config_path);
  if (const char* env = std::getenv("SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw dadpfl::ConfigError({"SEED environment variable is not an unsigned integer"});
    }
  }
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

void write(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path().empty() ? fs::path(".") : p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << s;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "YAML experiment config (defaults when omitted)");
  sub->add_option("--seed", c.seed, "root seed (overrides config and SEED)");
  sub->add_option("--workers", c.workers, "max concurrent clients")->check(CLI::PositiveNumber);
  sub->add_option("--out", c.out_dir, "output directory");
}

int fail(const std::string& kind, const std::string& msg) {
  nlohmann::json err{{"error", kind}, {"message", msg}};
  std::cerr << err.dump() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized personalized FL simulator"};
  app.require_subcommand(1);
  Common c;

  auto* run = app.add_subcommand("run", "run an experiment; writes metrics.csv, prune_events.csv, summary.json");
  add_common(run, c);
  auto* sched = app.add_subcommand("schedule-analyze", "Monte Carlo parallelism/delay; writes schedule_analysis.json");
  add_common(sched, c);
  std::string metrics_path;
  auto* cost = app.add_subcommand("cost-report", "cost curve over theta; writes cost_report.json");
  add_common(cost, c);
  cost->add_option("--metrics", metrics_path, "metrics.csv from a previous run")->required();
  auto* part = app.add_subcommand("partition-inspect", "per-client class histogram; writes partition.csv");
  add_common(part, c);

  CLI11_PARSE(app, argc, argv);

  try {
    std::string text;
    const ExperimentConfig cfg = load(c, text);
    const fs::path out(c.out_dir);
    if (*run) {
      const auto res = dadpfl::cmd_run(cfg, text, out, c.workers);
      std::cout << res.metrics_csv.string() << "\n" << res.summary_json.string() << "\n";
    } else if (*sched) {
      write(out / "schedule_analysis.json", dadpfl::cmd_schedule_analyze(cfg).dump(2) + "\n");
      std::cout << (out / "schedule_analysis.json").string() << "\n";
    } else if (*cost) {
      const auto table = dadpfl::read_metrics_csv(metrics_path);
      write(out / "cost_report.json", dadpfl::cmd_cost_report(table, cfg).dump(2) + "\n");
      std::cout << (out / "cost_report.json").string() << "\n";
    } else if (*part) {
      write(out / "partition.csv", dadpfl::cmd_partition_inspect(cfg));
      std::cout << (out / "partition.csv").string() << "\n";
    }
  } catch (const dadpfl::ConfigError& e) {
    return fail("config", e.what());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
  return 0;
}
