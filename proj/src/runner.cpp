#include "dadpfl/runner.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "dadpfl/data.hpp"

namespace dadpfl {

namespace {

std::string duration_kind(DurationConfig::Kind k) {
  switch (k) {
    case DurationConfig::Kind::CostModel: return "cost-model";
    case DurationConfig::Kind::Constant: return "constant";
    case DurationConfig::Kind::Uniform: return "uniform";
    case DurationConfig::Kind::LogNormal: return "lognormal";
  }
  return "cost-model";
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << content;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + p.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["K"] = c.K;
  j["M"] = c.M;
  j["N"] = c.N;
  j["T"] = c.T;
  j["E_l"] = c.E_l;
  j["lr"] = c.lr;
  j["lr_decay"] = c.lr_decay;
  j["weight_decay"] = c.weight_decay;
  j["batch_size"] = c.batch_size;
  j["hidden"] = c.hidden;
  j["initial_density"] = c.initial_density;
  j["target_sparsity"] = c.target_sparsity;
  j["delta_pr"] = c.delta_pr;
  j["delta_v"] = c.delta_v;
  j["b"] = c.b;
  j["c"] = c.c;
  j["pqi"] = {{"p", c.pqi.p}, {"q", c.pqi.q}, {"gamma", c.pqi.gamma}, {"eta_c", c.pqi.eta_c}, {"beta", c.pqi.beta}};
  j["rigl_alpha"] = c.rigl_alpha;
  j["further_pruning"] = c.further_pruning;
  j["tstar_rule"] = to_string(c.tstar_rule);
  j["topology"] = to_string(c.topology);
  j["dataset"] = {{"kind", c.dataset.kind == DatasetConfig::Kind::Synthetic ? "synthetic" : "csv"},
                  {"classes", c.dataset.classes},
                  {"dim", c.dataset.dim},
                  {"samples_per_client", c.dataset.samples_per_client},
                  {"center_scale", c.dataset.center_scale},
                  {"blob_sigma", c.dataset.blob_sigma},
                  {"path", c.dataset.path}};
  j["partition"] = {{"kind", c.partition.kind == PartitionConfig::Kind::Dirichlet ? "dirichlet" : "pathological"},
                    {"alpha", c.partition.alpha},
                    {"n_cls", c.partition.n_cls}};
  j["holdout_fraction"] = c.holdout_fraction;
  j["cost"] = {{"flops_per_s", c.cost.flops_per_s},     {"compute_power_w", c.cost.compute_power_w},
               {"bandwidth_bps", c.cost.bandwidth_bps}, {"comm_power_w", c.cost.comm_power_w},
               {"correction", c.cost.correction},       {"price_time", c.price_time},
               {"price_energy", c.price_energy}};
  j["theta_grid"] = c.theta_grid;
  const auto& sa = c.schedule_analysis;
  j["schedule_analysis"] = {{"m_values", sa.m_values},
                            {"n_values", sa.n_values},
                            {"include_n_equals_m", sa.include_n_equals_m},
                            {"iterations", sa.iterations},
                            {"durations", {{"kind", duration_kind(sa.durations.kind)},
                                           {"a", sa.durations.a},
                                           {"b", sa.durations.b}}}};
  return j;
}

std::string git_blob_hash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size());
  EVP_DigestUpdate(ctx, content.data(), content.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

RunOutputs cmd_run(const ExperimentConfig& cfg, const std::string& config_text, const std::filesystem::path& out_dir,
                   std::size_t workers) {
  std::filesystem::create_directories(out_dir);
  const auto res = run_experiment(cfg, workers);

  RunOutputs out{out_dir / "metrics.csv", out_dir / "prune_events.csv", out_dir / "summary.json"};
  write_file(out.metrics_csv, metrics_csv(res.metrics));
  write_file(out.prune_events_csv, prune_events_csv(res.prune_events, res.metrics));

  nlohmann::json s;
  s["config"] = to_json(cfg);
  s["input_hashes"]["config"] = git_blob_hash(config_text);
  if (cfg.dataset.kind == DatasetConfig::Kind::Csv) s["input_hashes"]["dataset"] = git_blob_hash(read_file(cfg.dataset.path));
  s["rounds"] = res.metrics.size();
  if (res.plan.t_star)
    s["t_star"] = *res.plan.t_star;
  else
    s["t_star"] = nullptr;
  s["pruning_schedule"] = res.plan.schedule;
  s["vote_fraction"] = res.vote_fractions;
  s["mean_detection_score"] = res.mean_delta;
  if (!res.metrics.empty()) {
    const auto& last = res.metrics.back();
    s["final"] = {{"mean_acc", last.mean_acc},
                  {"std_acc", last.std_acc},
                  {"mean_sparsity", last.mean_sparsity},
                  {"cum_flops", last.cum_flops},
                  {"cum_energy_J", last.cum_energy_j}};
  }
  s["ledger"] = {{"cum_flops", res.ledger.cum_flops},
                 {"cum_bytes", res.ledger.cum_bytes},
                 {"c_time_s", res.ledger.c_time},
                 {"c_energy_J", res.ledger.c_energy}};
  write_file(out.summary_json, s.dump(2) + "\n");
  return out;
}

nlohmann::json cmd_schedule_analyze(const ExperimentConfig& cfg) {
  const auto& sa = cfg.schedule_analysis;
  DurationModel model;
  double cost_model_duration = 0.0;
  switch (sa.durations.kind) {
    case DurationConfig::Kind::CostModel: {
      // One client's local-training time at the initial density.
      const std::size_t in_dim = cfg.dataset.kind == DatasetConfig::Kind::Synthetic ? cfg.dataset.dim : 1;
      const auto shapes = mlp_shapes(in_dim, cfg.hidden, std::max<std::size_t>(cfg.dataset.classes, 2));
      const auto counts = erk_layer_counts(shapes, cfg.initial_density);
      MaskSet mask(shapes);
      for (std::size_t l = 0; l < shapes.size(); ++l)
        for (std::size_t i = counts[l]; i < shapes[l].weights(); ++i) mask.set(l, i, false);
      const auto n_train = static_cast<std::size_t>(
          std::round(double(cfg.dataset.samples_per_client) * (1.0 - cfg.holdout_fraction)));
      cost_model_duration = energy_time(round_client_flops(cfg, mask, std::max<std::size_t>(n_train, 1)), 0.0, cfg.cost).t_comp;
      model = DurationModel::constant(cost_model_duration);
      break;
    }
    case DurationConfig::Kind::Constant: model = DurationModel::constant(sa.durations.a); break;
    case DurationConfig::Kind::Uniform: model = {DurationModel::Kind::Uniform, sa.durations.a, sa.durations.b}; break;
    case DurationConfig::Kind::LogNormal:
      model = {DurationModel::Kind::LogNormal, sa.durations.a, sa.durations.b};
      break;
  }

  nlohmann::json out;
  out["K"] = cfg.K;
  out["iterations"] = sa.iterations;
  out["topology"] = to_string(cfg.topology);
  out["duration_model"] = {{"kind", duration_kind(sa.durations.kind)}, {"a", model.a}, {"b", model.b}};
  out["rows"] = nlohmann::json::array();
  const SeedTree seeds(cfg.seed);
  for (std::size_t M : sa.m_values)
    if (M < 1 || M + 1 > cfg.K)
      throw ConfigError({"schedule_analysis.m_values must lie in [1, K-1] (got " + std::to_string(M) + ")"});
  for (std::size_t M : sa.m_values) {
    std::vector<std::size_t> ns;
    for (std::size_t n : sa.n_values)
      if (n <= M) ns.push_back(n);
    if (sa.include_n_equals_m && std::find(ns.begin(), ns.end(), M) == ns.end()) ns.push_back(M);
    for (std::size_t N : ns) {
      Rng rng = seeds.stream("schedule-analysis", M, N);
      const auto s = estimate_parallelism_delay(cfg.K, M, N, sa.iterations, model, rng, cfg.topology);
      auto q = [](const Quantiles& x) { return nlohmann::json{{"p05", x.p05}, {"p50", x.p50}, {"p95", x.p95}}; };
      out["rows"].push_back({{"M", M},
                             {"N", N},
                             {"mean_parallelism", s.mean_parallelism},
                             {"mean_max_wait", s.mean_max_wait},
                             {"mean_client_wait", s.mean_client_wait},
                             {"mean_makespan", s.mean_makespan},
                             {"parallelism_quantiles", q(s.parallelism_q)},
                             {"max_wait_quantiles", q(s.max_wait_q)},
                             {"client_wait_quantiles", q(s.client_wait_q)}});
    }
  }
  return out;
}

MetricsTable read_metrics_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  MetricsTable t;
  if (!std::getline(in, line) || line.rfind("round,", 0) != 0)
    throw std::runtime_error("'" + path.string() + "' is not a metrics.csv (missing header)");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 10 columns");
    try {
      MetricsRow r;
      r.round = std::stoul(cells[0]);
      r.mean_acc = std::stod(cells[1]);
      r.std_acc = std::stod(cells[2]);
      r.mean_sparsity = std::stod(cells[3]);
      r.t_star_flag = std::stoi(cells[4]);
      r.sap_events = std::stoul(cells[5]);
      r.busiest_comm_bytes = std::stod(cells[6]);
      r.cum_flops = std::stod(cells[7]);
      r.round_makespan_s = std::stod(cells[8]);
      r.cum_energy_j = std::stod(cells[9]);
      t.rows.push_back(r);
    } catch (const std::exception&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return t;
}

nlohmann::json cmd_cost_report(const MetricsTable& m, const ExperimentConfig& cfg) {
  double c_time = 0.0;
  std::vector<double> busiest;
  for (const auto& r : m.rows) {
    // The busiest uploader also has the slowest upload.
    c_time += r.round_makespan_s + energy_time(0.0, r.busiest_comm_bytes, cfg.cost).t_comm;
    busiest.push_back(r.busiest_comm_bytes);
  }
  const double c_energy = m.rows.empty() ? 0.0 : m.rows.back().cum_energy_j;
  nlohmann::json out;
  out["theta_grid"] = cfg.theta_grid;
  out["c_total"] = total_cost_curve(c_time, c_energy, cfg.theta_grid, cfg.price_time, cfg.price_energy);
  out["c_time"] = c_time;
  out["c_energy"] = c_energy;
  out["busiest_bytes_per_round"] = busiest;
  return out;
}

std::string cmd_partition_inspect(const ExperimentConfig& cfg) {
  const auto errs = validate(cfg);
  if (!errs.empty()) throw ConfigError(errs);
  const Dataset data = build_dataset(cfg);
  const Partition parts = build_partition(cfg, data);
  const auto h = class_histogram(data.labels, parts, data.classes);
  std::ostringstream os;
  os << "client";
  for (std::size_t c = 0; c < data.classes; ++c) os << ",class_" << c;
  os << ",total\n";
  for (std::size_t k = 0; k < h.size(); ++k) {
    os << k;
    for (auto n : h[k]) os << ',' << n;
    os << ',' << parts[k].size() << '\n';
  }
  return os.str();
}

}  // namespace dadpfl
