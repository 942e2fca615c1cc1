#include "dadpfl/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace dadpfl {

namespace {

std::string join_lines(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += '\n';
    out += s;
  }
  return out;
}

std::string where(const std::string& source, const YAML::Node& n) {
  const auto m = n.Mark();
  if (m.line < 0) return source;
  return source + ":" + std::to_string(m.line + 1);
}

// Walks one YAML mapping: each known key is read into its target, unknown
// keys and conversion failures are collected instead of thrown.
class Section {
 public:
  Section(const YAML::Node& node, std::string prefix, std::string source, std::vector<std::string>& errors)
      : node_(node), prefix_(std::move(prefix)), source_(std::move(source)), errors_(errors) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      errors_.push_back(where(source_, node_) + ": '" + label("") + "' must be a mapping");
      node_ = YAML::Node();
    }
  }

  template <class T>
  void read(const std::string& key, T& out) {
    known_.push_back(key);
    if (!valid()) return;
    const YAML::Node v = node_[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      errors_.push_back(where(source_, v) + ": '" + label(key) + "' has the wrong type");
    }
  }

  void read_enum(const std::string& key, const std::function<bool(const std::string&)>& assign,
                 const std::string& allowed) {
    std::string s;
    known_.push_back(key);
    if (!valid()) return;
    const YAML::Node v = node_[key];
    if (!v) return;
    try {
      s = v.as<std::string>();
    } catch (const YAML::Exception&) {
      errors_.push_back(where(source_, v) + ": '" + label(key) + "' must be a string");
      return;
    }
    if (!assign(s)) errors_.push_back(where(source_, v) + ": '" + label(key) + "' must be one of " + allowed);
  }

  Section child(const std::string& key) {
    known_.push_back(key);
    return Section(valid() ? node_[key] : YAML::Node(), label(key), source_, errors_);
  }

  // Reports keys that no read() asked for.
  void finish() {
    if (!valid()) return;
    for (const auto& kv : node_) {
      const auto k = kv.first.as<std::string>();
      if (std::find(known_.begin(), known_.end(), k) == known_.end())
        errors_.push_back(where(source_, kv.first) + ": unknown key '" + label(k) + "'");
    }
  }

 private:
  bool valid() const { return node_ && node_.IsMap(); }
  std::string label(const std::string& key) const {
    if (key.empty()) return prefix_;
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

  YAML::Node node_;
  std::string prefix_;
  std::string source_;
  std::vector<std::string>& errors_;
  std::vector<std::string> known_;
};

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_lines(problems)), problems_(std::move(problems)) {}

std::string to_string(TStarRule r) { return r == TStarRule::Adopted ? "adopted" : "paper-literal"; }

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> e;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) e.push_back(msg);
  };
  need(c.K >= 2, "K must be >= 2");
  need(c.M >= 1 && c.M + 1 <= c.K, "M must satisfy 1 <= M <= K-1");
  need(c.N <= c.M, "N must not exceed M (N=" + std::to_string(c.N) + ", M=" + std::to_string(c.M) + ")");
  need(c.topology != Topology::FullyConnected || c.M + 1 == c.K, "topology fully-connected requires M = K-1");
  need(c.T >= 1, "T must be >= 1");
  need(c.lr > 0.0, "lr must be > 0");
  need(c.lr_decay > 0.0 && c.lr_decay <= 1.0, "lr_decay must lie in (0, 1]");
  need(c.weight_decay >= 0.0, "weight_decay must be >= 0");
  need(c.batch_size >= 1, "batch_size must be >= 1");
  need(c.hidden >= 1, "hidden must be >= 1");
  need(c.initial_density > 0.0 && c.initial_density <= 1.0, "initial_density must lie in (0, 1]");
  need(c.target_sparsity >= 0.0 && c.target_sparsity < 1.0, "target_sparsity must lie in [0, 1)");
  need(c.delta_pr > 0.0, "delta_pr must be > 0");
  need(c.delta_v >= 0.0 && c.delta_v <= 1.0, "delta_v must lie in [0, 1]");
  need(c.b >= 0.0, "b must be >= 0");
  need(c.c > 0.0, "c must be > 0");
  need(c.pqi.p > 0.0 && c.pqi.q > c.pqi.p, "pqi requires 0 < p < q");
  need(c.pqi.gamma > 0.0, "pqi.gamma must be > 0");
  need(c.pqi.eta_c > 0.0, "pqi.eta_c must be > 0");
  need(c.pqi.beta >= 0.0 && c.pqi.beta <= 1.0, "pqi.beta must lie in [0, 1]");
  need(c.rigl_alpha >= 0.0 && c.rigl_alpha <= 1.0, "rigl_alpha must lie in [0, 1]");
  if (c.dataset.kind == DatasetConfig::Kind::Synthetic) {
    need(c.dataset.classes >= 2, "dataset.classes must be >= 2");
    need(c.dataset.dim >= 1, "dataset.dim must be >= 1");
    need(c.dataset.samples_per_client >= 1, "dataset.samples_per_client must be >= 1");
    need(c.dataset.blob_sigma > 0.0, "dataset.blob_sigma must be > 0");
    need(c.dataset.center_scale >= 0.0, "dataset.center_scale must be >= 0");
  } else {
    need(!c.dataset.path.empty(), "dataset.path is required for kind csv");
  }
  if (c.partition.kind == PartitionConfig::Kind::Dirichlet)
    need(c.partition.alpha > 0.0, "partition.alpha must be > 0");
  else
    need(c.partition.n_cls >= 1, "partition.n_cls must be >= 1");
  need(c.holdout_fraction >= 0.0 && c.holdout_fraction < 1.0, "holdout_fraction must lie in [0, 1)");
  need(c.cost.flops_per_s > 0.0 && c.cost.compute_power_w > 0.0 && c.cost.bandwidth_bps > 0.0 &&
           c.cost.comm_power_w > 0.0 && c.cost.correction > 0.0,
       "cost constants must be > 0");
  need(c.price_time >= 0.0 && c.price_energy >= 0.0, "cost prices must be >= 0");
  need(!c.theta_grid.empty(), "theta_grid must not be empty");
  for (double th : c.theta_grid) need(th >= 0.0 && th <= 1.0, "theta_grid values must lie in [0, 1]");
  const auto& sa = c.schedule_analysis;
  need(sa.iterations >= 1, "schedule_analysis.iterations must be >= 1");
  const auto& d = sa.durations;
  switch (d.kind) {
    case DurationConfig::Kind::CostModel: break;
    case DurationConfig::Kind::Constant: need(d.a > 0.0, "schedule_analysis.durations.a must be > 0"); break;
    case DurationConfig::Kind::Uniform:
      need(d.a > 0.0 && d.b >= d.a, "schedule_analysis.durations needs 0 < a <= b");
      break;
    case DurationConfig::Kind::LogNormal: need(d.b > 0.0, "schedule_analysis.durations.b (sigma) must be > 0"); break;
  }
  return e;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& ex) {
    throw ConfigError({source + ":" + std::to_string(ex.mark.line + 1) + ": parse error: " + ex.msg});
  }

  ExperimentConfig c;
  std::vector<std::string> errors;
  Section top(root, "", source, errors);
  top.read("seed", c.seed);
  top.read("K", c.K);
  top.read("M", c.M);
  top.read("N", c.N);
  top.read("T", c.T);
  top.read("E_l", c.E_l);
  top.read("lr", c.lr);
  top.read("lr_decay", c.lr_decay);
  top.read("weight_decay", c.weight_decay);
  top.read("batch_size", c.batch_size);
  top.read("hidden", c.hidden);
  top.read("initial_density", c.initial_density);
  top.read("target_sparsity", c.target_sparsity);
  top.read("delta_pr", c.delta_pr);
  top.read("delta_v", c.delta_v);
  top.read("b", c.b);
  top.read("c", c.c);
  top.read("rigl_alpha", c.rigl_alpha);
  top.read("further_pruning", c.further_pruning);
  top.read("holdout_fraction", c.holdout_fraction);
  top.read("theta_grid", c.theta_grid);
  top.read_enum(
      "tstar_rule",
      [&](const std::string& s) {
        if (s == "adopted") c.tstar_rule = TStarRule::Adopted;
        else if (s == "paper-literal") c.tstar_rule = TStarRule::PaperLiteral;
        else return false;
        return true;
      },
      "adopted | paper-literal");
  top.read_enum(
      "topology",
      [&](const std::string& s) {
        try {
          c.topology = parse_topology(s);
          return true;
        } catch (const std::exception&) {
          return false;
        }
      },
      "random | ring | fully-connected");

  Section pqi = top.child("pqi");
  pqi.read("p", c.pqi.p);
  pqi.read("q", c.pqi.q);
  pqi.read("gamma", c.pqi.gamma);
  pqi.read("eta_c", c.pqi.eta_c);
  pqi.read("beta", c.pqi.beta);
  pqi.finish();

  Section ds = top.child("dataset");
  ds.read_enum(
      "kind",
      [&](const std::string& s) {
        if (s == "synthetic") c.dataset.kind = DatasetConfig::Kind::Synthetic;
        else if (s == "csv") c.dataset.kind = DatasetConfig::Kind::Csv;
        else return false;
        return true;
      },
      "synthetic | csv");
  ds.read("classes", c.dataset.classes);
  ds.read("dim", c.dataset.dim);
  ds.read("samples_per_client", c.dataset.samples_per_client);
  ds.read("center_scale", c.dataset.center_scale);
  ds.read("blob_sigma", c.dataset.blob_sigma);
  ds.read("path", c.dataset.path);
  ds.finish();

  Section part = top.child("partition");
  part.read_enum(
      "kind",
      [&](const std::string& s) {
        if (s == "dirichlet") c.partition.kind = PartitionConfig::Kind::Dirichlet;
        else if (s == "pathological") c.partition.kind = PartitionConfig::Kind::Pathological;
        else return false;
        return true;
      },
      "dirichlet | pathological");
  part.read("alpha", c.partition.alpha);
  part.read("n_cls", c.partition.n_cls);
  part.finish();

  Section cost = top.child("cost");
  cost.read("flops_per_s", c.cost.flops_per_s);
  cost.read("compute_power_w", c.cost.compute_power_w);
  cost.read("bandwidth_bps", c.cost.bandwidth_bps);
  cost.read("comm_power_w", c.cost.comm_power_w);
  cost.read("correction", c.cost.correction);
  cost.read("price_time", c.price_time);
  cost.read("price_energy", c.price_energy);
  cost.finish();

  Section sa = top.child("schedule_analysis");
  sa.read("m_values", c.schedule_analysis.m_values);
  sa.read("n_values", c.schedule_analysis.n_values);
  sa.read("include_n_equals_m", c.schedule_analysis.include_n_equals_m);
  sa.read("iterations", c.schedule_analysis.iterations);
  Section dur = sa.child("durations");
  auto& dc = c.schedule_analysis.durations;
  dur.read_enum(
      "kind",
      [&](const std::string& s) {
        if (s == "cost-model") dc.kind = DurationConfig::Kind::CostModel;
        else if (s == "constant") dc.kind = DurationConfig::Kind::Constant;
        else if (s == "uniform") dc.kind = DurationConfig::Kind::Uniform;
        else if (s == "lognormal") dc.kind = DurationConfig::Kind::LogNormal;
        else return false;
        return true;
      },
      "cost-model | constant | uniform | lognormal");
  dur.read("a", dc.a);
  dur.read("b", dc.b);
  dur.finish();
  sa.finish();
  top.finish();

  for (auto& v : validate(c)) errors.push_back(source + ": " + v);
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config '" + path.string() + "'"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

}  // namespace dadpfl
