#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dadpfl/cost.hpp"
#include "dadpfl/sparse.hpp"
#include "dadpfl/topology.hpp"

namespace dadpfl {

enum class TStarRule { Adopted, PaperLiteral };

struct DatasetConfig {
  enum class Kind { Synthetic, Csv };
  Kind kind = Kind::Synthetic;
  std::size_t classes = 10;
  std::size_t dim = 32;
  std::size_t samples_per_client = 200;
  double center_scale = 1.0;
  double blob_sigma = 1.0;
  std::string path;  // csv only
};

struct PartitionConfig {
  enum class Kind { Dirichlet, Pathological };
  Kind kind = Kind::Dirichlet;
  double alpha = 0.3;
  std::size_t n_cls = 2;
};

struct DurationConfig {
  // cost-model: every client takes the T_comp of one round of local training
  // at the initial density.
  enum class Kind { CostModel, Constant, Uniform, LogNormal };
  Kind kind = Kind::CostModel;
  double a = 1.0;
  double b = 1.0;
};

struct ScheduleAnalysisConfig {
  std::vector<std::size_t> m_values{1, 2, 5, 10, 20};
  std::vector<std::size_t> n_values{0, 1, 2, 5, 10, 20};  // pairs with N > M are skipped
  bool include_n_equals_m = true;
  std::size_t iterations = 10000;
  DurationConfig durations;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t K = 100;
  std::size_t M = 10;
  std::size_t N = 10;
  std::size_t T = 500;
  std::size_t E_l = 5;
  double lr = 0.1;
  double lr_decay = 0.998;
  double weight_decay = 5e-4;
  std::size_t batch_size = 128;
  std::size_t hidden = 64;
  double initial_density = 0.5;  // initial sparsity 0.5
  double target_sparsity = 0.8;
  double delta_pr = 0.02;
  double delta_v = 0.5;
  double b = 0.0;
  double c = 1.3;
  SapParams pqi;
  double rigl_alpha = 0.5;
  bool further_pruning = true;
  TStarRule tstar_rule = TStarRule::Adopted;
  Topology topology = Topology::Random;
  DatasetConfig dataset;
  PartitionConfig partition;
  double holdout_fraction = 0.2;
  CostConstants cost;
  double price_time = 1.0;
  double price_energy = 1.0;
  std::vector<double> theta_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  ScheduleAnalysisConfig schedule_analysis;
};

// Carries every problem found, one message per line.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Lists every range violation (empty when valid).
std::vector<std::string> validate(const ExperimentConfig& cfg);

// YAML mapping; absent keys keep their defaults, unknown keys are rejected.
ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
ExperimentConfig parse_config(const std::filesystem::path& path);

std::string to_string(TStarRule r);

}  // namespace dadpfl
