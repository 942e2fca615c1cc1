#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dadpfl/config.hpp"
#include "dadpfl/protocol.hpp"

namespace dadpfl {

nlohmann::json to_json(const ExperimentConfig& cfg);

// SHA-1 of "blob <size>\0<content>", as git hash-object computes it.
std::string git_blob_hash(const std::string& content);

struct RunOutputs {
  std::filesystem::path metrics_csv;
  std::filesystem::path prune_events_csv;
  std::filesystem::path summary_json;
};

// `config_text` is hashed into summary.json alongside the dataset file, if any.
RunOutputs cmd_run(const ExperimentConfig& cfg, const std::string& config_text, const std::filesystem::path& out_dir,
                   std::size_t workers = 1);

nlohmann::json cmd_schedule_analyze(const ExperimentConfig& cfg);

struct MetricsTable {
  std::vector<MetricsRow> rows;
};
MetricsTable read_metrics_csv(const std::filesystem::path& path);

nlohmann::json cmd_cost_report(const MetricsTable& metrics, const ExperimentConfig& cfg);

std::string cmd_partition_inspect(const ExperimentConfig& cfg);

}  // namespace dadpfl
