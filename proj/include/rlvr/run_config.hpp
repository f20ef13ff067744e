#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "rlvr/data_filter.hpp"
#include "rlvr/grpo.hpp"
#include "rlvr/model_client.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/rewards.hpp"

namespace rlvr {

struct RunPaths {
  std::string dataset;
  std::string cache_dir;
  std::string results_dir = "results";
  std::string checkpoint;
};

// Everything a CLI run needs. Loaded from one JSON document; command-line
// flags are applied on top by the caller.
struct RunConfig {
  std::string run_id;  // empty until resolve_run_id
  GRPOConfig grpo;
  RewardWeights rewards;
  SelectionSpec selection;
  std::size_t feature_dim = kDefaultFeatureDim;
  std::optional<EndpointConfig> endpoint;
  RunPaths paths;
  std::size_t eval_workers = 1;

  // Sets both the training and the selection seed.
  void set_seed(std::uint64_t seed);
  void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
// Missing keys keep their defaults; unknown top-level keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Letters, digits, '-', '_' and '.', not starting with '.'.
bool is_safe_run_id(const std::string& id);

// First 8 hex digits of the SHA-256 of the config JSON without its run_id.
std::string config_digest(const RunConfig& c);

// Fills run_id with "<UTC yyyymmddThhmmssZ>-<digest>" when empty.
void resolve_run_id(RunConfig& c);

}  // namespace rlvr
