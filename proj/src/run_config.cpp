#include "rlvr/run_config.hpp"

#include <algorithm>
#include <cctype>

#include "rlvr/error.hpp"
#include "rlvr/io.hpp"

namespace rlvr {

using nlohmann::json;

void RunConfig::set_seed(std::uint64_t seed) {
  grpo.seed = seed;
  selection.seed = seed;
}

void RunConfig::validate() const {
  grpo.validate();
  rlvr::validate(rewards);
  if (endpoint) endpoint->validate();
  require(feature_dim > 0, ErrorKind::InvalidInput, "policy.feature_dim must be positive");
  require(eval_workers > 0, ErrorKind::InvalidInput, "eval_workers must be positive");
  require(!paths.results_dir.empty(), ErrorKind::InvalidInput, "paths.results_dir is empty");
  require(run_id.empty() || is_safe_run_id(run_id), ErrorKind::InvalidInput,
          "run_id is not filesystem-safe: " + run_id);
}

json to_json(const RunConfig& c) {
  json j = {{"run_id", c.run_id},
            {"grpo", to_json(c.grpo)},
            {"rewards", to_json(c.rewards)},
            {"selection",
             {{"n_hard", c.selection.n_hard},
              {"n_easy", c.selection.n_easy},
              {"seed", c.selection.seed}}},
            {"policy", {{"feature_dim", c.feature_dim}}},
            {"paths",
             {{"dataset", c.paths.dataset},
              {"cache_dir", c.paths.cache_dir},
              {"results_dir", c.paths.results_dir},
              {"checkpoint", c.paths.checkpoint}}},
            {"eval_workers", c.eval_workers}};
  j["endpoint"] = c.endpoint ? to_json(*c.endpoint) : json(nullptr);
  return j;
}

RunConfig run_config_from_json(const json& j) {
  static const std::vector<std::string> known = {"run_id", "grpo",  "rewards",      "selection",
                                                 "policy", "paths", "eval_workers", "endpoint"};
  require(j.is_object(), ErrorKind::Parse, "run config must be a JSON object");
  RunConfig c;
  try {
    for (const auto& [key, _] : j.items()) {
      require(std::find(known.begin(), known.end(), key) != known.end(), ErrorKind::Parse,
              "unknown run config key: " + key);
    }
    c.run_id = j.value("run_id", "");
    if (j.contains("grpo")) c.grpo = grpo_config_from_json(j.at("grpo"));
    if (j.contains("rewards")) c.rewards = weights_from_json(j.at("rewards"));
    if (j.contains("selection")) {
      const auto& s = j.at("selection");
      c.selection.n_hard = s.value("n_hard", c.selection.n_hard);
      c.selection.n_easy = s.value("n_easy", c.selection.n_easy);
      c.selection.seed = s.value("seed", c.selection.seed);
    }
    if (j.contains("policy")) c.feature_dim = j.at("policy").value("feature_dim", c.feature_dim);
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      c.paths.dataset = p.value("dataset", c.paths.dataset);
      c.paths.cache_dir = p.value("cache_dir", c.paths.cache_dir);
      c.paths.results_dir = p.value("results_dir", c.paths.results_dir);
      c.paths.checkpoint = p.value("checkpoint", c.paths.checkpoint);
    }
    c.eval_workers = j.value("eval_workers", c.eval_workers);
    if (j.contains("endpoint") && !j.at("endpoint").is_null()) {
      c.endpoint = endpoint_config_from_json(j.at("endpoint"));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("malformed run config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

bool is_safe_run_id(const std::string& id) {
  if (id.empty() || id.front() == '.' || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char ch) {
    return std::isalnum(ch) || ch == '-' || ch == '_' || ch == '.';
  });
}

std::string config_digest(const RunConfig& c) {
  auto j = to_json(c);
  j.erase("run_id");
  return sha256_hex(j.dump()).substr(0, 8);
}

void resolve_run_id(RunConfig& c) {
  if (!c.run_id.empty()) return;
  std::string stamp = utc_now_iso8601();  // 2025-01-31T12:00:00Z
  stamp.erase(std::remove_if(stamp.begin(), stamp.end(), [](char ch) { return ch == '-' || ch == ':'; }),
              stamp.end());
  c.run_id = stamp + "-" + config_digest(c);
}

}  // namespace rlvr
