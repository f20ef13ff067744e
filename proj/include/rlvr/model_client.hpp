#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>

#include <json.hpp>

namespace rlvr {

struct EndpointConfig {
  std::string base_url;
  std::string model_name;
  std::string api_key_env = "OPENAI_API_KEY";
  double timeout = 60.0;        // seconds
  int max_retries = 3;
  double backoff_base = 1.0;    // seconds
  std::size_t max_parallel = 4;
  double temperature = 0.0;

  void validate() const;
};

nlohmann::json to_json(const EndpointConfig& c);
EndpointConfig endpoint_config_from_json(const nlohmann::json& j);

enum class CacheStatus { Ok, Failed };

struct CacheEntry {
  std::string key;
  std::string response;
  CacheStatus status = CacheStatus::Ok;
  std::string timestamp;  // ISO-8601 UTC
};

// Hex SHA-256 over the canonical JSON triple [model, prompt, temperature].
std::string cache_key(const std::string& model_name, const std::string& prompt,
                      double temperature);

// One JSON file per key at {dir}/{key[0:2]}/{key}.json, written atomically.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<CacheEntry> get(const std::string& key) const;
  // Response text of an Ok entry, if any.
  std::optional<std::string> lookup(const std::string& key) const;
  void put(const CacheEntry& entry) const;
  std::filesystem::path path_for(const std::string& key) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

// Chat-completions client. Cache hits never touch the network; in-flight
// requests are capped at max_parallel across all calling threads.
class ModelClient {
 public:
  explicit ModelClient(EndpointConfig config, std::shared_ptr<ResponseCache> cache = nullptr);

  // Throws EndpointError: EndpointFailure after exhausted retries,
  // NonRetryable on 4xx other than 429, Protocol on a malformed body.
  std::string complete(const std::string& prompt);

  const EndpointConfig& config() const noexcept { return config_; }
  // HTTP attempts issued so far, retries included.
  std::size_t http_attempts() const noexcept { return attempts_.load(); }

 private:
  struct Attempt {
    int status = 0;  // 0 on transport failure
    std::string body;
    std::string error;
  };
  Attempt post_once(const std::string& body);

  EndpointConfig config_;
  std::shared_ptr<ResponseCache> cache_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::counting_semaphore<4096> slots_;
  std::atomic<std::size_t> attempts_{0};
};

}  // namespace rlvr
