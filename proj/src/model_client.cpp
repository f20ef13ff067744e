#include "rlvr/model_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include <httplib.h>

#include "rlvr/error.hpp"
#include "rlvr/io.hpp"

namespace rlvr {

using nlohmann::json;

void EndpointConfig::validate() const {
  require(!base_url.empty(), ErrorKind::InvalidInput, "endpoint base_url is empty");
  require(!model_name.empty(), ErrorKind::InvalidInput, "endpoint model_name is empty");
  require(timeout > 0.0, ErrorKind::InvalidInput, "endpoint timeout must be positive");
  require(max_retries >= 0, ErrorKind::InvalidInput, "max_retries must be non-negative");
  require(backoff_base > 0.0, ErrorKind::InvalidInput, "backoff_base must be positive");
  require(max_parallel >= 1 && max_parallel <= 4096, ErrorKind::InvalidInput,
          "max_parallel must lie in [1, 4096]");
  require(temperature >= 0.0, ErrorKind::InvalidInput, "temperature must be non-negative");
}

json to_json(const EndpointConfig& c) {
  return {{"base_url", c.base_url},         {"model_name", c.model_name},
          {"api_key_env", c.api_key_env},   {"timeout", c.timeout},
          {"max_retries", c.max_retries},   {"backoff_base", c.backoff_base},
          {"max_parallel", c.max_parallel}, {"temperature", c.temperature}};
}

EndpointConfig endpoint_config_from_json(const json& j) {
  EndpointConfig c;
  try {
    c.base_url = j.at("base_url").get<std::string>();
    c.model_name = j.at("model_name").get<std::string>();
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.timeout = j.value("timeout", c.timeout);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.backoff_base = j.value("backoff_base", c.backoff_base);
    c.max_parallel = j.value("max_parallel", c.max_parallel);
    c.temperature = j.value("temperature", c.temperature);
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("malformed endpoint config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string cache_key(const std::string& model_name, const std::string& prompt,
                      double temperature) {
  return sha256_hex(json::array({model_name, prompt, temperature}).dump());
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
  require(key.size() >= 2, ErrorKind::InvalidInput, "cache key too short");
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<CacheEntry> ResponseCache::get(const std::string& key) const {
  const auto path = path_for(key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    const auto j = json::parse(read_text_file(path));
    CacheEntry e;
    e.key = j.at("key").get<std::string>();
    e.response = j.at("response").get<std::string>();
    e.status = j.at("status").get<std::string>() == "ok" ? CacheStatus::Ok : CacheStatus::Failed;
    e.timestamp = j.value("timestamp", "");
    if (e.key != key) return std::nullopt;
    return e;
  } catch (const std::exception&) {
    // unreadable entries count as misses and get overwritten
    return std::nullopt;
  }
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
  auto e = get(key);
  if (!e || e->status != CacheStatus::Ok) return std::nullopt;
  return std::move(e->response);
}

void ResponseCache::put(const CacheEntry& entry) const {
  const json j = {{"key", entry.key},
                  {"response", entry.response},
                  {"status", entry.status == CacheStatus::Ok ? "ok" : "failed"},
                  {"timestamp", entry.timestamp}};
  write_file_atomic(path_for(entry.key), j.dump() + "\n");
}

namespace {

void split_url(const std::string& url, std::string& scheme_host_port, std::string& path) {
  const auto scheme_end = url.find("://");
  require(scheme_end != std::string::npos, ErrorKind::InvalidInput,
          "base_url must include a scheme: " + url);
  const auto path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) {
    scheme_host_port = url;
    path.clear();
  } else {
    scheme_host_port = url.substr(0, path_begin);
    path = url.substr(path_begin);
  }
  while (!path.empty() && path.back() == '/') path.pop_back();
}

double jitter_seconds(double cap) {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  return std::uniform_real_distribution<double>(0.0, cap)(rng);
}

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<4096>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<4096>& s_;
};

}  // namespace

ModelClient::ModelClient(EndpointConfig config, std::shared_ptr<ResponseCache> cache)
    : config_(std::move(config)),
      cache_(std::move(cache)),
      slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_parallel))) {
  config_.validate();
  split_url(config_.base_url, scheme_host_port_, path_prefix_);
}

ModelClient::Attempt ModelClient::post_once(const std::string& body) {
  SlotGuard slot(slots_);
  attempts_.fetch_add(1);
  httplib::Client cli(scheme_host_port_);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(config_.timeout));
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  Attempt a;
  auto res = cli.Post(path_prefix_ + "/chat/completions", headers, body, "application/json");
  if (!res) {
    a.error = httplib::to_string(res.error());
    return a;
  }
  a.status = res->status;
  a.body = res->body;
  return a;
}

std::string ModelClient::complete(const std::string& prompt) {
  const auto key = cache_key(config_.model_name, prompt, config_.temperature);
  if (cache_) {
    if (auto hit = cache_->lookup(key)) return *hit;
  }

  const json request = {{"model", config_.model_name},
                        {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                        {"temperature", config_.temperature}};
  const std::string body = request.dump();

  int last_status = 0;
  std::string last_error;
  const int max_attempts = config_.max_retries + 1;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const auto a = post_once(body);
    last_status = a.status;
    if (a.status >= 200 && a.status < 300) {
      std::string content;
      try {
        content = json::parse(a.body).at("choices").at(0).at("message").at("content")
                      .get<std::string>();
      } catch (const json::exception& e) {
        throw EndpointError(ErrorKind::Protocol, a.status, attempt + 1,
                            std::string("malformed chat-completions body: ") + e.what());
      }
      if (cache_) cache_->put({key, content, CacheStatus::Ok, utc_now_iso8601()});
      return content;
    }
    if (a.status >= 400 && a.status < 500 && a.status != 429) {
      throw EndpointError(ErrorKind::NonRetryable, a.status, attempt + 1,
                          "endpoint rejected request with HTTP " + std::to_string(a.status));
    }
    last_error = a.status == 0 ? "transport error: " + a.error
                               : "HTTP " + std::to_string(a.status);
    if (attempt + 1 < max_attempts) {
      const double cap = config_.backoff_base * std::ldexp(1.0, attempt);
      std::this_thread::sleep_for(std::chrono::duration<double>(jitter_seconds(cap)));
    }
  }
  if (cache_) cache_->put({key, last_error, CacheStatus::Failed, utc_now_iso8601()});
  throw EndpointError(ErrorKind::EndpointFailure, last_status, max_attempts,
                      "endpoint failed after " + std::to_string(max_attempts) +
                          " attempts: " + last_error);
}

}  // namespace rlvr
