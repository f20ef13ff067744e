#pragma once
// Local chat-completions test double with scripted status codes and an
// in-flight request gauge.

#include <atomic>
#include <chrono>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace testing_support {

class MockChatServer {
 public:
  // Statuses are served in order; the last one repeats.
  explicit MockChatServer(std::vector<int> statuses, std::chrono::milliseconds delay = {})
      : statuses_(std::move(statuses)), delay_(delay) {
    server_.new_task_queue = [] { return new httplib::ThreadPool(32); };
    server_.Post(R"(.*/chat/completions)", [this](const httplib::Request& req,
                                                 httplib::Response& res) { handle(req, res); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockChatServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url(const std::string& prefix = "/v1") const {
    return "http://127.0.0.1:" + std::to_string(port_) + prefix;
  }
  int hits() const { return hits_.load(); }
  int max_in_flight() const { return max_in_flight_.load(); }
  std::vector<std::string> bodies() const {
    std::lock_guard lock(mu_);
    return bodies_;
  }
  std::vector<std::string> auth_headers() const {
    std::lock_guard lock(mu_);
    return auth_;
  }
  // Body returned on 2xx; defaults to echoing "reply:<prompt>".
  void set_raw_body(std::string body) { raw_body_ = std::move(body); }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    const int now = in_flight_.fetch_add(1) + 1;
    int prev = max_in_flight_.load();
    while (now > prev && !max_in_flight_.compare_exchange_weak(prev, now)) {
    }
    const int idx = hits_.fetch_add(1);
    {
      std::lock_guard lock(mu_);
      bodies_.push_back(req.body);
      auth_.push_back(req.get_header_value("Authorization"));
    }
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    const int status = statuses_[std::min<std::size_t>(idx, statuses_.size() - 1)];
    res.status = status;
    if (status >= 200 && status < 300) {
      if (!raw_body_.empty()) {
        res.set_content(raw_body_, "application/json");
      } else {
        const auto prompt = nlohmann::json::parse(req.body)["messages"][0]["content"].get<std::string>();
        const nlohmann::json body = {
            {"choices", {{{"message", {{"role", "assistant"}, {"content", "reply:" + prompt}}}}}}};
        res.set_content(body.dump(), "application/json");
      }
    } else {
      res.set_content("{\"error\":\"scripted\"}", "application/json");
    }
    in_flight_.fetch_sub(1);
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::vector<int> statuses_;
  std::chrono::milliseconds delay_;
  std::string raw_body_;
  std::atomic<int> hits_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
  mutable std::mutex mu_;
  std::vector<std::string> bodies_;
  std::vector<std::string> auth_;
};

}  // namespace testing_support
