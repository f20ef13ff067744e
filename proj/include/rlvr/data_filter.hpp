#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlvr/mcq.hpp"
#include "rlvr/model_client.hpp"
#include "rlvr/policy.hpp"

namespace rlvr {

// Unobtainable marks items whose response could not be fetched; they are
// excluded from selection rather than counted as Hard.
enum class Difficulty { Easy, Hard, Unobtainable };

std::string_view to_string(Difficulty d);

struct FilterVerdict {
  std::string item_id;
  Difficulty label = Difficulty::Hard;
  std::string response;
  bool correct = false;
  bool format_ok = false;
  std::string filter_model;
  std::string error;  // set only for Unobtainable

  bool operator==(const FilterVerdict&) const = default;
};

nlohmann::json to_json(const FilterVerdict& v);
FilterVerdict verdict_from_json(const nlohmann::json& j);

struct SelectionSpec {
  std::size_t n_hard = 400;
  std::size_t n_easy = 100;
  std::uint64_t seed = 0;
};

// Easy iff the response is both correct and format-adherent.
FilterVerdict classify(const MCQItem& item, const std::string& response,
                       const std::string& filter_model = "");

// Prompt sent to filter models: asks for reasoning in <think> tags and the
// option letter in <answer> tags.
std::string filter_prompt(const MCQItem& item);

class Responder {
 public:
  virtual ~Responder() = default;
  virtual std::string model_id() const = 0;
  virtual double temperature() const { return 0.0; }
  // May throw; the item is then recorded as Unobtainable.
  virtual std::string respond(const MCQItem& item, const std::string& prompt) = 0;
};

// Greedy decoding from a linear-softmax checkpoint.
class PolicyResponder final : public Responder {
 public:
  PolicyResponder(PolicyCheckpoint checkpoint, std::string label = "internal-policy");
  std::string model_id() const override { return label_; }
  std::string respond(const MCQItem& item, const std::string& prompt) override;

 private:
  PolicyCheckpoint checkpoint_;
  std::string label_;
};

class EndpointResponder final : public Responder {
 public:
  explicit EndpointResponder(std::shared_ptr<ModelClient> client) : client_(std::move(client)) {}
  std::string model_id() const override { return client_->config().model_name; }
  double temperature() const override { return client_->config().temperature; }
  std::string respond(const MCQItem& item, const std::string& prompt) override;

 private:
  std::shared_ptr<ModelClient> client_;
};

// Canned responses keyed by item id; a missing id throws.
class ReplayResponder final : public Responder {
 public:
  ReplayResponder(std::map<std::string, std::string> responses, std::string label = "replay");
  // JSONL rows of {"id": ..., "response": ...}
  static ReplayResponder from_jsonl(const std::filesystem::path& path, std::string label = "replay");
  std::string model_id() const override { return label_; }
  std::string respond(const MCQItem& item, const std::string& prompt) override;

 private:
  std::map<std::string, std::string> responses_;
  std::string label_;
};

class FunctionResponder final : public Responder {
 public:
  using Fn = std::function<std::string(const MCQItem&, const std::string&)>;
  FunctionResponder(std::string label, Fn fn) : label_(std::move(label)), fn_(std::move(fn)) {}
  std::string model_id() const override { return label_; }
  std::string respond(const MCQItem& item, const std::string& prompt) override {
    return fn_(item, prompt);
  }

 private:
  std::string label_;
  Fn fn_;
};

struct FilterOptions {
  std::shared_ptr<ResponseCache> cache;  // optional
  std::size_t max_parallel = 1;
};

struct FilterSummary {
  std::size_t easy = 0;
  std::size_t hard = 0;
  std::size_t unobtainable = 0;
  std::vector<std::string> unobtainable_ids;
  std::string filter_model;
  std::string started_at;
  std::string finished_at;
};

nlohmann::json to_json(const FilterSummary& s);

struct FilterRun {
  std::vector<FilterVerdict> verdicts;  // input order
  FilterSummary summary;
  std::size_t responder_calls = 0;
};

// One verdict per item. Cached responses skip the responder; fresh ones are
// written to the cache before the item is classified.
FilterRun filter_pool(const std::vector<MCQItem>& items, Responder& responder,
                      const FilterOptions& options = {});

// Uniform sampling without replacement of n_hard Hard and n_easy Easy items,
// returned in a seeded shuffled order. Throws InsufficientPoolError.
std::vector<MCQItem> select_training_set(const std::vector<FilterVerdict>& verdicts,
                                         const std::vector<MCQItem>& items,
                                         const SelectionSpec& spec);

}  // namespace rlvr
