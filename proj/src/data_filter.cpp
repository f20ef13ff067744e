#include "rlvr/data_filter.hpp"

#include <atomic>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "rlvr/error.hpp"
#include "rlvr/io.hpp"
#include "rlvr/rewards.hpp"

namespace rlvr {

using nlohmann::json;

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Hard: return "hard";
    case Difficulty::Unobtainable: return "unobtainable";
  }
  return "?";
}

json to_json(const FilterVerdict& v) {
  json j = {{"item_id", v.item_id},         {"label", to_string(v.label)},
            {"response", v.response},       {"correct", v.correct},
            {"format_ok", v.format_ok},     {"filter_model", v.filter_model}};
  if (v.label == Difficulty::Unobtainable) j["error"] = v.error;
  return j;
}

FilterVerdict verdict_from_json(const json& j) {
  FilterVerdict v;
  try {
    v.item_id = j.at("item_id").get<std::string>();
    const auto label = j.at("label").get<std::string>();
    if (label == "easy") {
      v.label = Difficulty::Easy;
    } else if (label == "hard") {
      v.label = Difficulty::Hard;
    } else if (label == "unobtainable") {
      v.label = Difficulty::Unobtainable;
    } else {
      fail(ErrorKind::Parse, "unknown verdict label " + label);
    }
    v.response = j.at("response").get<std::string>();
    v.correct = j.at("correct").get<bool>();
    v.format_ok = j.at("format_ok").get<bool>();
    v.filter_model = j.value("filter_model", "");
    v.error = j.value("error", "");
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("malformed verdict: ") + e.what());
  }
  return v;
}

FilterVerdict classify(const MCQItem& item, const std::string& response,
                       const std::string& filter_model) {
  const auto parsed = parse_response(response);
  FilterVerdict v;
  v.item_id = item.id;
  v.response = response;
  v.filter_model = filter_model;
  v.correct = accuracy_reward(parsed, std::string(1, item.gold)) == 1.0;
  v.format_ok = format_reward(parsed) == 1.0;
  v.label = (v.correct && v.format_ok) ? Difficulty::Easy : Difficulty::Hard;
  return v;
}

std::string filter_prompt(const MCQItem& item) {
  std::ostringstream p;
  p << "Answer the following multiple-choice question. First reason about it step by step "
       "inside <think> </think> tags. Then give only the letter of the correct option inside "
       "<answer> </answer> tags, for example <answer>A</answer>.\n\n";
  p << "Question: " << item.question << "\n";
  for (const auto& [letter, text] : item.options) p << letter << ". " << text << "\n";
  return p.str();
}

PolicyResponder::PolicyResponder(PolicyCheckpoint checkpoint, std::string label)
    : checkpoint_(std::move(checkpoint)), label_(std::move(label)) {}

std::string PolicyResponder::respond(const MCQItem& item, const std::string&) {
  require(item.option_count() <= checkpoint_.num_options(), ErrorKind::InvalidInput,
          "item " + item.id + " has more options than the policy supports");
  const auto features = featurize(item, checkpoint_.feature_dim());
  const auto a = greedy_action(checkpoint_.weights, features,
                               action_count_for(item.option_count()));
  return render_response(CompositeAction::from_id(a), item);
}

std::string EndpointResponder::respond(const MCQItem&, const std::string& prompt) {
  return client_->complete(prompt);
}

ReplayResponder::ReplayResponder(std::map<std::string, std::string> responses, std::string label)
    : responses_(std::move(responses)), label_(std::move(label)) {}

ReplayResponder ReplayResponder::from_jsonl(const std::filesystem::path& path,
                                            std::string label) {
  std::map<std::string, std::string> responses;
  std::istringstream in(read_text_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      responses[j.at("id").get<std::string>()] = j.at("response").get<std::string>();
    } catch (const json::exception& e) {
      fail(ErrorKind::Parse, path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return ReplayResponder(std::move(responses), std::move(label));
}

std::string ReplayResponder::respond(const MCQItem& item, const std::string&) {
  auto it = responses_.find(item.id);
  if (it == responses_.end()) {
    fail(ErrorKind::EndpointFailure, "no canned response for item " + item.id);
  }
  return it->second;
}

json to_json(const FilterSummary& s) {
  return {{"counts", {{"easy", s.easy}, {"hard", s.hard}, {"unobtainable", s.unobtainable}}},
          {"unobtainable_ids", s.unobtainable_ids},
          {"filter_model", s.filter_model},
          {"started_at", s.started_at},
          {"finished_at", s.finished_at}};
}

FilterRun filter_pool(const std::vector<MCQItem>& items, Responder& responder,
                      const FilterOptions& options) {
  for (const auto& item : items) validate(item);
  require_unique_ids(items);
  require(options.max_parallel >= 1, ErrorKind::InvalidInput, "max_parallel must be >= 1");

  FilterRun run;
  run.summary.filter_model = responder.model_id();
  run.summary.started_at = utc_now_iso8601();

  struct Slot {
    std::string response;
    std::string error;
    bool ok = false;
  };
  std::vector<Slot> slots(items.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> calls{0};
  const auto model = responder.model_id();
  const auto temperature = responder.temperature();

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1)) {
      const auto& item = items[i];
      const auto prompt = filter_prompt(item);
      const auto key = cache_key(model, prompt, temperature);
      Slot& slot = slots[i];
      if (options.cache) {
        if (auto hit = options.cache->lookup(key)) {
          slot.response = std::move(*hit);
          slot.ok = true;
          continue;
        }
      }
      try {
        calls.fetch_add(1);
        slot.response = responder.respond(item, prompt);
        if (options.cache) {
          options.cache->put({key, slot.response, CacheStatus::Ok, utc_now_iso8601()});
        }
        slot.ok = true;
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    }
  };

  const std::size_t n_workers = std::min(options.max_parallel, std::max<std::size_t>(1, items.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  run.verdicts.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (slots[i].ok) {
      run.verdicts.push_back(classify(items[i], slots[i].response, model));
      if (run.verdicts.back().label == Difficulty::Easy) {
        ++run.summary.easy;
      } else {
        ++run.summary.hard;
      }
    } else {
      FilterVerdict v;
      v.item_id = items[i].id;
      v.label = Difficulty::Unobtainable;
      v.filter_model = model;
      v.error = slots[i].error;
      run.verdicts.push_back(std::move(v));
      ++run.summary.unobtainable;
      run.summary.unobtainable_ids.push_back(items[i].id);
    }
  }
  run.responder_calls = calls.load();
  run.summary.finished_at = utc_now_iso8601();
  return run;
}

namespace {

// First k entries of a seeded Fisher-Yates shuffle.
std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> pool, std::size_t k,
                                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

std::vector<MCQItem> select_training_set(const std::vector<FilterVerdict>& verdicts,
                                         const std::vector<MCQItem>& items,
                                         const SelectionSpec& spec) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < items.size(); ++i) {
    require(index.emplace(items[i].id, i).second, ErrorKind::InvalidInput,
            "duplicate item id: " + items[i].id);
  }
  std::vector<std::size_t> hard;
  std::vector<std::size_t> easy;
  std::vector<bool> seen(items.size(), false);
  for (const auto& v : verdicts) {
    auto it = index.find(v.item_id);
    require(it != index.end(), ErrorKind::InvalidInput, "verdict for unknown item " + v.item_id);
    require(!seen[it->second], ErrorKind::InvalidInput, "duplicate verdict for " + v.item_id);
    seen[it->second] = true;
    if (v.label == Difficulty::Hard) hard.push_back(it->second);
    if (v.label == Difficulty::Easy) easy.push_back(it->second);
  }
  if (hard.size() < spec.n_hard) throw InsufficientPoolError("hard", spec.n_hard, hard.size());
  if (easy.size() < spec.n_easy) throw InsufficientPoolError("easy", spec.n_easy, easy.size());

  auto chosen = sample_without_replacement(std::move(hard), spec.n_hard, mix_seed(spec.seed, 1));
  const auto chosen_easy =
      sample_without_replacement(std::move(easy), spec.n_easy, mix_seed(spec.seed, 2));
  chosen.insert(chosen.end(), chosen_easy.begin(), chosen_easy.end());
  chosen = sample_without_replacement(std::move(chosen), chosen.size(), mix_seed(spec.seed, 3));

  std::vector<MCQItem> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(items[i]);
  return out;
}

}  // namespace rlvr
