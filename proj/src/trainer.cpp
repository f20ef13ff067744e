#include "rlvr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <deque>
#include <numeric>
#include <random>

#include "rlvr/error.hpp"

namespace rlvr {

nlohmann::json to_json(const TrainingSummary& s) {
  return {{"steps", s.steps},
          {"initial_expected_reward", s.initial_expected_reward},
          {"final_expected_reward", s.final_expected_reward},
          {"final_mean_reward", s.final_mean_reward},
          {"max_total_reward", s.max_total_reward},
          {"wall_time_seconds", s.wall_time_seconds}};
}

Trainer::Trainer(std::vector<MCQItem> items, Matrix initial_weights, GRPOConfig config,
                 RewardWeights weights)
    : items_(std::move(items)), config_(config), weights_(weights) {
  config_.validate();
  validate(weights_);
  require(!items_.empty(), ErrorKind::InvalidInput, "training set is empty");
  require_unique_ids(items_);
  require(initial_weights.all_finite(), ErrorKind::InvalidInput, "initial weights non-finite");
  params_.weights = std::move(initial_weights);

  const std::size_t options = num_options();
  prepared_.reserve(items_.size());
  for (const auto& item : items_) {
    validate(item);
    require(item.option_count() <= options, ErrorKind::InvalidInput,
            "item " + item.id + " has more options than the policy supports");
    Prepared p;
    p.features = featurize(item, feature_dim());
    p.valid_actions = action_count_for(item.option_count());
    const std::string gold(1, item.gold);
    for (std::size_t a = 0; a < p.valid_actions; ++a) {
      auto text = render_response(CompositeAction::from_id(a), item);
      p.reward_by_action.push_back(total_reward(text, gold, weights_));
      p.render_by_action.push_back(std::move(text));
    }
    prepared_.push_back(std::move(p));
  }
  order_.resize(items_.size());
}

std::size_t Trainer::next_item() {
  if (cursor_ == 0) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::mt19937_64 rng(mix_seed(config_.seed, 0x5eed, pass_));
    // Fisher-Yates with a portable index draw
    for (std::size_t i = order_.size(); i > 1; --i) {
      std::swap(order_[i - 1], order_[rng() % i]);
    }
  }
  const std::size_t idx = order_[cursor_];
  if (++cursor_ == order_.size()) {
    cursor_ = 0;
    ++pass_;
  }
  return idx;
}

std::vector<ActionGroup> Trainer::collect(std::size_t step_index) {
  params_.take_snapshot();
  const std::size_t n_states = config_.batch_states * config_.grad_accum_steps;
  std::vector<std::size_t> picks(n_states);
  for (auto& p : picks) p = next_item();

  std::vector<ActionGroup> groups(n_states);
  std::vector<std::exception_ptr> errors(n_states);
  const auto count = static_cast<std::ptrdiff_t>(n_states);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < count; ++j) {
    try {
      const auto& prep = prepared_[picks[j]];
      auto sample = sample_group(params_, prep.features, config_.group_size,
                                 mix_seed(config_.seed, step_index, static_cast<std::uint64_t>(j)),
                                 prep.valid_actions);
      ActionGroup& g = groups[j];
      g.state_id = items_[picks[j]].id;
      g.features = prep.features;
      g.valid_actions = prep.valid_actions;
      for (std::size_t a : sample.actions) {
        g.rewards.push_back(prep.reward_by_action[a]);
        g.rendered.push_back(prep.render_by_action[a]);
      }
      g.actions = std::move(sample.actions);
      g.logprob_old = std::move(sample.logprob_old);
      // overflowing logits make the rollout distribution itself non-finite
      for (double lp : g.logprob_old) {
        if (!std::isfinite(lp)) {
          throw NumericalFailureError(g.state_id, "non-finite rollout log-probability in group " +
                                                      g.state_id + " at step " +
                                                      std::to_string(step_index));
        }
      }
    } catch (...) {
      errors[j] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return groups;
}

StepDiagnostics Trainer::step(std::size_t step_index) {
  const auto batch = collect(step_index);
  return grpo_step(batch, params_, config_, step_index);
}

double Trainer::expected_reward() const {
  double total = 0.0;
  for (const auto& prep : prepared_) {
    const auto p = action_distribution(params_.weights, prep.features, prep.valid_actions);
    double e = 0.0;
    for (std::size_t a = 0; a < prep.valid_actions; ++a) e += p[a] * prep.reward_by_action[a].total;
    total += e;
  }
  return total / static_cast<double>(prepared_.size());
}

TrainingSummary run_training(
    Trainer& trainer, const std::function<void(std::size_t, const StepDiagnostics&)>& on_step) {
  const auto start = std::chrono::steady_clock::now();
  TrainingSummary summary;
  summary.steps = trainer.config().total_steps;
  summary.max_total_reward = trainer.reward_weights().max_total();
  summary.initial_expected_reward = trainer.expected_reward();
  std::deque<double> recent;
  for (std::size_t t = 0; t < trainer.config().total_steps; ++t) {
    const auto diag = trainer.step(t);
    recent.push_back(diag.mean_reward);
    if (recent.size() > 10) recent.pop_front();
    if (on_step) on_step(t, diag);
  }
  summary.final_expected_reward = trainer.expected_reward();
  if (!recent.empty()) {
    summary.final_mean_reward =
        std::accumulate(recent.begin(), recent.end(), 0.0) / static_cast<double>(recent.size());
  }
  summary.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

}  // namespace rlvr
