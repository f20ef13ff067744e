#pragma once

#include <functional>
#include <vector>

#include <json.hpp>

#include "rlvr/grpo.hpp"
#include "rlvr/mcq.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/rewards.hpp"

namespace rlvr {

struct TrainingSummary {
  std::size_t steps = 0;
  double initial_expected_reward = 0.0;
  double final_expected_reward = 0.0;
  // Mean rollout reward over the last min(10, steps) steps.
  double final_mean_reward = 0.0;
  double max_total_reward = 0.0;
  double wall_time_seconds = 0.0;
};

nlohmann::json to_json(const TrainingSummary& s);

// Collects rollouts from the linear-softmax policy over a fixed item set and
// applies grpo_step. Items are visited in seeded shuffled passes.
class Trainer {
 public:
  Trainer(std::vector<MCQItem> items, Matrix initial_weights, GRPOConfig config,
          RewardWeights weights);

  // batch_states × grad_accum_steps groups sampled from a fresh snapshot.
  std::vector<ActionGroup> collect(std::size_t step_index);
  StepDiagnostics step(std::size_t step_index);

  // Exact Σ_a π(a|s)·R(a, s) averaged over all items.
  double expected_reward() const;

  const PolicyParams& params() const noexcept { return params_; }
  const GRPOConfig& config() const noexcept { return config_; }
  const RewardWeights& reward_weights() const noexcept { return weights_; }
  std::size_t feature_dim() const noexcept { return params_.weights.rows(); }
  std::size_t num_options() const noexcept { return params_.weights.cols() / kFormatVariantCount; }

 private:
  struct Prepared {
    StateFeatures features;
    std::size_t valid_actions;
    std::vector<RewardBreakdown> reward_by_action;
    std::vector<std::string> render_by_action;
  };

  std::size_t next_item();

  std::vector<MCQItem> items_;
  std::vector<Prepared> prepared_;
  PolicyParams params_;
  GRPOConfig config_;
  RewardWeights weights_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t pass_ = 0;
};

// Runs steps [0, config.total_steps). on_step sees every step's diagnostics.
TrainingSummary run_training(
    Trainer& trainer,
    const std::function<void(std::size_t, const StepDiagnostics&)>& on_step = {});

}  // namespace rlvr
