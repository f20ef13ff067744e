#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlvr/policy.hpp"
#include "rlvr/rewards.hpp"

namespace rlvr {

struct GRPOConfig {
  std::size_t group_size = 3;
  double clip_epsilon = 0.2;
  double lr_initial = 2e-5;
  double lr_min = 0.0;
  std::size_t total_steps = 1000;
  std::size_t inner_epochs = 1;
  bool normalize_advantages = false;
  double norm_floor = 1e-8;
  std::size_t batch_states = 3;
  std::size_t grad_accum_steps = 4;
  std::uint64_t seed = 0;
  // Reserved for a KL penalty against a reference policy. Only 0 is accepted.
  double kl_coef = 0.0;

  // Throws InvalidInput when any field breaks its range.
  void validate() const;
};

nlohmann::json to_json(const GRPOConfig& c);
// Missing keys keep their defaults.
GRPOConfig grpo_config_from_json(const nlohmann::json& j, GRPOConfig base = {});

// G sampled actions for one state with everything needed to re-evaluate them.
struct ActionGroup {
  std::string state_id;
  StateFeatures features;
  std::size_t valid_actions = 0;  // 0 = all policy actions
  std::vector<std::size_t> actions;
  std::vector<double> logprob_old;
  std::vector<RewardBreakdown> rewards;
  std::vector<std::string> rendered;

  std::size_t size() const noexcept { return actions.size(); }
  std::vector<double> reward_totals() const;
  // Throws ContractViolation on ragged lists or bad log-probabilities.
  void validate(std::size_t expected_size) const;
};

struct AdvantageVector {
  std::vector<double> values;
  bool normalized = false;
};

struct StepDiagnostics {
  double objective_value = 0.0;
  std::vector<double> ratios;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
  double lr_used = 0.0;
  double mean_reward = 0.0;
};

// Â_i = r_i − mean(r), optionally divided by max(population std, norm_floor).
AdvantageVector compute_advantages(std::span<const double> rewards, bool normalize,
                                   double norm_floor);

// min(ratio·A, clip(ratio, 1−ε, 1+ε)·A)
double clipped_term(double ratio, double advantage, double epsilon);

// True when the clipped branch is strictly below the unclipped one, i.e. the
// term has zero derivative with respect to the ratio.
bool clip_active(double ratio, double advantage, double epsilon);

// Raw sums over a set of groups; objective and gradient are not yet divided
// by the pair count.
struct SurrogateSums {
  double objective_sum = 0.0;
  std::size_t pair_count = 0;
  std::size_t clipped_count = 0;
  std::vector<double> ratios;
  Matrix gradient_sum;
  // Index of the first group whose contribution is non-finite, or npos.
  std::size_t bad_group = static_cast<std::size_t>(-1);
};

namespace kernels {

// Straight pair-by-pair loop. Kept as the reference for the parallel kernel.
SurrogateSums surrogate_serial(std::span<const ActionGroup> groups, const Matrix& weights,
                               const GRPOConfig& config, bool with_gradient);

// Per-group partials computed under OpenMP, then reduced in group order, so
// the result does not depend on the thread count.
SurrogateSums surrogate_parallel(std::span<const ActionGroup> groups, const Matrix& weights,
                                 const GRPOConfig& config, bool with_gradient);

}  // namespace kernels

// Checks that each group is consistent with the policy: shapes, action range
// and logprob_old against the snapshot. Throws ContractViolation.
void check_groups_against_policy(std::span<const ActionGroup> groups, const PolicyParams& policy,
                                 const GRPOConfig& config);

struct SurrogateResult {
  double objective = 0.0;
  StepDiagnostics diagnostics;
};

SurrogateResult surrogate_objective(std::span<const ActionGroup> groups,
                                    const PolicyParams& policy, const GRPOConfig& config);

// Analytic gradient of surrogate_objective with respect to policy.weights.
Matrix surrogate_gradient(std::span<const ActionGroup> groups, const PolicyParams& policy,
                          const GRPOConfig& config);

// One GRPO update: inner_epochs ascent steps on the clipped surrogate with the
// snapshot held fixed, each accumulating grad_accum_steps micro-batches before
// writing parameters. On a non-finite gradient the weights are restored and a
// NumericalFailureError names the offending group.
StepDiagnostics grpo_step(std::span<const ActionGroup> batch, PolicyParams& policy,
                          const GRPOConfig& config, std::size_t step_index);

// lr_min + ½(lr_initial − lr_min)(1 + cos(π·step/total_steps))
double cosine_lr(std::size_t step, const GRPOConfig& config);

nlohmann::json step_log_json(std::size_t step, const StepDiagnostics& d);

}  // namespace rlvr
