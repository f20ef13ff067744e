#include "rlvr/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rlvr/error.hpp"

namespace rlvr {

void GRPOConfig::validate() const {
  require(group_size >= 2, ErrorKind::InvalidInput, "group_size must be at least 2");
  require(clip_epsilon > 0.0 && clip_epsilon < 1.0, ErrorKind::InvalidInput,
          "clip_epsilon must lie in (0, 1)");
  require(std::isfinite(lr_initial) && lr_initial > 0.0, ErrorKind::InvalidInput,
          "lr_initial must be positive");
  require(std::isfinite(lr_min) && lr_min >= 0.0 && lr_min <= lr_initial,
          ErrorKind::InvalidInput, "lr_min must lie in [0, lr_initial]");
  require(total_steps > 0, ErrorKind::InvalidInput, "total_steps must be positive");
  require(inner_epochs > 0, ErrorKind::InvalidInput, "inner_epochs must be positive");
  require(norm_floor > 0.0, ErrorKind::InvalidInput, "norm_floor must be positive");
  require(batch_states > 0, ErrorKind::InvalidInput, "batch_states must be positive");
  require(grad_accum_steps > 0, ErrorKind::InvalidInput, "grad_accum_steps must be positive");
  require(kl_coef == 0.0, ErrorKind::InvalidInput, "KL penalty is not supported; kl_coef must be 0");
}

nlohmann::json to_json(const GRPOConfig& c) {
  return {{"group_size", c.group_size},
          {"clip_epsilon", c.clip_epsilon},
          {"lr_initial", c.lr_initial},
          {"lr_min", c.lr_min},
          {"total_steps", c.total_steps},
          {"inner_epochs", c.inner_epochs},
          {"normalize_advantages", c.normalize_advantages},
          {"norm_floor", c.norm_floor},
          {"batch_states", c.batch_states},
          {"grad_accum_steps", c.grad_accum_steps},
          {"seed", c.seed},
          {"kl_coef", c.kl_coef}};
}

GRPOConfig grpo_config_from_json(const nlohmann::json& j, GRPOConfig c) {
  try {
    c.group_size = j.value("group_size", c.group_size);
    c.clip_epsilon = j.value("clip_epsilon", c.clip_epsilon);
    c.lr_initial = j.value("lr_initial", c.lr_initial);
    c.lr_min = j.value("lr_min", c.lr_min);
    c.total_steps = j.value("total_steps", c.total_steps);
    c.inner_epochs = j.value("inner_epochs", c.inner_epochs);
    c.normalize_advantages = j.value("normalize_advantages", c.normalize_advantages);
    c.norm_floor = j.value("norm_floor", c.norm_floor);
    c.batch_states = j.value("batch_states", c.batch_states);
    c.grad_accum_steps = j.value("grad_accum_steps", c.grad_accum_steps);
    c.seed = j.value("seed", c.seed);
    c.kl_coef = j.value("kl_coef", c.kl_coef);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("malformed grpo config: ") + e.what());
  }
  return c;
}

std::vector<double> ActionGroup::reward_totals() const {
  std::vector<double> r;
  r.reserve(rewards.size());
  for (const auto& b : rewards) r.push_back(b.total);
  return r;
}

void ActionGroup::validate(std::size_t expected_size) const {
  const auto n = actions.size();
  require(n == expected_size && logprob_old.size() == n && rewards.size() == n &&
              rendered.size() == n,
          ErrorKind::ContractViolation,
          "group " + state_id + ": expected " + std::to_string(expected_size) +
              " entries in every list");
  for (double lp : logprob_old) {
    require(std::isfinite(lp) && lp <= 0.0, ErrorKind::ContractViolation,
            "group " + state_id + ": logprob_old must be finite and <= 0");
  }
}

AdvantageVector compute_advantages(std::span<const double> rewards, bool normalize,
                                   double norm_floor) {
  require(!rewards.empty(), ErrorKind::InvalidInput, "rewards must be non-empty");
  require(norm_floor > 0.0, ErrorKind::InvalidInput, "norm_floor must be positive");
  for (double r : rewards) {
    require(std::isfinite(r), ErrorKind::InvalidInput, "rewards must be finite");
  }
  const double n = static_cast<double>(rewards.size());

  // r_i − mean(r) written as the mean of pairwise differences: only
  // differences of rewards enter, so a common shift cancels exactly.
  AdvantageVector adv;
  adv.normalized = normalize;
  adv.values.reserve(rewards.size());
  for (double ri : rewards) {
    double s = 0.0;
    for (double rj : rewards) s += ri - rj;
    adv.values.push_back(s / n);
  }
  if (normalize) {
    double ss = 0.0;
    for (double d : adv.values) ss += d * d;
    const double scale = std::max(std::sqrt(ss / n), norm_floor);
    for (double& d : adv.values) d /= scale;
  }
  return adv;
}

double clipped_term(double ratio, double advantage, double epsilon) {
  require(ratio > 0.0, ErrorKind::InvalidInput, "probability ratio must be positive");
  require(epsilon > 0.0 && epsilon < 1.0, ErrorKind::InvalidInput, "epsilon must lie in (0, 1)");
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

bool clip_active(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return clipped * advantage < ratio * advantage;
}

void check_groups_against_policy(std::span<const ActionGroup> groups, const PolicyParams& policy,
                                 const GRPOConfig& config) {
  require(policy.snapshot.has_value(), ErrorKind::ContractViolation,
          "policy has no frozen snapshot for ratio denominators");
  const Matrix& w = policy.weights;
  const Matrix& old = *policy.snapshot;
  require(old.same_shape(w), ErrorKind::ContractViolation, "snapshot shape differs from weights");
  for (const auto& g : groups) {
    g.validate(config.group_size);
    const std::size_t valid = g.valid_actions == 0 ? w.cols() : g.valid_actions;
    require(g.features.vector.size() == w.rows(), ErrorKind::ContractViolation,
            "group " + g.state_id + ": feature length does not match policy");
    require(valid <= w.cols(), ErrorKind::ContractViolation,
            "group " + g.state_id + ": valid action count exceeds policy actions");
    for (std::size_t i = 0; i < g.size(); ++i) {
      require(g.actions[i] < valid, ErrorKind::ContractViolation,
              "group " + g.state_id + ": action id out of range");
      const double expected = log_prob(old, g.features, g.actions[i], valid);
      require(std::abs(expected - g.logprob_old[i]) <= 1e-9 * std::max(1.0, std::abs(expected)),
              ErrorKind::ContractViolation,
              "group " + g.state_id + ": logprob_old was not produced by the current snapshot");
    }
  }
}

SurrogateResult surrogate_objective(std::span<const ActionGroup> groups,
                                    const PolicyParams& policy, const GRPOConfig& config) {
  config.validate();
  check_groups_against_policy(groups, policy, config);
  auto sums = kernels::surrogate_parallel(groups, policy.weights, config, false);
  SurrogateResult out;
  const double n = static_cast<double>(sums.pair_count);
  out.objective = n > 0 ? sums.objective_sum / n : 0.0;
  out.diagnostics.objective_value = out.objective;
  out.diagnostics.clip_fraction = n > 0 ? static_cast<double>(sums.clipped_count) / n : 0.0;
  out.diagnostics.ratios = std::move(sums.ratios);
  double reward_sum = 0.0;
  for (const auto& g : groups)
    for (const auto& r : g.rewards) reward_sum += r.total;
  out.diagnostics.mean_reward = n > 0 ? reward_sum / n : 0.0;
  return out;
}

Matrix surrogate_gradient(std::span<const ActionGroup> groups, const PolicyParams& policy,
                          const GRPOConfig& config) {
  config.validate();
  check_groups_against_policy(groups, policy, config);
  auto sums = kernels::surrogate_parallel(groups, policy.weights, config, true);
  if (sums.bad_group < groups.size()) {
    throw NumericalFailureError(groups[sums.bad_group].state_id,
                                "non-finite gradient in group " + groups[sums.bad_group].state_id);
  }
  if (sums.pair_count > 0) sums.gradient_sum *= 1.0 / static_cast<double>(sums.pair_count);
  return std::move(sums.gradient_sum);
}

StepDiagnostics grpo_step(std::span<const ActionGroup> batch, PolicyParams& policy,
                          const GRPOConfig& config, std::size_t step_index) {
  config.validate();
  require(!batch.empty(), ErrorKind::InvalidInput, "batch must be non-empty");
  require(step_index < config.total_steps, ErrorKind::InvalidInput,
          "step_index " + std::to_string(step_index) + " must be below total_steps");
  check_groups_against_policy(batch, policy, config);

  const double lr = cosine_lr(step_index, config);
  const Matrix before = policy.weights;
  const std::size_t micro = std::min(config.grad_accum_steps, batch.size());
  const std::size_t chunk = (batch.size() + micro - 1) / micro;

  StepDiagnostics diag;
  diag.lr_used = lr;
  for (std::size_t epoch = 0; epoch < config.inner_epochs; ++epoch) {
    Matrix grad(policy.weights.rows(), policy.weights.cols());
    double objective_sum = 0.0;
    std::size_t pairs = 0;
    std::size_t clipped = 0;
    std::vector<double> ratios;
    ratios.reserve(batch.size() * config.group_size);

    for (std::size_t begin = 0; begin < batch.size(); begin += chunk) {
      const auto part = batch.subspan(begin, std::min(chunk, batch.size() - begin));
      auto sums = kernels::surrogate_parallel(part, policy.weights, config, true);
      if (sums.bad_group < part.size()) {
        policy.weights = before;
        const auto& id = part[sums.bad_group].state_id;
        throw NumericalFailureError(id, "non-finite gradient in group " + id + " at step " +
                                            std::to_string(step_index));
      }
      grad += sums.gradient_sum;
      objective_sum += sums.objective_sum;
      pairs += sums.pair_count;
      clipped += sums.clipped_count;
      ratios.insert(ratios.end(), sums.ratios.begin(), sums.ratios.end());
    }

    grad *= 1.0 / static_cast<double>(pairs);
    if (!grad.all_finite()) {
      policy.weights = before;
      throw NumericalFailureError(batch.front().state_id,
                                  "non-finite accumulated gradient at step " +
                                      std::to_string(step_index));
    }

    diag.objective_value = objective_sum / static_cast<double>(pairs);
    diag.clip_fraction = static_cast<double>(clipped) / static_cast<double>(pairs);
    diag.ratios = std::move(ratios);
    diag.grad_norm = grad.frobenius_norm();

    grad *= lr;
    policy.weights += grad;
  }

  double reward_sum = 0.0;
  std::size_t n = 0;
  for (const auto& g : batch) {
    for (const auto& r : g.rewards) {
      reward_sum += r.total;
      ++n;
    }
  }
  diag.mean_reward = reward_sum / static_cast<double>(n);
  return diag;
}

double cosine_lr(std::size_t step, const GRPOConfig& config) {
  require(config.total_steps > 0, ErrorKind::InvalidInput, "total_steps must be positive");
  require(step <= config.total_steps, ErrorKind::InvalidInput,
          "step " + std::to_string(step) + " outside [0, total_steps]");
  const double progress = static_cast<double>(step) / static_cast<double>(config.total_steps);
  return config.lr_min + 0.5 * (config.lr_initial - config.lr_min) *
                             (1.0 + std::cos(std::numbers::pi * progress));
}

nlohmann::json step_log_json(std::size_t step, const StepDiagnostics& d) {
  return {{"step", step},
          {"objective", d.objective_value},
          {"mean_reward", d.mean_reward},
          {"clip_fraction", d.clip_fraction},
          {"lr", d.lr_used},
          {"grad_norm", d.grad_norm}};
}

}  // namespace rlvr
