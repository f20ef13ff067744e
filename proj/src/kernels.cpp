#include <algorithm>
#include <cmath>
#include <exception>

#include <omp.h>

#include "rlvr/grpo.hpp"

namespace rlvr::kernels {

namespace {

std::size_t valid_for(const ActionGroup& g, const Matrix& w) {
  return g.valid_actions == 0 ? w.cols() : g.valid_actions;
}

struct GroupPartial {
  double objective = 0.0;
  std::size_t clipped = 0;
  std::vector<double> ratios;
  // Σ_i coef_i (one_hot(a_i) − π); the gradient block is features ⊗ direction.
  std::vector<double> direction;
  bool finite = true;
};

GroupPartial group_partial(const ActionGroup& g, const Matrix& w, const GRPOConfig& config,
                           bool with_gradient) {
  GroupPartial out;
  const std::size_t n = valid_for(g, w);
  const auto totals = g.reward_totals();
  const auto adv =
      compute_advantages(totals, config.normalize_advantages, config.norm_floor).values;

  std::vector<double> z(n, 0.0);
  for (std::size_t k = 0; k < w.rows(); ++k) {
    const double fk = g.features.vector[k];
    if (fk == 0.0) continue;
    for (std::size_t a = 0; a < n; ++a) z[a] += w(k, a) * fk;
  }
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  const double log_norm = zmax + std::log(sum);

  if (with_gradient) out.direction.assign(w.cols(), 0.0);
  double coef_total = 0.0;
  out.ratios.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t a = g.actions[i];
    const double ratio = std::exp(z[a] - log_norm - g.logprob_old[i]);
    out.ratios.push_back(ratio);
    const double eps = config.clip_epsilon;
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    out.objective += std::min(ratio * adv[i], clipped * adv[i]);
    const bool active = clipped * adv[i] < ratio * adv[i];
    if (active) ++out.clipped;
    if (with_gradient && !active) {
      const double coef = adv[i] * ratio;
      out.direction[a] += coef;
      coef_total += coef;
    }
  }
  if (with_gradient && coef_total != 0.0) {
    for (std::size_t a = 0; a < n; ++a) out.direction[a] -= coef_total * std::exp(z[a] - log_norm);
  }
  out.finite = std::isfinite(out.objective) &&
               std::all_of(out.direction.begin(), out.direction.end(),
                           [](double v) { return std::isfinite(v); });
  return out;
}

}  // namespace

SurrogateSums surrogate_serial(std::span<const ActionGroup> groups, const Matrix& weights,
                               const GRPOConfig& config, bool with_gradient) {
  SurrogateSums s;
  if (with_gradient) s.gradient_sum = Matrix(weights.rows(), weights.cols());
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    const std::size_t valid = valid_for(g, weights);
    const auto adv = compute_advantages(g.reward_totals(), config.normalize_advantages,
                                        config.norm_floor);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double lp_new = log_prob(weights, g.features, g.actions[i], valid);
      const double ratio = std::exp(lp_new - g.logprob_old[i]);
      const double term = clipped_term(ratio, adv.values[i], config.clip_epsilon);
      const bool active = clip_active(ratio, adv.values[i], config.clip_epsilon);
      s.objective_sum += term;
      s.ratios.push_back(ratio);
      ++s.pair_count;
      if (active) ++s.clipped_count;
      if (with_gradient && !active) {
        auto glp = grad_log_prob(weights, g.features, g.actions[i], valid);
        glp *= adv.values[i] * ratio;
        s.gradient_sum += glp;
      }
      if (!std::isfinite(term) && s.bad_group == static_cast<std::size_t>(-1)) s.bad_group = gi;
    }
    if (with_gradient && !s.gradient_sum.all_finite() &&
        s.bad_group == static_cast<std::size_t>(-1)) {
      s.bad_group = gi;
    }
  }
  return s;
}

SurrogateSums surrogate_parallel(std::span<const ActionGroup> groups, const Matrix& weights,
                                 const GRPOConfig& config, bool with_gradient) {
  std::vector<GroupPartial> partials(groups.size());
  std::vector<std::exception_ptr> errors(groups.size());
  const auto count = static_cast<std::ptrdiff_t>(groups.size());

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t gi = 0; gi < count; ++gi) {
    try {
      partials[gi] = group_partial(groups[gi], weights, config, with_gradient);
    } catch (...) {
      errors[gi] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SurrogateSums s;
  if (with_gradient) s.gradient_sum = Matrix(weights.rows(), weights.cols());
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& p = partials[gi];
    if (!p.finite && s.bad_group == static_cast<std::size_t>(-1)) s.bad_group = gi;
    s.objective_sum += p.objective;
    s.pair_count += groups[gi].size();
    s.clipped_count += p.clipped;
    s.ratios.insert(s.ratios.end(), p.ratios.begin(), p.ratios.end());
    if (!with_gradient) continue;
    const auto& f = groups[gi].features.vector;
    for (std::size_t k = 0; k < weights.rows(); ++k) {
      if (f[k] == 0.0) continue;
      for (std::size_t a = 0; a < weights.cols(); ++a) {
        s.gradient_sum(k, a) += f[k] * p.direction[a];
      }
    }
  }
  return s;
}

}  // namespace rlvr::kernels
