#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "oracles.hpp"
#include "rlvr/grpo.hpp"

namespace testing_support {

inline std::filesystem::path data_dir() { return RLVR_TEST_DATA_DIR; }

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("rlvr-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct RandomInstance {
  rlvr::PolicyParams params;
  oracle::Instance inst;
  rlvr::GRPOConfig config;
};

struct InstanceShape {
  std::size_t feature_dim = 2;
  std::size_t actions = 3;
  std::size_t groups = 2;
  std::size_t group_size = 3;
  double drift = 0.3;  // spread of current weights around the snapshot
  bool lattice_rewards = false;
};

// Random snapshot, drifted current weights, random features/actions/rewards.
// logprob_old comes from the snapshot so the groups satisfy the contract.
inline RandomInstance random_instance(std::uint64_t seed, const InstanceShape& shape) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> reward(0.0, 3.0);

  RandomInstance out;
  out.config.group_size = shape.group_size;
  out.config.clip_epsilon = 0.2;
  rlvr::Matrix old(shape.feature_dim, shape.actions);
  for (double& v : old.flat()) v = 0.5 * normal(rng);
  rlvr::Matrix cur = old;
  for (double& v : cur.flat()) v += shape.drift * normal(rng);
  out.params.weights = cur;
  out.params.snapshot = old;

  for (std::size_t gi = 0; gi < shape.groups; ++gi) {
    rlvr::ActionGroup g;
    g.state_id = "s" + std::to_string(gi);
    g.features.vector.resize(shape.feature_dim);
    for (double& v : g.features.vector) v = normal(rng);
    for (std::size_t i = 0; i < shape.group_size; ++i) {
      const std::size_t a = rng() % shape.actions;
      g.actions.push_back(a);
      g.logprob_old.push_back(rlvr::log_prob(old, g.features, a));
      rlvr::RewardBreakdown r;
      r.total = shape.lattice_rewards ? 0.25 * static_cast<double>(rng() % 13) : reward(rng);
      g.rewards.push_back(r);
      g.rendered.emplace_back();
    }
    out.inst.groups.push_back(std::move(g));
  }
  out.inst.current = oracle::to_weights(cur);
  out.inst.old = oracle::to_weights(old);
  return out;
}

// Smallest distance of any ratio to a clip boundary; finite differences are
// only meaningful away from the kinks.
inline double distance_to_kink(const RandomInstance& r) {
  double d = 1e300;
  const double eps = r.config.clip_epsilon;
  for (const auto& g : r.inst.groups) {
    const auto pn = oracle::softmax(r.inst.current, g.features.vector, 0);
    const auto po = oracle::softmax(r.inst.old, g.features.vector, 0);
    for (std::size_t a : g.actions) {
      const double ratio = pn[a] / po[a];
      d = std::min({d, std::abs(ratio - (1.0 + eps)), std::abs(ratio - (1.0 - eps))});
    }
  }
  return d;
}

}  // namespace testing_support
