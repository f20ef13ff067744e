#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rlvr/mcq.hpp"
#include "rlvr/policy.hpp"

namespace rlvr::synthetic {

// Multiple-choice items whose question carries one cue word per gold letter,
// so a linear policy over hashed features can learn the answer. Cue words are
// chosen to occupy feature buckets no other question token uses.
struct TaskOptions {
  std::size_t n_items = 50;
  std::size_t num_options = 4;
  std::size_t feature_dim = kDefaultFeatureDim;
  std::size_t filler_words = 4;
  std::uint64_t seed = 7;
  std::string id_prefix = "syn";
  std::vector<std::string> categories;  // round-robin when non-empty
};

std::vector<MCQItem> make_task(const TaskOptions& options);

// Cue word for each option letter under the given feature_dim.
std::vector<std::string> cue_words(std::size_t num_options, std::size_t feature_dim);

// Weights whose greedy action is (gold, WellFormed) on every make_task item.
Matrix oracle_weights(std::size_t num_options, std::size_t feature_dim, double strength = 50.0);

}  // namespace rlvr::synthetic
