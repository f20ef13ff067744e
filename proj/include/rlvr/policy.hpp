#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlvr/mcq.hpp"

namespace rlvr {

enum class FormatVariant : int {
  WellFormed = 0,
  MissingThink,
  MissingAnswer,
  SwappedOrder,
  ExtraAnswerTag,
  Untagged,
};

inline constexpr std::size_t kFormatVariantCount = 6;
inline constexpr std::array<FormatVariant, kFormatVariantCount> kAllFormatVariants{
    FormatVariant::WellFormed,    FormatVariant::MissingThink,   FormatVariant::MissingAnswer,
    FormatVariant::SwappedOrder,  FormatVariant::ExtraAnswerTag, FormatVariant::Untagged};

std::string_view to_string(FormatVariant v);

// Flat action ids are answer_index * kFormatVariantCount + variant, so the
// actions valid for an n-option item are exactly the first 6n ids.
struct CompositeAction {
  std::size_t answer_index = 0;
  FormatVariant format_variant = FormatVariant::WellFormed;

  std::size_t id() const noexcept {
    return answer_index * kFormatVariantCount + static_cast<std::size_t>(format_variant);
  }
  static CompositeAction from_id(std::size_t id) noexcept {
    return {id / kFormatVariantCount,
            static_cast<FormatVariant>(id % kFormatVariantCount)};
  }
  bool operator==(const CompositeAction&) const = default;
};

inline std::size_t action_count_for(std::size_t num_options) {
  return num_options * kFormatVariantCount;
}

// Dense row-major matrix, rows = feature_dim, cols = action count.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const noexcept;
  void fill(double v);
  Matrix& operator+=(const Matrix& o);
  Matrix& operator*=(double s);
  double max_abs() const noexcept;
  double frobenius_norm() const noexcept;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// θ and the frozen θ_old copy used for sampling and ratio denominators.
struct PolicyParams {
  Matrix weights;
  std::optional<Matrix> snapshot;

  void take_snapshot() { snapshot = weights; }
};

struct StateFeatures {
  std::vector<double> vector;
  bool operator==(const StateFeatures&) const = default;
};

inline constexpr std::size_t kDefaultFeatureDim = 64;

// Lowercase word tokens hashed into feature_dim buckets plus an option-count
// indicator token, L2-normalised. Pure function of the item content.
StateFeatures featurize(const MCQItem& item, std::size_t feature_dim = kDefaultFeatureDim);
std::size_t token_bucket(std::string_view token, std::size_t feature_dim);

// Softmax over weightsᵀ·features. Actions at or past `valid_actions` get zero
// probability; pass 0 to use every column.
std::vector<double> action_distribution(const Matrix& weights, const StateFeatures& features,
                                        std::size_t valid_actions = 0);
double log_prob(const Matrix& weights, const StateFeatures& features, std::size_t action,
                std::size_t valid_actions = 0);

// ∇_θ log π_θ(action|s) = features ⊗ (one_hot(action) − π).
Matrix grad_log_prob(const Matrix& weights, const StateFeatures& features, std::size_t action,
                     std::size_t valid_actions = 0);

struct GroupSample {
  std::vector<std::size_t> actions;
  std::vector<double> logprob_old;
};

// g i.i.d. draws from the snapshot distribution. Requires params.snapshot.
GroupSample sample_group(const PolicyParams& params, const StateFeatures& features,
                         std::size_t g, std::uint64_t rng_seed, std::size_t valid_actions = 0);

// Argmax action, lowest id on ties.
std::size_t greedy_action(const Matrix& weights, const StateFeatures& features,
                          std::size_t valid_actions = 0);

inline constexpr std::string_view kReasoningStub = "eliminating options";

std::string render_response(const CompositeAction& action, const MCQItem& item);

// Checkpoint document: {"feature_dim", "actions", "weights": [[...]], "seed"}.
struct PolicyCheckpoint {
  Matrix weights;
  std::uint64_t seed = 0;

  std::size_t feature_dim() const { return weights.rows(); }
  std::size_t num_actions() const { return weights.cols(); }
  std::size_t num_options() const { return weights.cols() / kFormatVariantCount; }
};

nlohmann::json to_json(const PolicyCheckpoint& ckpt);
PolicyCheckpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const std::filesystem::path& path, const PolicyCheckpoint& ckpt);
PolicyCheckpoint load_checkpoint(const std::filesystem::path& path);

// Mixes a base seed with stream indices; used to derive per-rollout seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace rlvr
