#include "rlvr/policy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>

#include "rlvr/error.hpp"
#include "rlvr/io.hpp"

namespace rlvr {

std::string_view to_string(FormatVariant v) {
  switch (v) {
    case FormatVariant::WellFormed: return "WellFormed";
    case FormatVariant::MissingThink: return "MissingThink";
    case FormatVariant::MissingAnswer: return "MissingAnswer";
    case FormatVariant::SwappedOrder: return "SwappedOrder";
    case FormatVariant::ExtraAnswerTag: return "ExtraAnswerTag";
    case FormatVariant::Untagged: return "Untagged";
  }
  return "?";
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix& Matrix::operator+=(const Matrix& o) {
  require(same_shape(o), ErrorKind::InvalidInput, "matrix shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

double Matrix::max_abs() const noexcept {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Matrix::frobenius_norm() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finaliser applied to a running combination
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ b);
}

std::size_t token_bucket(std::string_view token, std::size_t feature_dim) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(mix_seed(h, 0) % feature_dim);
}

StateFeatures featurize(const MCQItem& item, std::size_t feature_dim) {
  require(feature_dim > 0, ErrorKind::InvalidInput, "feature_dim must be positive");
  StateFeatures f;
  f.vector.assign(feature_dim, 0.0);
  std::string token;
  auto flush = [&] {
    if (!token.empty()) {
      f.vector[token_bucket(token, feature_dim)] += 1.0;
      token.clear();
    }
  };
  for (unsigned char c : item.question) {
    if (std::isalnum(c)) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  f.vector[token_bucket("<options:" + std::to_string(item.option_count()) + ">",
                        feature_dim)] += 1.0;
  double norm = 0.0;
  for (double v : f.vector) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : f.vector) v /= norm;
  return f;
}

namespace {

std::size_t resolve_valid(const Matrix& w, std::size_t valid_actions) {
  const std::size_t n = valid_actions == 0 ? w.cols() : valid_actions;
  require(n <= w.cols(), ErrorKind::InvalidInput,
          "valid action count " + std::to_string(n) + " exceeds policy actions " +
              std::to_string(w.cols()));
  return n;
}

void check_shapes(const Matrix& w, const StateFeatures& f) {
  require(w.rows() == f.vector.size() && w.cols() > 0, ErrorKind::InvalidInput,
          "feature length " + std::to_string(f.vector.size()) + " does not match policy rows " +
              std::to_string(w.rows()));
}

// logits[a] = Σ_k w(k, a) f[k], for a < n
std::vector<double> logits(const Matrix& w, const StateFeatures& f, std::size_t n) {
  std::vector<double> z(n, 0.0);
  for (std::size_t k = 0; k < w.rows(); ++k) {
    const double fk = f.vector[k];
    if (fk == 0.0) continue;
    for (std::size_t a = 0; a < n; ++a) z[a] += w(k, a) * fk;
  }
  return z;
}

}  // namespace

std::vector<double> action_distribution(const Matrix& weights, const StateFeatures& features,
                                        std::size_t valid_actions) {
  check_shapes(weights, features);
  const std::size_t n = resolve_valid(weights, valid_actions);
  auto z = logits(weights, features, n);
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  std::vector<double> p(weights.cols(), 0.0);
  for (std::size_t a = 0; a < n; ++a) p[a] = z[a] / sum;
  return p;
}

double log_prob(const Matrix& weights, const StateFeatures& features, std::size_t action,
                std::size_t valid_actions) {
  check_shapes(weights, features);
  const std::size_t n = resolve_valid(weights, valid_actions);
  require(action < n, ErrorKind::InvalidInput, "action id out of range");
  const auto z = logits(weights, features, n);
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  return z[action] - zmax - std::log(sum);
}

Matrix grad_log_prob(const Matrix& weights, const StateFeatures& features, std::size_t action,
                     std::size_t valid_actions) {
  const auto p = action_distribution(weights, features, valid_actions);
  require(action < resolve_valid(weights, valid_actions), ErrorKind::InvalidInput,
          "action id out of range");
  Matrix g(weights.rows(), weights.cols());
  for (std::size_t k = 0; k < weights.rows(); ++k) {
    const double fk = features.vector[k];
    if (fk == 0.0) continue;
    for (std::size_t a = 0; a < weights.cols(); ++a) {
      g(k, a) = fk * ((a == action ? 1.0 : 0.0) - p[a]);
    }
  }
  return g;
}

GroupSample sample_group(const PolicyParams& params, const StateFeatures& features,
                         std::size_t g, std::uint64_t rng_seed, std::size_t valid_actions) {
  require(params.snapshot.has_value(), ErrorKind::ContractViolation,
          "sample_group requires a frozen snapshot");
  require(g > 0, ErrorKind::InvalidInput, "group size must be positive");
  const Matrix& old = *params.snapshot;
  const auto p = action_distribution(old, features, valid_actions);
  const std::size_t n = resolve_valid(old, valid_actions);

  std::mt19937_64 rng(rng_seed);
  GroupSample s;
  s.actions.reserve(g);
  s.logprob_old.reserve(g);
  for (std::size_t i = 0; i < g; ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double cum = 0.0;
    std::size_t pick = n - 1;
    for (std::size_t a = 0; a < n; ++a) {
      cum += p[a];
      if (u < cum) {
        pick = a;
        break;
      }
    }
    // skip zero-probability tail entries left by rounding
    while (p[pick] == 0.0 && pick > 0) --pick;
    s.actions.push_back(pick);
    s.logprob_old.push_back(log_prob(old, features, pick, valid_actions));
  }
  return s;
}

std::size_t greedy_action(const Matrix& weights, const StateFeatures& features,
                          std::size_t valid_actions) {
  check_shapes(weights, features);
  const std::size_t n = resolve_valid(weights, valid_actions);
  const auto z = logits(weights, features, n);
  return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

std::string render_response(const CompositeAction& action, const MCQItem& item) {
  require(action.answer_index < item.option_count(), ErrorKind::InvalidInput,
          "answer index out of range for item " + item.id);
  const std::string letter(1, option_letter(action.answer_index));
  const std::string think = "<think>" + std::string(kReasoningStub) + "</think>";
  const std::string answer = "<answer>" + letter + "</answer>";
  switch (action.format_variant) {
    case FormatVariant::WellFormed: return think + "\n" + answer;
    case FormatVariant::MissingThink: return answer;
    case FormatVariant::MissingAnswer: return think;
    case FormatVariant::SwappedOrder: return answer + "\n" + think;
    case FormatVariant::ExtraAnswerTag: return think + "\n" + answer + "\n" + answer;
    case FormatVariant::Untagged: return letter;
  }
  return letter;
}

nlohmann::json to_json(const PolicyCheckpoint& ckpt) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k = 0; k < ckpt.weights.rows(); ++k) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t a = 0; a < ckpt.weights.cols(); ++a) row.push_back(ckpt.weights(k, a));
    rows.push_back(std::move(row));
  }
  return {{"feature_dim", ckpt.weights.rows()},
          {"actions", ckpt.weights.cols()},
          {"weights", std::move(rows)},
          {"seed", ckpt.seed}};
}

PolicyCheckpoint checkpoint_from_json(const nlohmann::json& j) {
  PolicyCheckpoint c;
  try {
    const auto dim = j.at("feature_dim").get<std::size_t>();
    const auto actions = j.at("actions").get<std::size_t>();
    require(dim > 0 && actions > 0 && actions % kFormatVariantCount == 0,
            ErrorKind::Parse, "checkpoint shape invalid");
    const auto& rows = j.at("weights");
    require(rows.size() == dim, ErrorKind::Parse, "checkpoint weights row count mismatch");
    c.weights = Matrix(dim, actions);
    for (std::size_t k = 0; k < dim; ++k) {
      require(rows[k].size() == actions, ErrorKind::Parse,
              "checkpoint weights column count mismatch");
      for (std::size_t a = 0; a < actions; ++a) c.weights(k, a) = rows[k][a].get<double>();
    }
    c.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("malformed checkpoint: ") + e.what());
  }
  require(c.weights.all_finite(), ErrorKind::Parse, "checkpoint contains non-finite weights");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const PolicyCheckpoint& ckpt) {
  write_file_atomic(path, to_json(ckpt).dump() + "\n");
}

PolicyCheckpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorKind::MissingCheckpoint, "checkpoint not found: " + path.string());
  }
  try {
    return checkpoint_from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

}  // namespace rlvr
