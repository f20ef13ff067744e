#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace rlvr {

enum class Tag { ThinkOpen, ThinkClose, AnswerOpen, AnswerClose };

inline constexpr std::array<Tag, 4> kAllTags{Tag::ThinkOpen, Tag::ThinkClose,
                                             Tag::AnswerOpen, Tag::AnswerClose};

std::string_view tag_literal(Tag tag);
// think_open, think_close, answer_open, answer_close
std::string_view tag_name(Tag tag);

// Structural evidence extracted from one raw response.
struct ParsedResponse {
  bool has_think_block = false;
  bool has_answer_block = false;
  bool blocks_in_order = false;
  std::optional<std::string> answer_text;  // first answer block, trimmed
  std::array<int, 4> tag_counts{};         // indexed by Tag

  int count(Tag tag) const { return tag_counts[static_cast<std::size_t>(tag)]; }

  bool operator==(const ParsedResponse&) const = default;
};

struct RewardWeights {
  double format = 1.0;
  double accuracy = 1.0;
  double xml_count = 1.0;

  double max_total() const { return format + accuracy + xml_count; }
  bool operator==(const RewardWeights&) const = default;
};

// Throws InvalidInput on negative/non-finite weights or all-zero weights.
void validate(const RewardWeights& weights);

struct RewardBreakdown {
  double format = 0.0;
  double accuracy = 0.0;
  double xml_count = 0.0;
  double total = 0.0;

  bool operator==(const RewardBreakdown&) const = default;
};

// Total over all strings; never throws.
ParsedResponse parse_response(std::string_view raw);

// 1 only for exactly one think block followed by exactly one answer block.
double format_reward(const ParsedResponse& parsed);

// Exact match of the trimmed, case-folded answer text against the gold label.
double accuracy_reward(const ParsedResponse& parsed, std::string_view gold_letter);

// 0.25 for every tag occurring exactly once.
double xml_count_reward(const ParsedResponse& parsed);

RewardBreakdown total_reward(std::string_view raw, std::string_view gold_letter,
                             const RewardWeights& weights);

nlohmann::json to_json(const RewardBreakdown& r);
nlohmann::json to_json(const RewardWeights& w);
RewardWeights weights_from_json(const nlohmann::json& j);

}  // namespace rlvr
