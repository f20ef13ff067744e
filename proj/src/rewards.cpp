#include "rlvr/rewards.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "rlvr/error.hpp"

namespace rlvr {

std::string_view tag_literal(Tag tag) {
  switch (tag) {
    case Tag::ThinkOpen: return "<think>";
    case Tag::ThinkClose: return "</think>";
    case Tag::AnswerOpen: return "<answer>";
    case Tag::AnswerClose: return "</answer>";
  }
  return "";
}

std::string_view tag_name(Tag tag) {
  switch (tag) {
    case Tag::ThinkOpen: return "think_open";
    case Tag::ThinkClose: return "think_close";
    case Tag::AnswerOpen: return "answer_open";
    case Tag::AnswerClose: return "answer_close";
  }
  return "";
}

void validate(const RewardWeights& w) {
  for (double v : {w.format, w.accuracy, w.xml_count}) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::InvalidInput,
            "reward weights must be finite and non-negative");
  }
  require(w.format > 0.0 || w.accuracy > 0.0 || w.xml_count > 0.0, ErrorKind::InvalidInput,
          "at least one reward weight must be positive");
}

namespace {

constexpr auto npos = std::string_view::npos;

int count_occurrences(std::string_view haystack, std::string_view needle) {
  int n = 0;
  for (auto pos = haystack.find(needle); pos != npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string fold(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

}  // namespace

ParsedResponse parse_response(std::string_view raw) {
  ParsedResponse p;
  for (Tag tag : kAllTags) {
    p.tag_counts[static_cast<std::size_t>(tag)] = count_occurrences(raw, tag_literal(tag));
  }

  const auto think_open = raw.find(tag_literal(Tag::ThinkOpen));
  std::size_t think_end = npos;
  if (think_open != npos) {
    const auto close = raw.find(tag_literal(Tag::ThinkClose),
                                think_open + tag_literal(Tag::ThinkOpen).size());
    if (close != npos) {
      p.has_think_block = true;
      think_end = close + tag_literal(Tag::ThinkClose).size();
    }
  }

  const auto answer_open = raw.find(tag_literal(Tag::AnswerOpen));
  if (answer_open != npos) {
    const auto content_begin = answer_open + tag_literal(Tag::AnswerOpen).size();
    const auto close = raw.find(tag_literal(Tag::AnswerClose), content_begin);
    if (close != npos) {
      p.has_answer_block = true;
      p.answer_text = std::string(trim(raw.substr(content_begin, close - content_begin)));
    }
  }

  p.blocks_in_order = p.has_think_block && answer_open != npos && think_end <= answer_open;
  return p;
}

double format_reward(const ParsedResponse& p) {
  const bool counts_ok = std::all_of(p.tag_counts.begin(), p.tag_counts.end(),
                                     [](int c) { return c == 1; });
  return (p.has_think_block && p.has_answer_block && p.blocks_in_order && counts_ok) ? 1.0
                                                                                    : 0.0;
}

double accuracy_reward(const ParsedResponse& p, std::string_view gold_letter) {
  if (!p.answer_text) return 0.0;
  return fold(trim(*p.answer_text)) == fold(trim(gold_letter)) ? 1.0 : 0.0;
}

double xml_count_reward(const ParsedResponse& p) {
  double score = 0.0;
  for (int c : p.tag_counts) {
    if (c == 1) score += 0.25;
  }
  return score;
}

RewardBreakdown total_reward(std::string_view raw, std::string_view gold_letter,
                             const RewardWeights& weights) {
  const auto parsed = parse_response(raw);
  RewardBreakdown r;
  r.format = format_reward(parsed);
  r.accuracy = accuracy_reward(parsed, gold_letter);
  r.xml_count = xml_count_reward(parsed);
  r.total = weights.format * r.format + weights.accuracy * r.accuracy +
            weights.xml_count * r.xml_count;
  return r;
}

nlohmann::json to_json(const RewardBreakdown& r) {
  return {{"format", r.format}, {"accuracy", r.accuracy}, {"xml_count", r.xml_count},
          {"total", r.total}};
}

nlohmann::json to_json(const RewardWeights& w) {
  return {{"w_f", w.format}, {"w_a", w.accuracy}, {"w_x", w.xml_count}};
}

RewardWeights weights_from_json(const nlohmann::json& j) {
  RewardWeights w;
  w.format = j.value("w_f", w.format);
  w.accuracy = j.value("w_a", w.accuracy);
  w.xml_count = j.value("w_x", w.xml_count);
  validate(w);
  return w;
}

}  // namespace rlvr
