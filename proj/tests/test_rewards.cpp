#include <doctest.h>

#include <random>
#include <string>

#include "rlvr/mcq.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/rewards.hpp"

using namespace rlvr;

TEST_CASE("parse canonical response") {
  const auto p = parse_response("<think>x</think>\n<answer>B</answer>");
  CHECK(p.has_think_block);
  CHECK(p.has_answer_block);
  CHECK(p.blocks_in_order);
  REQUIRE(p.answer_text);
  CHECK(*p.answer_text == "B");
  for (Tag t : kAllTags) CHECK(p.count(t) == 1);
}

TEST_CASE("parse empty string") {
  const auto p = parse_response("");
  CHECK_FALSE(p.has_think_block);
  CHECK_FALSE(p.has_answer_block);
  CHECK_FALSE(p.blocks_in_order);
  CHECK_FALSE(p.answer_text);
  for (Tag t : kAllTags) CHECK(p.count(t) == 0);
}

TEST_CASE("parse out-of-order blocks") {
  const auto p = parse_response("<answer>C</answer><think>y</think>");
  CHECK(p.has_think_block);
  CHECK(p.has_answer_block);
  CHECK_FALSE(p.blocks_in_order);
  CHECK(*p.answer_text == "C");
}

TEST_CASE("parse edge cases") {
  CHECK(parse_response("<answer></answer>").answer_text == std::string{});
  CHECK_FALSE(parse_response("<answer>A").has_answer_block);
  CHECK_FALSE(parse_response("</think><think>").has_think_block);
  // first-match extraction
  CHECK(*parse_response("<answer>A</answer><answer>B</answer>").answer_text == "A");
  CHECK(parse_response("<answer> \t b \n</answer>").answer_text == "b");
}

TEST_CASE("format reward") {
  CHECK(format_reward(parse_response("<think>x</think>\n<answer>B</answer>")) == 1.0);
  CHECK(format_reward(parse_response("<think>x</think><answer>B</answer><answer>B</answer>")) == 0.0);
  CHECK(format_reward(parse_response("<answer>B</answer><think>x</think>")) == 0.0);
  CHECK(format_reward(parse_response("<think>x</think>")) == 0.0);
}

TEST_CASE("accuracy reward") {
  ParsedResponse p;
  p.has_answer_block = true;
  p.answer_text = "b";
  CHECK(accuracy_reward(p, "B") == 1.0);
  p.answer_text = "B is correct";
  CHECK(accuracy_reward(p, "B") == 0.0);
  p.answer_text.reset();
  p.has_answer_block = false;
  CHECK(accuracy_reward(p, "B") == 0.0);
}

TEST_CASE("xml count reward") {
  ParsedResponse p;
  p.tag_counts = {1, 1, 1, 1};
  CHECK(xml_count_reward(p) == 1.0);
  p.tag_counts = {1, 1, 0, 0};
  CHECK(xml_count_reward(p) == 0.5);
  p.tag_counts = {1, 1, 2, 1};
  CHECK(xml_count_reward(p) == 0.75);
}

TEST_CASE("total reward examples") {
  const RewardWeights ones{1, 1, 1};
  const auto good = total_reward("<think>x</think>\n<answer>B</answer>", "B", ones);
  CHECK(good == RewardBreakdown{1, 1, 1, 3.0});
  CHECK(total_reward("", "A", ones) == RewardBreakdown{0, 0, 0, 0});
  const auto wrong = total_reward("<think>x</think>\n<answer>C</answer>", "B", RewardWeights{1, 2, 1});
  CHECK(wrong == RewardBreakdown{1, 0, 1, 2.0});
}

TEST_CASE("reward weights validation") {
  CHECK_THROWS(validate(RewardWeights{0, 0, 0}));
  CHECK_THROWS(validate(RewardWeights{-1, 1, 1}));
  CHECK_NOTHROW(validate(RewardWeights{0, 1, 0}));
  CHECK(weights_from_json(to_json(RewardWeights{0.5, 2, 1})) == RewardWeights{0.5, 2, 1});
}

namespace {

MCQItem four_option_item() {
  MCQItem item;
  item.id = "q";
  item.question = "which?";
  item.options = {{'A', "a"}, {'B', "b"}, {'C', "c"}, {'D', "d"}};
  item.gold = 'C';
  return item;
}

// Hand-enumerated (format, accuracy, xml, total) under unit weights.
struct Row {
  FormatVariant variant;
  bool correct;
  RewardBreakdown expected;
};

const Row kRewardTable[] = {
    {FormatVariant::WellFormed, true, {1, 1, 1, 3}},
    {FormatVariant::WellFormed, false, {1, 0, 1, 2}},
    {FormatVariant::MissingThink, true, {0, 1, 0.5, 1.5}},
    {FormatVariant::MissingThink, false, {0, 0, 0.5, 0.5}},
    {FormatVariant::MissingAnswer, true, {0, 0, 0.5, 0.5}},
    {FormatVariant::MissingAnswer, false, {0, 0, 0.5, 0.5}},
    {FormatVariant::SwappedOrder, true, {0, 1, 1, 2}},
    {FormatVariant::SwappedOrder, false, {0, 0, 1, 1}},
    {FormatVariant::ExtraAnswerTag, true, {0, 1, 0.5, 1.5}},
    {FormatVariant::ExtraAnswerTag, false, {0, 0, 0.5, 0.5}},
    {FormatVariant::Untagged, true, {0, 0, 0, 0}},
    {FormatVariant::Untagged, false, {0, 0, 0, 0}},
};

}  // namespace

TEST_CASE("reward table over every rendered variant") {
  const auto item = four_option_item();
  for (const auto& row : kRewardTable) {
    CAPTURE(to_string(row.variant));
    CAPTURE(row.correct);
    const std::size_t answer = row.correct ? 2 : 0;
    const auto text = render_response({answer, row.variant}, item);
    CHECK(total_reward(text, "C", RewardWeights{}) == row.expected);
  }
}

TEST_CASE("format reward implies full xml credit") {
  std::mt19937_64 rng(3);
  const std::string alphabet[] = {"<think>", "</think>", "<answer>", "</answer>", "A", "b", " ", "\n", "x"};
  for (int i = 0; i < 3000; ++i) {
    std::string s;
    const int len = static_cast<int>(rng() % 9);
    for (int k = 0; k < len; ++k) s += alphabet[rng() % std::size(alphabet)];
    const auto p = parse_response(s);
    if (format_reward(p) == 1.0) CHECK(xml_count_reward(p) == 1.0);
    CHECK(xml_count_reward(p) >= 0.0);
    CHECK(xml_count_reward(p) <= 1.0);
    if (p.has_answer_block) CHECK(p.answer_text.has_value());
  }
}

TEST_CASE("think content never changes accuracy") {
  std::mt19937_64 rng(8);
  const std::string chars = "abcxyz ABC\n\t0123.,;:!?/>";  // no '<', so no tags can form
  for (int i = 0; i < 500; ++i) {
    std::string think;
    const int len = static_cast<int>(rng() % 40);
    for (int k = 0; k < len; ++k) think += chars[rng() % chars.size()];
    const std::string letter(1, static_cast<char>('A' + rng() % 4));
    const auto s = "<think>" + think + "</think>\n<answer>" + letter + "</answer>";
    CHECK(accuracy_reward(parse_response(s), letter) == 1.0);
    CHECK(accuracy_reward(parse_response(s), "E") == 0.0);
  }
}

TEST_CASE("removing tags from a well-formed response lowers xml credit by 0.25 per tag") {
  const std::string base = "<think>r</think>\n<answer>A</answer>";
  for (Tag t : kAllTags) {
    std::string s = base;
    s.erase(s.find(tag_literal(t)), tag_literal(t).size());
    CHECK(xml_count_reward(parse_response(s)) == 0.75);
  }
  CHECK(xml_count_reward(parse_response("<think>r</think>\nA")) == 0.5);
  CHECK(xml_count_reward(parse_response("r\n<answer>A</answer>")) == 0.5);
}

TEST_CASE("total_reward is pure") {
  const std::string s = "<think>x</think><answer>D</answer>";
  CHECK(total_reward(s, "D", RewardWeights{}) == total_reward(s, "D", RewardWeights{}));
}
