#include "rlvr/mcq.hpp"

#include <set>
#include <sstream>

#include "rlvr/error.hpp"
#include "rlvr/io.hpp"

namespace rlvr {

using nlohmann::json;

char option_letter(std::size_t index) {
  require(index < kMaxOptions, ErrorKind::InvalidInput,
          "option index " + std::to_string(index) + " out of range");
  return static_cast<char>('A' + index);
}

void validate(const MCQItem& item) {
  require(!item.id.empty(), ErrorKind::InvalidInput, "item id is empty");
  const auto n = item.options.size();
  require(n >= kMinOptions && n <= kMaxOptions, ErrorKind::InvalidInput,
          "item " + item.id + ": option count " + std::to_string(n) + " outside [2, 10]");
  char expected = 'A';
  for (const auto& [letter, text] : item.options) {
    require(letter == expected, ErrorKind::InvalidInput,
            "item " + item.id + ": option letters must run consecutively from A");
    ++expected;
  }
  require(item.options.count(item.gold) == 1, ErrorKind::InvalidInput,
          "item " + item.id + ": gold letter '" + std::string(1, item.gold) +
              "' is not an option");
}

void require_unique_ids(const std::vector<MCQItem>& items) {
  std::set<std::string_view> seen;
  for (const auto& item : items) {
    require(seen.insert(item.id).second, ErrorKind::InvalidInput,
            "duplicate item id: " + item.id);
  }
}

json to_json(const MCQItem& item) {
  json options = json::object();
  for (const auto& [letter, text] : item.options) options[std::string(1, letter)] = text;
  json j = {{"id", item.id},
            {"question", item.question},
            {"options", options},
            {"gold", std::string(1, item.gold)}};
  if (item.category) j["category"] = *item.category;
  if (item.source) j["source"] = *item.source;
  return j;
}

namespace {

char single_letter(const std::string& s, const std::string& what) {
  require(s.size() == 1 && s[0] >= 'A' && s[0] <= 'Z', ErrorKind::Parse,
          what + " must be a single uppercase letter, got \"" + s + "\"");
  return s[0];
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

MCQItem item_from_json(const json& j) {
  MCQItem item;
  try {
    item.id = j.at("id").get<std::string>();
    item.question = j.at("question").get<std::string>();
    for (const auto& [key, value] : j.at("options").items()) {
      item.options[single_letter(key, "option label")] = value.get<std::string>();
    }
    item.gold = single_letter(j.at("gold").get<std::string>(), "gold");
    item.category = optional_string(j, "category");
    item.source = optional_string(j, "source");
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("malformed item: ") + e.what());
  }
  try {
    validate(item);
  } catch (const Error& e) {
    fail(ErrorKind::Parse, e.what());
  }
  return item;
}

std::vector<MCQItem> parse_items_jsonl(const std::string& text) {
  std::vector<MCQItem> items;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      items.push_back(item_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return items;
}

std::vector<MCQItem> read_items_jsonl(const std::filesystem::path& path) {
  try {
    return parse_items_jsonl(read_text_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) fail(ErrorKind::Parse, e.what());
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

void write_items_jsonl(const std::filesystem::path& path, const std::vector<MCQItem>& items) {
  std::vector<json> rows;
  rows.reserve(items.size());
  for (const auto& item : items) rows.push_back(to_json(item));
  write_file_atomic(path, to_jsonl(rows));
}

MCQItem item_from_indexed_choices(const json& j, const std::string& id) {
  MCQItem item;
  try {
    item.id = j.contains("id") ? j.at("id").get<std::string>() : id;
    item.question = j.at("question").get<std::string>();
    const auto& choices = j.at("choices");
    for (std::size_t i = 0; i < choices.size(); ++i) {
      item.options[option_letter(i)] = choices.at(i).get<std::string>();
    }
    const auto answer = j.at("answer").get<long long>();
    require(answer >= 0 && static_cast<std::size_t>(answer) < choices.size(),
            ErrorKind::Parse, "answer index out of range for item " + item.id);
    item.gold = option_letter(static_cast<std::size_t>(answer));
    item.category = optional_string(j, "category");
    if (!item.category) item.category = optional_string(j, "subject");
    item.source = optional_string(j, "source");
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("malformed indexed-choice record: ") + e.what());
  }
  validate(item);
  return item;
}

}  // namespace rlvr
