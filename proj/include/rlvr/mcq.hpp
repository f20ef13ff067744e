#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace rlvr {

// One multiple-choice sample. Option letters run consecutively from 'A'.
struct MCQItem {
  std::string id;
  std::string question;
  std::map<char, std::string> options;
  char gold = 'A';
  std::optional<std::string> category;
  std::optional<std::string> source;

  std::size_t option_count() const noexcept { return options.size(); }
  // Zero-based index of the gold letter.
  std::size_t gold_index() const noexcept { return static_cast<std::size_t>(gold - 'A'); }

  bool operator==(const MCQItem&) const = default;
};

inline constexpr std::size_t kMinOptions = 2;
inline constexpr std::size_t kMaxOptions = 10;

char option_letter(std::size_t index);

// Throws InvalidInput when the item breaks the option/gold invariants.
void validate(const MCQItem& item);

// Throws InvalidInput on duplicate ids.
void require_unique_ids(const std::vector<MCQItem>& items);

nlohmann::json to_json(const MCQItem& item);
MCQItem item_from_json(const nlohmann::json& j);

// One item per non-blank line. Parse errors carry the 1-based line number.
std::vector<MCQItem> read_items_jsonl(const std::filesystem::path& path);
std::vector<MCQItem> parse_items_jsonl(const std::string& text);
void write_items_jsonl(const std::filesystem::path& path,
                       const std::vector<MCQItem>& items);

// Converts the common {"question", "choices": [...], "answer": <index>} layout.
// "subject" or "category" becomes the category when present.
MCQItem item_from_indexed_choices(const nlohmann::json& j, const std::string& id);

}  // namespace rlvr
