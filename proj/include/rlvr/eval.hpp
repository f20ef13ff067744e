#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlvr/data_filter.hpp"
#include "rlvr/mcq.hpp"

namespace rlvr {

// Anything that turns an item into a response string answers for evaluation.
using Answerer = Responder;

inline constexpr std::string_view kUncategorized = "uncategorized";

struct CategoryScore {
  double accuracy = 0.0;
  std::size_t n = 0;
  bool operator==(const CategoryScore&) const = default;
};

struct EvalResult {
  std::string dataset_name;
  double overall_accuracy = 0.0;
  std::map<std::string, CategoryScore> per_category;
  std::size_t n_items = 0;
  std::string model_label;

  bool operator==(const EvalResult&) const = default;
};

nlohmann::json to_json(const EvalResult& r);
EvalResult eval_result_from_json(const nlohmann::json& j);
// Accepts either a single result object or an array of them.
std::vector<EvalResult> eval_results_from_json(const nlohmann::json& j);

struct ItemRecord {
  std::string item_id;
  std::string category;
  std::string response;
  std::optional<std::string> predicted;
  bool correct = false;
};

nlohmann::json to_json(const ItemRecord& r);

struct EvalOutput {
  EvalResult result;
  std::vector<ItemRecord> items;  // input order
};

// Correctness is the accuracy reward: parse the response, exact letter match.
// Items are answered on up to `workers` threads; aggregation is index-ordered.
EvalOutput evaluate(const std::vector<MCQItem>& items, Answerer& answerer,
                    const std::string& dataset_name, std::size_t workers = 1);

struct ComparisonTable {
  std::vector<std::string> rows;     // model labels, baseline first
  std::vector<std::string> columns;  // dataset names
  std::vector<std::vector<std::optional<double>>> cells;
  std::string baseline_row;

  // Cell minus baseline cell, both rounded to 4 decimals first.
  std::optional<double> delta(std::size_t row, std::size_t col) const;

  bool operator==(const ComparisonTable&) const = default;
};

// Rows: baseline, then the remaining labels in lexicographic order. Columns
// keep first-appearance order. Throws UnknownBaseline / InvalidInput.
ComparisonTable build_comparison(const std::vector<EvalResult>& results,
                                 const std::string& baseline);

enum class ReportFormat { Markdown, Csv, Json };

ReportFormat parse_report_format(const std::string& name);
std::string_view file_extension(ReportFormat f);

std::string emit_report(const ComparisonTable& table, const std::vector<EvalResult>& results,
                        ReportFormat format);

struct ParsedReport {
  ComparisonTable table;
  std::vector<EvalResult> results;
};

// Inverse of the JSON report format.
ParsedReport report_from_json(const nlohmann::json& j);

}  // namespace rlvr
