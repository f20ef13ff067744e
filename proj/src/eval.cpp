#include "rlvr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <set>
#include <sstream>

#include "rlvr/error.hpp"
#include "rlvr/rewards.hpp"

namespace rlvr {

using nlohmann::json;

json to_json(const EvalResult& r) {
  json cats = json::object();
  for (const auto& [name, score] : r.per_category) {
    cats[name] = {{"accuracy", score.accuracy}, {"n", score.n}};
  }
  return {{"dataset_name", r.dataset_name},
          {"model_label", r.model_label},
          {"overall_accuracy", r.overall_accuracy},
          {"n_items", r.n_items},
          {"per_category", std::move(cats)}};
}

EvalResult eval_result_from_json(const json& j) {
  EvalResult r;
  try {
    r.dataset_name = j.at("dataset_name").get<std::string>();
    r.model_label = j.at("model_label").get<std::string>();
    r.overall_accuracy = j.at("overall_accuracy").get<double>();
    r.n_items = j.at("n_items").get<std::size_t>();
    if (auto it = j.find("per_category"); it != j.end()) {
      for (const auto& [name, score] : it->items()) {
        r.per_category[name] = {score.at("accuracy").get<double>(),
                                score.at("n").get<std::size_t>()};
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("malformed eval result: ") + e.what());
  }
  require(r.overall_accuracy >= 0.0 && r.overall_accuracy <= 1.0, ErrorKind::Parse,
          "overall_accuracy outside [0, 1]");
  require(r.n_items > 0, ErrorKind::Parse, "n_items must be positive");
  return r;
}

std::vector<EvalResult> eval_results_from_json(const json& j) {
  std::vector<EvalResult> out;
  if (j.is_array()) {
    for (const auto& e : j) out.push_back(eval_result_from_json(e));
  } else {
    out.push_back(eval_result_from_json(j));
  }
  return out;
}

json to_json(const ItemRecord& r) {
  return {{"item_id", r.item_id},
          {"category", r.category},
          {"response", r.response},
          {"predicted", r.predicted ? json(*r.predicted) : json(nullptr)},
          {"correct", r.correct}};
}

EvalOutput evaluate(const std::vector<MCQItem>& items, Answerer& answerer,
                    const std::string& dataset_name, std::size_t workers) {
  require(!items.empty(), ErrorKind::InvalidInput, "evaluation set is empty");
  for (const auto& item : items) validate(item);
  require_unique_ids(items);

  EvalOutput out;
  out.items.resize(items.size());
  std::vector<std::exception_ptr> errors(items.size());
  const auto count = static_cast<std::ptrdiff_t>(items.size());
  const int threads = static_cast<int>(std::max<std::size_t>(1, workers));

#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      const auto& item = items[i];
      ItemRecord& rec = out.items[i];
      rec.item_id = item.id;
      rec.category = item.category.value_or(std::string(kUncategorized));
      rec.response = answerer.respond(item, filter_prompt(item));
      const auto parsed = parse_response(rec.response);
      rec.predicted = parsed.answer_text;
      rec.correct = accuracy_reward(parsed, std::string(1, item.gold)) == 1.0;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // correct, n
  std::size_t correct = 0;
  for (const auto& rec : out.items) {
    auto& t = tally[rec.category];
    t.second += 1;
    if (rec.correct) {
      t.first += 1;
      ++correct;
    }
  }
  EvalResult& r = out.result;
  r.dataset_name = dataset_name;
  r.model_label = answerer.model_id();
  r.n_items = items.size();
  r.overall_accuracy = static_cast<double>(correct) / static_cast<double>(items.size());
  for (const auto& [name, t] : tally) {
    r.per_category[name] = {static_cast<double>(t.first) / static_cast<double>(t.second),
                            t.second};
  }
  return out;
}

namespace {

long long to_units(double v) { return std::llround(v * 10000.0); }

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", static_cast<double>(to_units(v)) / 10000.0);
  return buf;
}

std::string signed4(long long units) {
  char buf[32];
  const long long mag = units < 0 ? -units : units;
  std::snprintf(buf, sizeof buf, "%c%lld.%04lld", units < 0 ? '-' : '+', mag / 10000,
                mag % 10000);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

const EvalResult* find_result(const std::vector<EvalResult>& results, const std::string& row,
                              const std::string& col) {
  for (const auto& r : results) {
    if (r.model_label == row && r.dataset_name == col) return &r;
  }
  return nullptr;
}

}  // namespace

std::optional<double> ComparisonTable::delta(std::size_t row, std::size_t col) const {
  const auto base_it = std::find(rows.begin(), rows.end(), baseline_row);
  if (base_it == rows.end()) return std::nullopt;
  const auto& base = cells[static_cast<std::size_t>(base_it - rows.begin())][col];
  const auto& cell = cells[row][col];
  if (!base || !cell) return std::nullopt;
  return static_cast<double>(to_units(*cell) - to_units(*base)) / 10000.0;
}

ComparisonTable build_comparison(const std::vector<EvalResult>& results,
                                 const std::string& baseline) {
  ComparisonTable t;
  t.baseline_row = baseline;
  std::set<std::string> labels;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : results) {
    require(r.overall_accuracy >= 0.0 && r.overall_accuracy <= 1.0, ErrorKind::InvalidInput,
            "accuracy outside [0, 1] for " + r.model_label + "/" + r.dataset_name);
    require(seen.emplace(r.model_label, r.dataset_name).second, ErrorKind::InvalidInput,
            "duplicate result for " + r.model_label + "/" + r.dataset_name);
    labels.insert(r.model_label);
    if (std::find(t.columns.begin(), t.columns.end(), r.dataset_name) == t.columns.end()) {
      t.columns.push_back(r.dataset_name);
    }
  }
  if (!labels.count(baseline)) {
    fail(ErrorKind::UnknownBaseline, "baseline label not among results: " + baseline);
  }
  t.rows.push_back(baseline);
  for (const auto& l : labels) {
    if (l != baseline) t.rows.push_back(l);
  }
  t.cells.assign(t.rows.size(), std::vector<std::optional<double>>(t.columns.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
      if (const auto* r = find_result(results, t.rows[i], t.columns[j])) {
        t.cells[i][j] = r->overall_accuracy;
      }
    }
  }
  return t;
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "markdown" || name == "md") return ReportFormat::Markdown;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  fail(ErrorKind::InvalidInput, "unknown report format: " + name);
}

std::string_view file_extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::Markdown: return "md";
    case ReportFormat::Csv: return "csv";
    case ReportFormat::Json: return "json";
  }
  return "txt";
}

namespace {

std::string emit_markdown(const ComparisonTable& t, const std::vector<EvalResult>& results) {
  std::ostringstream out;
  const auto header = [&] {
    out << "| Model |";
    for (const auto& c : t.columns) out << ' ' << md_cell(c) << " |";
    out << "\n|---|";
    for (std::size_t j = 0; j < t.columns.size(); ++j) out << "---:|";
    out << '\n';
  };

  out << "# Benchmark comparison\n\nBaseline: " << md_cell(t.baseline_row) << "\n\n";
  header();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out << "| " << md_cell(t.rows[i]) << " |";
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
      out << ' ' << (t.cells[i][j] ? fixed4(*t.cells[i][j]) : "n/a") << " |";
    }
    out << '\n';
  }

  out << "\n## Delta vs baseline\n\n";
  header();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out << "| " << md_cell(t.rows[i]) << " |";
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
      const auto d = t.delta(i, j);
      out << ' ' << (d ? signed4(std::llround(*d * 10000.0)) : "n/a") << " |";
    }
    out << '\n';
  }

  for (const auto& col : t.columns) {
    bool any = false;
    for (const auto& row : t.rows) {
      const auto* r = find_result(results, row, col);
      any = any || (r && !r->per_category.empty());
    }
    if (!any) continue;
    out << "\n## Categories: " << md_cell(col) << "\n\n";
    out << "| Model | Category | Accuracy | N |\n|---|---|---:|---:|\n";
    for (const auto& row : t.rows) {
      const auto* r = find_result(results, row, col);
      if (!r) continue;
      for (const auto& [name, score] : r->per_category) {
        out << "| " << md_cell(row) << " | " << md_cell(name) << " | " << fixed4(score.accuracy)
            << " | " << score.n << " |\n";
      }
    }
  }
  return out.str();
}

std::string emit_csv(const ComparisonTable& t, const std::vector<EvalResult>& results) {
  std::ostringstream out;
  out << "model,dataset,category,accuracy,n,delta_vs_baseline\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
      const auto* r = find_result(results, t.rows[i], t.columns[j]);
      out << csv_field(t.rows[i]) << ',' << csv_field(t.columns[j]) << ",,";
      if (t.cells[i][j]) {
        const auto d = t.delta(i, j);
        out << fixed4(*t.cells[i][j]) << ',' << (r ? std::to_string(r->n_items) : "") << ','
            << (d ? signed4(std::llround(*d * 10000.0)) : "");
      } else {
        out << "NA,,";
      }
      out << '\n';
    }
  }
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
      const auto* r = find_result(results, t.rows[i], t.columns[j]);
      if (!r) continue;
      for (const auto& [name, score] : r->per_category) {
        out << csv_field(t.rows[i]) << ',' << csv_field(t.columns[j]) << ',' << csv_field(name)
            << ',' << fixed4(score.accuracy) << ',' << score.n << ",\n";
      }
    }
  }
  return out.str();
}

std::string emit_json(const ComparisonTable& t, const std::vector<EvalResult>& results) {
  json cells = json::array();
  for (const auto& row : t.cells) {
    json r = json::array();
    for (const auto& c : row) r.push_back(c ? json(*c) : json(nullptr));
    cells.push_back(std::move(r));
  }
  json res = json::array();
  for (const auto& r : results) res.push_back(to_json(r));
  const json doc = {{"baseline", t.baseline_row},
                    {"rows", t.rows},
                    {"columns", t.columns},
                    {"cells", std::move(cells)},
                    {"results", std::move(res)}};
  return doc.dump(2) + "\n";
}

}  // namespace

std::string emit_report(const ComparisonTable& table, const std::vector<EvalResult>& results,
                        ReportFormat format) {
  switch (format) {
    case ReportFormat::Markdown: return emit_markdown(table, results);
    case ReportFormat::Csv: return emit_csv(table, results);
    case ReportFormat::Json: return emit_json(table, results);
  }
  return {};
}

ParsedReport report_from_json(const json& j) {
  ParsedReport p;
  try {
    p.table.baseline_row = j.at("baseline").get<std::string>();
    p.table.rows = j.at("rows").get<std::vector<std::string>>();
    p.table.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& row : j.at("cells")) {
      std::vector<std::optional<double>> r;
      for (const auto& c : row) {
        r.push_back(c.is_null() ? std::nullopt : std::optional<double>(c.get<double>()));
      }
      p.table.cells.push_back(std::move(r));
    }
    p.results = eval_results_from_json(j.at("results"));
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("malformed report: ") + e.what());
  }
  return p;
}

}  // namespace rlvr
