// rlvr: filter item pools, train the linear-softmax policy with GRPO, evaluate
// and report. Errors go to stderr as one JSON object; see --help for exit codes.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rlvr/data_filter.hpp"
#include "rlvr/error.hpp"
#include "rlvr/eval.hpp"
#include "rlvr/io.hpp"
#include "rlvr/mcq.hpp"
#include "rlvr/model_client.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/run_config.hpp"
#include "rlvr/synthetic.hpp"
#include "rlvr/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rlvr;

namespace {

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0   success\n"
    "  1   internal error\n"
    "  2   invalid input or bad arguments\n"
    "  3   parse error (config, dataset, responses)\n"
    "  4   insufficient pool for the requested selection\n"
    "  5   endpoint failure (retries exhausted, non-retryable status, protocol)\n"
    "  6   numerical failure during training (last good checkpoint is kept)\n"
    "  7   missing checkpoint\n"
    "  8   unknown baseline label\n"
    "  9   contract violation\n"
    "  10  filesystem error\n"
    "Errors are printed to stderr as {\"error\", \"message\", \"exit_code\"}.\n"
    "Precedence: command-line flags > --config file > built-in defaults.";

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string run_id;
  std::string results_dir;
  bool verbose = false;
};

void emit_line(const json& j) {
  std::cout << j.dump() << '\n' << std::flush;
}

void log_event(const Globals& g, const std::string& event, json fields = json::object()) {
  if (!g.verbose) return;
  fields["event"] = event;
  emit_line(fields);
}

int report_error(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
  return code;
}

RunConfig base_config(const Globals& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_run_config(g.config_path);
  if (g.seed) cfg.set_seed(*g.seed);
  if (!g.run_id.empty()) cfg.run_id = g.run_id;
  if (!g.results_dir.empty()) cfg.paths.results_dir = g.results_dir;
  return cfg;
}

// Call after every override has been applied.
fs::path finalize(RunConfig& cfg) {
  cfg.validate();
  resolve_run_id(cfg);
  return fs::path(cfg.paths.results_dir) / cfg.run_id;
}

std::vector<MCQItem> load_dataset(const std::string& path) {
  require(!path.empty(), ErrorKind::InvalidInput, "no dataset given");
  auto items = read_items_jsonl(path);
  require(!items.empty(), ErrorKind::Parse, path + ": no items");
  try {
    require_unique_ids(items);
  } catch (const Error& e) {
    fail(ErrorKind::Parse, path + ": " + e.what());
  }
  return items;
}

void require_file(const std::string& path, ErrorKind kind, const std::string& what) {
  require(!path.empty(), ErrorKind::InvalidInput, what + " not given");
  require(fs::exists(path), kind, what + " not found: " + path);
}

struct ResponderChoice {
  std::string kind = "internal";
  std::string responses;
  std::string checkpoint;
  std::string label;
};

void add_responder_options(CLI::App* cmd, ResponderChoice& r) {
  cmd->add_option("--responder", r.kind, "internal (policy checkpoint), endpoint, or replay")
      ->check(CLI::IsMember({"internal", "endpoint", "replay"}));
  cmd->add_option("--responses", r.responses, "JSONL of {id, response} for --responder replay");
  cmd->add_option("--checkpoint", r.checkpoint, "policy checkpoint (default: paths.checkpoint)");
  cmd->add_option("--label", r.label, "model label recorded in outputs");
}

std::unique_ptr<Responder> make_responder(const ResponderChoice& choice, const RunConfig& cfg,
                                          const std::shared_ptr<ResponseCache>& cache) {
  if (choice.kind == "replay") {
    require_file(choice.responses, ErrorKind::Parse, "--responses file");
    return std::make_unique<ReplayResponder>(
        ReplayResponder::from_jsonl(choice.responses, choice.label.empty() ? "replay" : choice.label));
  }
  if (choice.kind == "endpoint") {
    require(cfg.endpoint.has_value(), ErrorKind::InvalidInput,
            "--responder endpoint needs an endpoint section in the config");
    return std::make_unique<EndpointResponder>(std::make_shared<ModelClient>(*cfg.endpoint, cache));
  }
  const std::string path = choice.checkpoint.empty() ? cfg.paths.checkpoint : choice.checkpoint;
  require(!path.empty(), ErrorKind::MissingCheckpoint, "internal responder needs a checkpoint");
  const std::string label = choice.label.empty() ? fs::path(path).stem().string() : choice.label;
  return std::make_unique<PolicyResponder>(load_checkpoint(path), label);
}

std::shared_ptr<ResponseCache> make_cache(const RunConfig& cfg) {
  if (cfg.paths.cache_dir.empty()) return nullptr;
  return std::make_shared<ResponseCache>(cfg.paths.cache_dir);
}

// ---- filter ---------------------------------------------------------------

struct FilterArgs {
  std::string pool;
  std::string out;
  ResponderChoice responder;
  std::optional<std::size_t> n_hard;
  std::optional<std::size_t> n_easy;
};

void cmd_filter(const Globals& g, const FilterArgs& a) {
  RunConfig cfg = base_config(g);
  if (!a.pool.empty()) cfg.paths.dataset = a.pool;
  if (a.n_hard) cfg.selection.n_hard = *a.n_hard;
  if (a.n_easy) cfg.selection.n_easy = *a.n_easy;
  const fs::path dir = finalize(cfg);

  const auto items = load_dataset(cfg.paths.dataset);
  log_event(g, "pool_loaded", {{"items", items.size()}, {"run_id", cfg.run_id}});

  const auto cache = make_cache(cfg);
  auto responder = make_responder(a.responder, cfg, cache);
  FilterOptions opts;
  if (a.responder.kind == "endpoint") {
    opts.max_parallel = cfg.endpoint->max_parallel;  // client owns the cache
  } else {
    opts.cache = cache;
    opts.max_parallel = cfg.eval_workers;
  }
  const auto run = filter_pool(items, *responder, opts);

  std::vector<json> rows;
  for (const auto& v : run.verdicts) rows.push_back(to_json(v));
  write_file_atomic(dir / "verdicts.jsonl", to_jsonl(rows));
  write_file_atomic(dir / "filter_summary.json", to_json(run.summary).dump(2) + "\n");
  log_event(g, "filtered", {{"responder_calls", run.responder_calls}});

  const auto selected = select_training_set(run.verdicts, items, cfg.selection);
  write_items_jsonl(a.out, selected);
  emit_line({{"event", "filter_done"},
             {"run_id", cfg.run_id},
             {"summary", to_json(run.summary)},
             {"selected", selected.size()},
             {"out", a.out}});
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  std::string init;
  std::optional<std::size_t> steps;
  std::optional<double> lr;
};

void cmd_train(const Globals& g, const TrainArgs& a) {
  RunConfig cfg = base_config(g);
  if (!a.data.empty()) cfg.paths.dataset = a.data;
  if (a.steps) cfg.grpo.total_steps = *a.steps;
  if (a.lr) cfg.grpo.lr_initial = *a.lr;
  const std::string out = a.out.empty() ? cfg.paths.checkpoint : a.out;
  require(!out.empty(), ErrorKind::InvalidInput, "no output checkpoint (--out or paths.checkpoint)");
  const fs::path dir = finalize(cfg);

  const auto items = load_dataset(cfg.paths.dataset);
  std::size_t num_options = 0;
  for (const auto& it : items) num_options = std::max(num_options, it.option_count());

  Matrix init(cfg.feature_dim, action_count_for(num_options));
  if (!a.init.empty()) {
    auto ckpt = load_checkpoint(a.init);
    require(ckpt.weights.same_shape(init), ErrorKind::InvalidInput,
            "--init checkpoint shape does not match dataset and feature_dim");
    init = std::move(ckpt.weights);
  }
  log_event(g, "train_start", {{"items", items.size()}, {"run_id", cfg.run_id},
                               {"config", to_json(cfg.grpo)}});

  Trainer trainer(items, init, cfg.grpo, cfg.rewards);
  TrainingSummary summary;
  try {
    summary = run_training(trainer, [](std::size_t step, const StepDiagnostics& d) {
      emit_line(step_log_json(step, d));
    });
  } catch (const NumericalFailureError&) {
    // grpo_step restores the weights before throwing
    save_checkpoint(out, {trainer.params().weights, cfg.grpo.seed});
    throw;
  }
  save_checkpoint(out, {trainer.params().weights, cfg.grpo.seed});
  write_file_atomic(dir / "train_summary.json", to_json(summary).dump(2) + "\n");
  emit_line({{"event", "train_done"}, {"run_id", cfg.run_id}, {"summary", to_json(summary)},
             {"checkpoint", out}});
}

// ---- eval / report ----------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> from_results;
  std::string baseline;
  std::string format = "md";
};

std::vector<EvalResult> load_results(const std::vector<std::string>& files) {
  std::vector<EvalResult> out;
  for (const auto& f : files) {
    require_file(f, ErrorKind::Parse, "results file");
    json j;
    try {
      j = json::parse(read_text_file(f));
    } catch (const json::exception& e) {
      fail(ErrorKind::Parse, f + ": " + e.what());
    }
    // a JSON report also carries its results
    const auto rs = j.is_object() && j.contains("results") ? eval_results_from_json(j.at("results"))
                                                           : eval_results_from_json(j);
    out.insert(out.end(), rs.begin(), rs.end());
  }
  return out;
}

void write_report(const fs::path& dir, const std::vector<EvalResult>& results,
                  const std::string& baseline, const std::string& format_name) {
  require(!results.empty(), ErrorKind::InvalidInput, "no results to report");
  const auto format = parse_report_format(format_name);
  const std::string base = baseline.empty() ? results.front().model_label : baseline;
  const auto doc = emit_report(build_comparison(results, base), results, format);
  write_file_atomic(dir / ("report." + std::string(file_extension(format))), doc);
  std::cout << doc << std::flush;
}

struct EvalArgs {
  std::vector<std::string> data;
  ResponderChoice responder;
  ReportArgs report;
};

void cmd_eval(const Globals& g, const EvalArgs& a) {
  RunConfig cfg = base_config(g);
  std::vector<std::string> data = a.data;
  if (data.empty() && a.report.from_results.empty() && !cfg.paths.dataset.empty()) {
    data.push_back(cfg.paths.dataset);
  }
  require(!data.empty() || !a.report.from_results.empty(), ErrorKind::InvalidInput,
          "nothing to evaluate: give --data or --from-results");
  parse_report_format(a.report.format);
  const fs::path dir = finalize(cfg);

  std::vector<std::vector<MCQItem>> datasets;
  for (const auto& path : data) datasets.push_back(load_dataset(path));
  auto results = load_results(a.report.from_results);

  std::string own_label;
  if (!data.empty()) {
    auto answerer = make_responder(a.responder, cfg, make_cache(cfg));
    std::vector<EvalResult> own;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::string name = fs::path(data[i]).stem().string();
      auto out = evaluate(datasets[i], *answerer, name, cfg.eval_workers);
      std::vector<json> rows;
      for (const auto& rec : out.items) rows.push_back(to_json(rec));
      write_file_atomic(dir / ("items_" + name + ".jsonl"), to_jsonl(rows));
      log_event(g, "evaluated", {{"dataset", name}, {"accuracy", out.result.overall_accuracy}});
      own.push_back(std::move(out.result));
    }
    own_label = own.front().model_label;
    json arr = json::array();
    for (const auto& r : own) arr.push_back(to_json(r));
    write_file_atomic(dir / "results.json", arr.dump(2) + "\n");
    results.insert(results.end(), own.begin(), own.end());
  }
  write_report(dir, results, a.report.baseline.empty() ? own_label : a.report.baseline,
               a.report.format);
}

void cmd_report(const Globals& g, const ReportArgs& a) {
  RunConfig cfg = base_config(g);
  parse_report_format(a.format);
  const fs::path dir = finalize(cfg);
  write_report(dir, load_results(a.from_results), a.baseline, a.format);
}

// ---- synth / convert --------------------------------------------------------

struct SynthArgs {
  synthetic::TaskOptions task;
  std::string out;
  std::string oracle_out;
};

void cmd_synth(const Globals& g, SynthArgs a) {
  RunConfig cfg = base_config(g);
  cfg.validate();
  a.task.feature_dim = cfg.feature_dim;
  const auto items = synthetic::make_task(a.task);
  write_items_jsonl(a.out, items);
  json done = {{"event", "synth_done"}, {"items", items.size()}, {"out", a.out}};
  if (!a.oracle_out.empty()) {
    save_checkpoint(a.oracle_out,
                    {synthetic::oracle_weights(a.task.num_options, cfg.feature_dim), a.task.seed});
    done["oracle_checkpoint"] = a.oracle_out;
  }
  emit_line(done);
}

void cmd_convert(const std::string& in, const std::string& out) {
  require_file(in, ErrorKind::Parse, "input file");
  std::istringstream lines(read_text_file(in));
  const std::string stem = fs::path(in).stem().string();
  std::vector<MCQItem> items;
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      items.push_back(item_from_indexed_choices(json::parse(line), stem + "-" + std::to_string(n)));
    } catch (const json::exception& e) {
      fail(ErrorKind::Parse, in + " line " + std::to_string(n) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorKind::Parse, in + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  require(!items.empty(), ErrorKind::Parse, in + ": no items");
  require_unique_ids(items);
  write_items_jsonl(out, items);
  emit_line({{"event", "convert_done"}, {"items", items.size()}, {"out", out}});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RLVR data selection, GRPO training and evaluation"};
  app.footer(kExitCodes);
  app.require_subcommand(1);

  Globals g;
  app.add_option("--config", g.config_path, "run config JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "seed for training and selection");
  app.add_option("--run-id", g.run_id, "results subdirectory (default: timestamp-digest)");
  app.add_option("--results-dir", g.results_dir, "overrides paths.results_dir");
  app.add_flag("-v,--verbose", g.verbose, "progress events as JSON lines on stdout");

  FilterArgs fa;
  auto* filter = app.add_subcommand("filter", "classify a pool as easy/hard and select a training set");
  filter->add_option("--pool", fa.pool, "MCQ item pool JSONL (default: paths.dataset)");
  filter->add_option("--out", fa.out, "selected training set JSONL")->required();
  filter->add_option("--n-hard", fa.n_hard, "hard items to select");
  filter->add_option("--n-easy", fa.n_easy, "easy items to select");
  add_responder_options(filter, fa.responder);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train the policy with GRPO");
  train->add_option("--data", ta.data, "training set JSONL (default: paths.dataset)");
  train->add_option("--steps", ta.steps, "optimizer steps")->check(CLI::PositiveNumber);
  train->add_option("--lr", ta.lr, "initial learning rate")->check(CLI::PositiveNumber);
  train->add_option("--out", ta.out, "output checkpoint (default: paths.checkpoint)");
  train->add_option("--init", ta.init, "warm-start checkpoint");

  auto add_report_options = [](CLI::App* cmd, ReportArgs& r) {
    cmd->add_option("--baseline", r.baseline, "baseline model label");
    cmd->add_option("--format", r.format, "md, csv or json")
        ->check(CLI::IsMember({"md", "markdown", "csv", "json"}));
  };

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "evaluate on MCQ datasets and write a comparison report");
  eval->add_option("--data", ea.data, "dataset JSONL files; the file stem names the dataset");
  eval->add_option("--from-results", ea.report.from_results, "previous results JSON to include");
  add_responder_options(eval, ea.responder);
  add_report_options(eval, ea.report);

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "re-emit a comparison report from results JSON");
  report->add_option("--results,--from-results", ra.from_results, "results JSON files")->required();
  add_report_options(report, ra);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "write a synthetic cue-word MCQ task");
  synth->add_option("--out", sa.out, "items JSONL")->required();
  synth->add_option("--n", sa.task.n_items, "number of items")->check(CLI::PositiveNumber);
  synth->add_option("--options", sa.task.num_options, "options per item")
      ->check(CLI::Range(static_cast<std::size_t>(kMinOptions), static_cast<std::size_t>(kMaxOptions)));
  synth->add_option("--task-seed", sa.task.seed, "task generator seed");
  synth->add_option("--prefix", sa.task.id_prefix, "item id prefix");
  synth->add_option("--oracle-out", sa.oracle_out, "also write the oracle policy checkpoint");

  std::string conv_in, conv_out;
  auto* convert = app.add_subcommand("convert", "convert question/choices/answer JSONL to MCQ items");
  convert->add_option("--in", conv_in, "input JSONL")->required();
  convert->add_option("--out", conv_out, "output items JSONL")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    return 0;
  } catch (const CLI::ParseError& e) {
    return report_error(std::string(to_string(ErrorKind::InvalidInput)), e.what(),
                        exit_code(ErrorKind::InvalidInput));
  }

  try {
    if (*filter) cmd_filter(g, fa);
    if (*train) cmd_train(g, ta);
    if (*eval) cmd_eval(g, ea);
    if (*report) cmd_report(g, ra);
    if (*synth) cmd_synth(g, sa);
    if (*convert) cmd_convert(conv_in, conv_out);
  } catch (const Error& e) {
    return report_error(std::string(to_string(e.kind())), e.what(), exit_code(e.kind()));
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
  return 0;
}
