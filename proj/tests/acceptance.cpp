// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <omp.h>

#include "mock_server.hpp"
#include "oracles.hpp"
#include "rlvr/data_filter.hpp"
#include "rlvr/error.hpp"
#include "rlvr/eval.hpp"
#include "rlvr/grpo.hpp"
#include "rlvr/io.hpp"
#include "rlvr/model_client.hpp"
#include "rlvr/rewards.hpp"
#include "rlvr/synthetic.hpp"
#include "rlvr/trainer.hpp"
#include "test_support.hpp"

using namespace rlvr;
using testing_support::InstanceShape;
using testing_support::random_instance;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int checked = 0;
  for (std::uint64_t seed = 1000; checked < 25; ++seed) {
    auto ri = random_instance(seed, InstanceShape{.feature_dim = 3, .actions = 4, .groups = 3,
                                                  .drift = 0.5});
    if (testing_support::distance_to_kink(ri) < 1e-4) continue;
    const auto analytic = surrogate_gradient(ri.inst.groups, ri.params, ri.config);
    const auto fd = oracle::finite_difference_gradient(ri.inst, ri.config.clip_epsilon, false,
                                                       ri.config.norm_floor, 1e-6);
    worst = std::max(worst, oracle::max_relative_error(analytic, fd));
    ++checked;
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-5 && secs < 5.0,
          std::to_string(checked) + " instances, max rel err " + fmt("%.2e", worst) + ", " +
              fmt("%.3f", secs) + " s"};
}

Outcome advantage_invariants() {
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  double worst_sum = 0.0;
  int inexact = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t g = 2 + rng() % 15;
    std::vector<double> r(g);
    double scale = 1.0;
    for (double& v : r) {
      v = u(rng);
      scale = std::max(scale, std::abs(v));
    }
    double s = 0.0;
    for (double a : compute_advantages(r, false, 1e-8).values) s += a;
    worst_sum = std::max(worst_sum, std::abs(s) / scale);

    std::vector<double> lattice(g);
    for (double& v : lattice) v = 0.25 * static_cast<double>(rng() % 13);
    const double c = 0.25 * (static_cast<double>(rng() % 65) - 32.0);
    auto shifted = lattice;
    for (double& v : shifted) v += c;
    if (compute_advantages(shifted, false, 1e-8).values !=
        compute_advantages(lattice, false, 1e-8).values) {
      ++inexact;
    }
  }
  return {worst_sum <= 1e-12 && inexact == 0,
          "1000 groups, max |sum|/scale " + fmt("%.2e", worst_sum) + ", shift mismatches " +
              std::to_string(inexact)};
}

Outcome clipping_oracle() {
  double worst = 0.0;
  std::size_t clipped = 0, pairs = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto ri = random_instance(seed + 5000, InstanceShape{.feature_dim = 3, .actions = 4,
                                                         .groups = 3, .group_size = 4,
                                                         .drift = 0.8});
    const auto res = surrogate_objective(ri.inst.groups, ri.params, ri.config);
    const double expected = oracle::surrogate(ri.inst, ri.config.clip_epsilon, false,
                                              ri.config.norm_floor);
    worst = std::max(worst, std::abs(res.objective - expected));
    clipped += static_cast<std::size_t>(std::lround(res.diagnostics.clip_fraction * 12.0));
    pairs += 12;
  }
  return {worst <= 1e-10, "100 instances, max abs diff " + fmt("%.2e", worst) + ", " +
                              std::to_string(clipped) + "/" + std::to_string(pairs) +
                              " pairs clipped"};
}

Outcome ratio_one() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto ri = random_instance(seed + 9000, InstanceShape{.feature_dim = 3, .actions = 4,
                                                         .groups = 6});
    ri.params.weights = *ri.params.snapshot;
    auto cfg = ri.config;
    cfg.lr_initial = 0.1;
    cfg.total_steps = 10;
    const auto before = ri.params.weights;
    const auto expected = oracle::reinforce_gradient(oracle::to_weights(before), ri.inst.groups);
    const auto diag = grpo_step(ri.inst.groups, ri.params, cfg, 0);
    Matrix direction = ri.params.weights;
    for (std::size_t i = 0; i < direction.size(); ++i) {
      direction.flat()[i] = (ri.params.weights.flat()[i] - before.flat()[i]) / diag.lr_used;
    }
    worst = std::max(worst, oracle::max_abs_diff(direction, expected));
  }
  return {worst <= 1e-10, "20 instances, max abs diff " + fmt("%.2e", worst)};
}

Outcome learning_curve() {
  synthetic::TaskOptions task;
  task.n_items = 50;
  task.num_options = 4;
  task.seed = 7;
  GRPOConfig cfg;
  cfg.total_steps = 500;
  cfg.lr_initial = 10.0;
  cfg.seed = 7;
  const auto items = synthetic::make_task(task);
  const Matrix init(task.feature_dim, action_count_for(task.num_options));

  omp_set_num_threads(1);
  Trainer a(items, init, cfg, {});
  const auto sa = run_training(a);
  Trainer b(items, init, cfg, {});
  run_training(b);
  omp_set_num_threads(omp_get_num_procs());

  const double max_total = sa.max_total_reward;
  const double start = sa.initial_expected_reward / max_total;
  const double end_rollout = sa.final_mean_reward / max_total;
  const double end_expected = sa.final_expected_reward / max_total;
  const bool reproducible = a.params().weights == b.params().weights;
  return {start < 0.45 && end_rollout > 0.90 && end_expected > 0.90 &&
              sa.wall_time_seconds < 60.0 && reproducible,
          "start " + fmt("%.3f", start) + "·max, end " + fmt("%.3f", end_rollout) +
              "·max (expected " + fmt("%.3f", end_expected) + "), " +
              fmt("%.2f", sa.wall_time_seconds) + " s, reproducible " +
              (reproducible ? "yes" : "no")};
}

Outcome filtering_fidelity() {
  std::ifstream in(testing_support::data_dir() / "filter_fixture.jsonl");
  int rows = 0, fixture_mismatch = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const auto v = classify(item_from_json(j.at("item")), j.at("response").get<std::string>());
    fixture_mismatch += to_string(v.label) != j.at("expected").get<std::string>();
    ++rows;
  }

  const std::vector<std::string> parts = {"<think>", "</think>", "<answer>", "</answer>", "A",
                                          "B",       " ",        "\n",       "x",        "b"};
  MCQItem item;
  item.id = "fz";
  item.question = "q";
  item.options = {{'A', "a"}, {'B', "b"}, {'C', "c"}, {'D', "d"}};
  item.gold = 'B';
  std::mt19937_64 rng(99);
  int fuzz_mismatch = 0;
  for (int c = 0; c < 1000; ++c) {
    std::string r;
    const int n = 1 + static_cast<int>(rng() % 9);
    for (int k = 0; k < n; ++k) r += parts[rng() % parts.size()];
    if (c % 4 == 0) r = std::string("<think>t</think><answer>") + "AB"[rng() % 2] + "</answer>";
    const auto rb = total_reward(r, "B", RewardWeights{});
    const bool easy = classify(item, r).label == Difficulty::Easy;
    fuzz_mismatch += easy != (rb.format == 1.0 && rb.accuracy == 1.0);
  }

  std::vector<MCQItem> pool;
  std::vector<FilterVerdict> verdicts;
  for (std::size_t i = 0; i < 900; ++i) {
    MCQItem it = item;
    it.id = "p" + std::to_string(i);
    pool.push_back(it);
    FilterVerdict v;
    v.item_id = it.id;
    v.label = i < 600 ? Difficulty::Hard : Difficulty::Easy;
    verdicts.push_back(v);
  }
  const auto picked = select_training_set(verdicts, pool, SelectionSpec{});
  std::size_t hard = 0;
  for (const auto& it : picked) hard += std::stoul(it.id.substr(1)) < 600;
  const std::size_t easy = picked.size() - hard;

  return {rows == 20 && fixture_mismatch == 0 && fuzz_mismatch == 0 && hard == 400 && easy == 100,
          "fixture " + std::to_string(rows - fixture_mismatch) + "/" + std::to_string(rows) +
              ", fuzz mismatches " + std::to_string(fuzz_mismatch) + "/1000, selected " +
              std::to_string(hard) + " hard + " + std::to_string(easy) + " easy"};
}

Outcome reward_table() {
  struct Row {
    FormatVariant variant;
    bool correct;
    RewardBreakdown expected;
  };
  const Row table[] = {
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
  MCQItem item;
  item.id = "rt";
  item.question = "which?";
  item.options = {{'A', "a"}, {'B', "b"}, {'C', "c"}, {'D', "d"}};
  item.gold = 'C';
  int ok = 0;
  for (const auto& row : table) {
    const auto text = render_response({row.correct ? 2u : 0u, row.variant}, item);
    ok += total_reward(text, "C", RewardWeights{}) == row.expected;
  }
  return {ok == 12, std::to_string(ok) + "/12 cases exact"};
}

Outcome client_contract() {
  using testing_support::MockChatServer;
  auto config_for = [](const MockChatServer& s, std::size_t parallel) {
    EndpointConfig c;
    c.base_url = s.base_url();
    c.model_name = "m";
    c.max_retries = 3;
    c.backoff_base = 0.001;
    c.timeout = 5.0;
    c.max_parallel = parallel;
    return c;
  };
  std::ostringstream detail;
  bool pass = true;

  {
    MockChatServer server({200});
    auto cache = std::make_shared<ResponseCache>(testing_support::scratch_dir("acc-cache"));
    cache->put({cache_key("m", "p", 0.0), "hit", CacheStatus::Ok, ""});
    ModelClient client(config_for(server, 2), cache);
    const bool ok = client.complete("p") == "hit" && server.hits() == 0;
    pass &= ok;
    detail << "cache hit http=" << server.hits();
  }
  {
    MockChatServer server({500, 500, 200});
    ModelClient client(config_for(server, 2));
    const bool ok = client.complete("p") == "reply:p" && server.hits() == 3;
    pass &= ok;
    detail << ", 500-500-200 attempts=" << server.hits();
  }
  {
    MockChatServer server({500});
    ModelClient client(config_for(server, 2));
    int attempts = -1;
    try {
      client.complete("p");
    } catch (const EndpointError& e) {
      attempts = e.attempts();
    }
    pass &= attempts == 4 && server.hits() == 4;
    detail << ", always-500 attempts=" << attempts;
  }
  {
    MockChatServer server({200}, std::chrono::milliseconds(30));
    ModelClient client(config_for(server, 3));
    {
      std::vector<std::jthread> callers;
      for (int i = 0; i < 12; ++i) {
        callers.emplace_back([&client, i] { client.complete("q" + std::to_string(i)); });
      }
    }
    pass &= server.max_in_flight() <= 3 && server.hits() == 12;
    detail << ", max in-flight " << server.max_in_flight() << "/3";
  }
  return {pass, detail.str()};
}

Outcome report_golden() {
  const auto results = eval_results_from_json(
      nlohmann::json::parse(read_text_file(testing_support::data_dir() / "benchmark_results.json")));
  const auto table = build_comparison(results, "Gemma-3-12b-it");
  const auto md = emit_report(table, results, ReportFormat::Markdown);
  const auto golden = read_text_file(testing_support::data_dir() / "benchmark_report.md");
  const bool delta = md.find("| GRPO(Gemma-3-12b) | +0.0055 |") != std::string::npos;
  return {md == golden && delta && table.rows.size() == 5 && table.columns.size() == 4,
          std::string("byte-exact ") + (md == golden ? "yes" : "no") + ", +0.0055 MMLU delta " +
              (delta ? "present" : "missing")};
}

Outcome scheduler() {
  GRPOConfig c;
  c.total_steps = 1000;
  c.lr_initial = 2e-5;
  c.lr_min = 1e-6;
  const double mid = c.lr_min + 0.5 * (c.lr_initial - c.lr_min);
  const double err = std::max({std::abs(cosine_lr(0, c) - c.lr_initial),
                               std::abs(cosine_lr(1000, c) - c.lr_min),
                               std::abs(cosine_lr(500, c) - mid)});
  c.total_steps = 10000;
  std::size_t violations = 0;
  double prev = cosine_lr(0, c);
  for (std::size_t s = 1; s <= c.total_steps; ++s) {
    const double lr = cosine_lr(s, c);
    violations += lr > prev;
    prev = lr;
  }
  return {err <= 1e-15 && violations == 0,
          "closed-form err " + fmt("%.1e", err) + ", increases over 10000 steps " +
              std::to_string(violations)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_check},
      {"advantage invariants", advantage_invariants},
      {"clipping oracle", clipping_oracle},
      {"ratio-one reduction", ratio_one},
      {"learning curve", learning_curve},
      {"filtering fidelity", filtering_fidelity},
      {"reward table", reward_table},
      {"client contract", client_contract},
      {"report golden", report_golden},
      {"scheduler", scheduler},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s  %-22s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
