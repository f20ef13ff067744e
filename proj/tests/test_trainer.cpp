#include <doctest.h>

#include <omp.h>

#include "rlvr/error.hpp"
#include "rlvr/synthetic.hpp"
#include "rlvr/trainer.hpp"

using namespace rlvr;

namespace {

GRPOConfig synthetic_config(std::size_t steps) {
  GRPOConfig c;
  c.total_steps = steps;
  c.lr_initial = 10.0;
  c.seed = 7;
  return c;
}

std::vector<MCQItem> task(std::size_t n = 50) {
  synthetic::TaskOptions o;
  o.n_items = n;
  return synthetic::make_task(o);
}

}  // namespace

TEST_CASE("synthetic task shape") {
  const auto items = task();
  CHECK(items.size() == 50);
  for (const auto& it : items) {
    CHECK(it.option_count() == 4);
    CHECK_NOTHROW(validate(it));
  }
  CHECK(synthetic::make_task({}) == task());
  const auto cues = synthetic::cue_words(4, 64);
  CHECK(cues.size() == 4);
}

TEST_CASE("oracle weights answer every synthetic item") {
  synthetic::TaskOptions o;
  o.n_items = 200;
  o.num_options = 5;
  const auto items = synthetic::make_task(o);
  const auto w = synthetic::oracle_weights(5, 64);
  for (const auto& it : items) {
    const auto a = CompositeAction::from_id(greedy_action(w, featurize(it), 30));
    CHECK(a.format_variant == FormatVariant::WellFormed);
    CHECK(a.answer_index == it.gold_index());
  }
}

TEST_CASE("collected groups satisfy the snapshot contract") {
  Trainer t(task(), Matrix(64, 24), synthetic_config(10), RewardWeights{});
  const auto groups = t.collect(0);
  CHECK(groups.size() == 12);
  CHECK_NOTHROW(check_groups_against_policy(groups, t.params(), t.config()));
  for (const auto& g : groups) {
    CHECK(g.size() == 3);
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(g.rewards[i].format == total_reward(g.rendered[i], "A", RewardWeights{}).format);
    }
  }
}

TEST_CASE("expected reward of the uniform policy") {
  Trainer t(task(), Matrix(64, 24), synthetic_config(10), RewardWeights{});
  // mean over the 24 actions of the hand-built reward table: (4.5 + 4 * 0.25) / 6
  CHECK(t.expected_reward() == doctest::Approx(5.5 / 6.0).epsilon(1e-12));
}

TEST_CASE("training raises expected reward and is reproducible") {
  Trainer a(task(), Matrix(64, 24), synthetic_config(500), RewardWeights{});
  Trainer b(task(), Matrix(64, 24), synthetic_config(500), RewardWeights{});
  std::size_t logged = 0;
  const auto s = run_training(a, [&](std::size_t, const StepDiagnostics& d) {
    ++logged;
    CHECK(d.clip_fraction == 0.0);
  });
  run_training(b);
  CHECK(logged == 500);
  CHECK(s.initial_expected_reward < 0.45 * s.max_total_reward);
  CHECK(s.final_expected_reward > 0.90 * s.max_total_reward);
  CHECK(s.final_mean_reward > 0.90 * s.max_total_reward);
  CHECK(a.params().weights == b.params().weights);
}

TEST_CASE("training result does not depend on the OpenMP thread count") {
  omp_set_num_threads(1);
  Trainer a(task(), Matrix(64, 24), synthetic_config(40), RewardWeights{});
  run_training(a);
  omp_set_num_threads(4);
  Trainer b(task(), Matrix(64, 24), synthetic_config(40), RewardWeights{});
  run_training(b);
  omp_set_num_threads(omp_get_num_procs());
  CHECK(a.params().weights == b.params().weights);
}

TEST_CASE("trainer rejects bad inputs") {
  CHECK_THROWS_AS(Trainer({}, Matrix(64, 24), synthetic_config(5), RewardWeights{}), Error);
  // 4-option items need at least 24 actions
  CHECK_THROWS_AS(Trainer(task(5), Matrix(64, 12), synthetic_config(5), RewardWeights{}), Error);
  auto dup = task(3);
  dup[1].id = dup[0].id;
  CHECK_THROWS_AS(Trainer(dup, Matrix(64, 24), synthetic_config(5), RewardWeights{}), Error);
}
