#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "caresim/error.hpp"
#include "caresim/evaluation.hpp"
#include "caresim/training.hpp"

using namespace caresim;

namespace {

const StatusVector kS0{};

TrainingConfig small_config(std::uint64_t seed, EpsilonSchedule schedule = EpsilonSchedule::constant(0.1)) {
  TrainingConfig c;
  c.seed = seed;
  c.epochs = 60;
  c.schedule = schedule;
  return c;
}

// Nothing ever goes wrong, so the action only changes the assistance cost.
EnvConfig calm_env() {
  EnvConfig env;
  env.model.base_onset.fill(0.0);
  return env;
}

}  // namespace

TEST_CASE("environment step mirrors the model, scenario and reward") {
  EnvConfig cfg;
  cfg.scenario.max_trial = 2;
  CaregivingEnv env(cfg);
  Rng a(77), b(77);
  StatusVector s = env.state();
  ProgressState p = env.progress();
  bool saw_skip = false;
  int steps = 0;
  while (!env.done()) {
    const auto act = action_from_index(steps % 4);
    const auto r = env.step(act, a);
    const auto post = transition(cfg.model, s, act, b);
    const auto adv = advance(p, post, act, cfg.scenario.max_trial, cfg.scenario);
    CHECK(r.post_transition == post);
    CHECK(r.events == adv.events);
    CHECK(r.reward == compute_reward(post, adv.events, cfg.weights));
    s = adv.events.subtask_skipped ? step_skip(cfg.model, post, b) : post;
    saw_skip |= adv.events.subtask_skipped;
    CHECK(r.next_state == s);
    CHECK(r.terminal == adv.progress.terminal);
    p = adv.progress;
    ++steps;
  }
  CHECK(saw_skip);
  CHECK_THROWS_AS(env.step(AssistAction::kNoAssistance, a), UsageError);
  env.reset();
  CHECK(env.state() == kS0);
  CHECK(env.progress() == ProgressState{});
}

TEST_CASE("perception noise") {
  Rng rng(1);
  for (int i = 0; i < kNumStates; ++i) {
    const auto s = StatusVector::from_index(i);
    CHECK(apply_perception_noise(s, 0.0, rng) == s);
    CHECK(apply_perception_noise(s, 1.0, rng).index() == 15 - i);
  }
  EnvConfig bad;
  bad.perception_noise = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("epsilon schedules") {
  const auto d = EpsilonSchedule::default_decay();
  CHECK(d.at(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(d.at(300) - 0.8) < 1e-9);
  CHECK(d.at(10000) == doctest::Approx(0.03 + 0.97 * std::pow(0.77 / 0.97, 10000.0 / 300.0)).epsilon(1e-12));
  CHECK(std::abs(d.at(1000000) - 0.03) < 1e-12);
  const auto& v = std::get<DecayingEpsilon>(d.variant());
  CHECK(v.lambda == doctest::Approx(std::log(0.97 / 0.77) / 300.0));
  for (long long t = 1; t < 2000; t += 37) CHECK(d.at(t) < d.at(t - 1));
  CHECK(EpsilonSchedule::constant(0.1).at(5999) == 0.1);
  CHECK(epsilon_at(d, 300) == d.at(300));
  CHECK_THROWS(EpsilonSchedule::constant(1.5));
}

TEST_CASE("select_action") {
  QTable q;
  q.row(0) = {1, 2, 3, 0};
  Rng rng(8);
  for (int k = 0; k < 100; ++k) CHECK(select_action(q, kS0, 0.0, rng) == AssistAction::kVerbalNonDirective);

  const int n = 100000;
  std::array<int, 4> explore{}, ties{};
  QTable flat;
  for (int k = 0; k < n; ++k) {
    explore[action_index(select_action(q, kS0, 1.0, rng))]++;
    ties[action_index(select_action(flat, kS0, 0.0, rng))]++;
  }
  for (int a = 0; a < 4; ++a) {
    CHECK(std::abs(explore[a] / double(n) - 0.25) <= 0.01);
    CHECK(std::abs(ties[a] / double(n) - 0.25) <= 0.01);
  }

  // Two draws regardless of branch.
  Rng r1(4), r2(4);
  select_action(q, kS0, 0.5, r1);
  r2.next_u64();
  r2.next_u64();
  CHECK(r1.next_u64() == r2.next_u64());
}

TEST_CASE("q_update") {
  QTable q;
  const auto a = AssistAction::kVerbalSupportive;
  q_update(q, kS0, a, 10, kS0, false, 0.05, 0.95);
  CHECK(q.at(kS0, a) == doctest::Approx(0.5));

  QTable t;
  t.at(kS0, a) = 10;
  q_update(t, kS0, a, 0, kS0, true, 0.05, 0.95);
  CHECK(t.at(kS0, a) == doctest::Approx(9.5));

  QTable c;
  for (int k = 0; k < 2000; ++k) q_update(c, kS0, a, 7, kS0, true, 0.05, 0.95);
  CHECK(c.at(kS0, a) == doctest::Approx(7).epsilon(1e-6));

  // Bootstraps from the successor's best value when not terminal.
  QTable b;
  const StatusVector s1(0, 0, 0, 1);
  b.row(s1.index()) = {-4, 2, -1, 0};
  q_update(b, kS0, a, 1, s1, false, 0.5, 0.9);
  CHECK(b.at(kS0, a) == doctest::Approx(0.5 * (1 + 0.9 * 2)));
}

TEST_CASE("extract_policy") {
  QTable q;
  CHECK(extract_policy(q)(kS0) == AssistAction::kNoAssistance);
  q.row(0) = {-3, 5, 5, 1};
  CHECK(extract_policy(q)(kS0) == AssistAction::kVerbalSupportive);

  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    QTable r;
    for (int i = 0; i < kNumStates; ++i)
      for (auto& v : r.row(i)) v = rng.uniform() * 200 - 100;
    QTable scaled = r;
    const double c = 0.1 + rng.uniform() * 10, shift = rng.uniform() * 50;
    for (int i = 0; i < kNumStates; ++i)
      for (auto& v : scaled.row(i)) v = c * v + shift;
    CHECK(extract_policy(scaled) == extract_policy(r));
  }
}

TEST_CASE("q-table and policy text formats") {
  Rng rng(12);
  QTable q;
  for (int i = 0; i < kNumStates; ++i)
    for (auto& v : q.row(i)) v = rng.uniform() * 1000 - 500;
  CHECK(QTable::parse(q.serialize()) == q);
  CHECK(QTable::parse(q.serialize()).serialize() == q.serialize());

  const Policy p = extract_policy(q);
  CHECK(Policy::parse(p.serialize()) == p);
  CHECK(Policy::from_id(p.id()) == p);
  CHECK(p.id().size() == 16);
  CHECK(Policy::uniform(AssistAction::kVerbalDirective).id() == std::string(16, '3'));

  CHECK_THROWS_AS(QTable::parse("garbage"), FormatError);
  CHECK_THROWS_AS(QTable::parse(""), FormatError);
  CHECK_THROWS_AS(Policy::parse("# caresim policy v1\n0 [0,0,0,0] a9 Nope\n"), FormatError);
  CHECK_THROWS_AS(Policy::from_id("0123"), FormatError);
  CHECK_THROWS_AS(Policy::from_id("012301230123012x"), FormatError);
  CHECK_THROWS_AS(Policy::load("/nonexistent/policy.txt"), FormatError);

  std::string text = p.serialize();
  text.erase(text.rfind('\n', text.size() - 2) + 1);  // drop the last row
  CHECK_THROWS_AS(Policy::parse(text), FormatError);
}

TEST_CASE("evaluation") {
  const EnvConfig env;
  const Policy p = Policy::uniform(AssistAction::kVerbalSupportive);

  Rng r1(5), r2(5);
  const auto e1 = run_episode(p, env, r1);
  const auto e2 = run_episode(p, env, r2);
  CHECK(e1.total_return == e2.total_return);
  CHECK(e1.steps == e2.steps);

  const auto one = evaluate_policy(p, env, 1, 9);
  CHECK(one.mean_return == one.returns[0]);
  CHECK(one.std_return == 0.0);

  const auto serial = evaluate_policy(p, env, 400, 21, 1);
  const auto parallel = evaluate_policy(p, env, 400, 21, 4);
  CHECK(serial.returns == parallel.returns);
  CHECK(serial.mean_return == parallel.mean_return);

  const auto other = evaluate_policy(p, env, 400, 22, 1);
  CHECK(std::abs(other.mean_return - serial.mean_return) < 3 * serial.std_return / std::sqrt(400.0));

  const auto rep = EvaluationReport::from_json(serial.to_json());
  CHECK(rep.returns == serial.returns);
  CHECK(rep.policy_id == p.id());
  CHECK(actor_id(RandomActor{}) == "random");
  CHECK_THROWS(evaluate_policy(p, env, 0, 1));

  const auto [m, s] = mean_and_std({1, 3});
  CHECK(m == 2);
  CHECK(s == 1);
}

TEST_CASE("final policy selection") {
  const EnvConfig env;
  const Policy a = Policy::from_id("2111311131113111");
  const Policy b = Policy::uniform(AssistAction::kNoAssistance);
  const Policy c = Policy::uniform(AssistAction::kVerbalDirective);

  CHECK(select_final_policy({a}, env, 50, 1).best == a);
  CHECK_THROWS_AS(select_final_policy(std::vector<Policy>{}, env, 50, 1), UsageError);

  std::vector<Policy> late = {b, a, a, c, b, a, c, c, c};
  const auto sel = select_final_policy(late, env, 300, 3);
  const auto best_it = std::max_element(sel.candidates.begin(), sel.candidates.end(), [](auto& x, auto& y) {
    return x.report.mean_return < y.report.mean_return;
  });
  CHECK(sel.best == best_it->policy);
  for (const auto& cand : sel.candidates) CHECK(best_it->report.mean_return >= cand.report.mean_return);
  CHECK(sel.candidates.size() == 3);
  CHECK(sel.candidates[0].policy == c);  // most frequent first
  CHECK(sel.candidates[0].frequency == 4);

  std::vector<Policy> shuffled = late;
  std::reverse(shuffled.begin(), shuffled.end());
  const auto sel2 = select_final_policy(shuffled, env, 300, 3);
  CHECK(sel2.best == sel.best);
  CHECK(sel2.candidates.size() == sel.candidates.size());
  for (std::size_t i = 0; i < sel.candidates.size(); ++i) {
    CHECK(sel2.candidates[i].policy == sel.candidates[i].policy);
    CHECK(sel2.candidates[i].report.mean_return == sel.candidates[i].report.mean_return);
  }

  // Only the start state is ever visited, so these two tie exactly.
  const auto calm = calm_env();
  Policy hi = Policy::uniform(AssistAction::kNoAssistance);
  Policy lo = hi;
  hi.at(StatusVector::from_index(5)) = AssistAction::kVerbalDirective;
  const auto tie = select_final_policy({hi, lo, hi, lo}, calm, 20, 4);
  CHECK(tie.candidates[0].report.mean_return == tie.candidates[1].report.mean_return);
  CHECK(tie.best == lo);
  CHECK(lo.id() < hi.id());

  // At most five candidates.
  std::vector<Policy> many;
  for (int k = 0; k < 8; ++k) {
    Policy p = Policy::uniform(AssistAction::kVerbalSupportive);
    p.at(StatusVector::from_index(k + 1)) = AssistAction::kVerbalDirective;
    for (int r = 0; r <= k; ++r) many.push_back(p);
  }
  CHECK(select_final_policy(many, env, 10, 1).candidates.size() == kFinalCandidateCount);
}

TEST_CASE("training is reproducible and logs the protocol") {
  const auto a = train(small_config(42));
  const auto b = train(small_config(42));
  CHECK(a.q.serialize() == b.q.serialize());
  CHECK(a.log.to_csv() == b.log.to_csv());
  CHECK(a.log.snapshots.size() == 60);
  CHECK(a.log.late_policies.size() == 100);
  CHECK(a.log.late_policies.back().episode == 60 * 30 - 1);
  CHECK(a.log.strategy_label == "constant-epsilon");
  CHECK(train(small_config(43)).q.serialize() != a.q.serialize());

  for (int i = 0; i < kNumStates; ++i)
    for (double v : a.q.row(i)) CHECK(std::isfinite(v));

  const auto parsed = TrainingLog::from_csv(a.log.to_csv());
  CHECK(parsed.to_csv() == a.log.to_csv());
  CHECK(a.log.learning_curve_csv().rfind("epoch,strategy,mean_return\n", 0) == 0);

  const auto d = train(small_config(42, EpsilonSchedule::default_decay()));
  CHECK(d.log.strategy_label == "decaying-epsilon");
  CHECK(d.log.snapshots[0].epsilon == doctest::Approx(1.0));

  CHECK_THROWS_AS(TrainingLog::from_csv("nonsense\n"), FormatError);
  auto bad = small_config(1);
  bad.snapshot_episode = 31;
  CHECK_THROWS_AS(train(bad), ConfigError);
}

TEST_CASE("training with perceived states stays deterministic") {
  auto c = small_config(5);
  c.epochs = 20;
  c.env.use_perceived = true;
  c.env.perception_noise = 0.1;
  CHECK(train(c).q == train(c).q);
}
