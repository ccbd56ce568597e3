#include "caresim/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

#include "caresim/error.hpp"
#include "json.hpp"

namespace caresim {

std::string actor_id(const Actor& actor) {
  if (const auto* p = std::get_if<Policy>(&actor)) return p->id();
  return "random";
}

EpisodeResult run_episode(const Actor& actor, const EnvConfig& env_config, Rng& rng) {
  CaregivingEnv env(env_config);
  EpisodeResult out;
  while (!env.done()) {
    const StatusVector seen = env.observe(env.state(), rng);
    AssistAction a;
    if (const auto* p = std::get_if<Policy>(&actor)) {
      a = (*p)(seen);
    } else {
      a = action_from_index(rng.uniform_int(kNumActions));
    }
    const StepResult step = env.step(a, rng);
    out.total_return += step.reward;
    out.steps += 1;
  }
  return out;
}

std::pair<double, double> mean_and_std(const std::vector<double>& returns) {
  if (returns.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double r : returns) sum += r;
  const double mean = sum / static_cast<double>(returns.size());
  double sq = 0.0;
  for (double r : returns) sq += (r - mean) * (r - mean);
  return {mean, std::sqrt(sq / static_cast<double>(returns.size()))};
}

EvaluationReport evaluate_policy(const Actor& actor, const EnvConfig& env, int n, std::uint64_t base_seed,
                                 int threads) {
  if (n < 1) throw UsageError("evaluate_policy needs at least one rollout");
  env.validate();
  EvaluationReport report;
  report.policy_id = actor_id(actor);
  report.num_rollouts = n;
  report.seed = base_seed;
  report.returns.assign(static_cast<std::size_t>(n), 0.0);

  auto run_range = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Rng rng(derive_seed(base_seed, static_cast<std::uint64_t>(i)));
      report.returns[static_cast<std::size_t>(i)] = run_episode(actor, env, rng).total_return;
    }
  };

  threads = std::clamp(threads, 1, n);
  if (threads == 1) {
    run_range(0, n);
  } else {
    std::vector<std::jthread> workers;
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int begin = t * chunk;
      const int end = std::min(n, begin + chunk);
      if (begin < end) workers.emplace_back(run_range, begin, end);
    }
  }
  std::tie(report.mean_return, report.std_return) = mean_and_std(report.returns);
  return report;
}

std::string EvaluationReport::to_json() const {
  nlohmann::json j;
  j["policy_id"] = policy_id;
  j["num_rollouts"] = num_rollouts;
  j["mean_return"] = mean_return;
  j["std_return"] = std_return;
  j["seed"] = seed;
  j["returns"] = returns;
  return j.dump(2) + "\n";
}

EvaluationReport EvaluationReport::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EvaluationReport r;
    r.policy_id = j.at("policy_id").get<std::string>();
    r.num_rollouts = j.at("num_rollouts").get<int>();
    r.mean_return = j.at("mean_return").get<double>();
    r.std_return = j.at("std_return").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.returns = j.at("returns").get<std::vector<double>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("evaluation report: ") + e.what());
  }
}

FinalSelection select_final_policy(const std::vector<Policy>& late_policies, const EnvConfig& env,
                                   int rollouts, std::uint64_t base_seed, int threads) {
  if (late_policies.empty()) throw UsageError("select_final_policy: no late-training policies recorded");

  std::map<std::string, int> counts;
  for (const auto& p : late_policies) counts[p.id()] += 1;
  std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > static_cast<std::size_t>(kFinalCandidateCount)) ranked.resize(kFinalCandidateCount);

  FinalSelection out;
  for (const auto& [id, freq] : ranked) {
    Policy p = Policy::from_id(id);
    out.candidates.push_back({p, freq, evaluate_policy(p, env, rollouts, base_seed, threads)});
  }
  const FinalCandidate* best = &out.candidates.front();
  for (const auto& c : out.candidates) {
    const bool better = c.report.mean_return > best->report.mean_return ||
                        (c.report.mean_return == best->report.mean_return && c.policy.id() < best->policy.id());
    if (better) best = &c;
  }
  out.best = best->policy;
  return out;
}

}  // namespace caresim
