#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "caresim/environment.hpp"
#include "caresim/qlearning.hpp"

namespace caresim {

/// Chooses uniformly among a0..a3 at every step (one draw per step).
struct RandomActor {};

using Actor = std::variant<Policy, RandomActor>;

std::string actor_id(const Actor& actor);

struct EpisodeResult {
  double total_return = 0.0;  // undiscounted
  int steps = 0;
};

/// Runs one episode from the start state to termination.
EpisodeResult run_episode(const Actor& actor, const EnvConfig& env, Rng& rng);

struct EvaluationReport {
  std::string policy_id;
  int num_rollouts = 0;
  double mean_return = 0.0;
  double std_return = 0.0;  // population standard deviation
  std::vector<double> returns;
  std::uint64_t seed = 0;

  std::string to_json() const;
  static EvaluationReport from_json(const std::string& text);
};

/// Mean and population standard deviation of `returns`.
std::pair<double, double> mean_and_std(const std::vector<double>& returns);

/// `n` rollouts; rollout i uses Rng(derive_seed(base_seed, i)), so the report
/// is identical for any `threads` value.
EvaluationReport evaluate_policy(const Actor& actor, const EnvConfig& env, int n, std::uint64_t base_seed,
                                 int threads = 1);

struct FinalCandidate {
  Policy policy;
  int frequency = 0;
  EvaluationReport report;
};

struct FinalSelection {
  Policy best;
  std::vector<FinalCandidate> candidates;  // in evaluation order
};

inline constexpr int kFinalCandidateCount = 5;

/// Ranks `late_policies` by frequency (ties: lower id first), evaluates the
/// top five with `rollouts` rollouts each under the same base seed, and
/// returns the highest mean (ties: lower id). Throws UsageError when empty.
FinalSelection select_final_policy(const std::vector<Policy>& late_policies, const EnvConfig& env,
                                   int rollouts, std::uint64_t base_seed, int threads = 1);

}  // namespace caresim
