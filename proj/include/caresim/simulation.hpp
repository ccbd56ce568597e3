#pragma once

#include <ostream>

#include "caresim/behavior_text.hpp"
#include "caresim/environment.hpp"
#include "caresim/qlearning.hpp"

namespace caresim {

struct SimulationOptions {
  /// Decide on the perceived state instead of the true one.
  bool use_perceived = false;
  double perception_noise = 0.0;
  PromptVariant variant;
  std::size_t history_cap = kDefaultHistoryCap;
};

struct SimulationResult {
  double total_return = 0.0;
  int steps = 0;
  int misperceived_steps = 0;
};

/// Runs one full perceive -> decide -> assist -> transition episode and
/// writes a line-oriented transcript. Per timestep:
///
///   === Timestep N ===
///   TrueState: [f,c,a,d]
///   PLWD: <nonverbal> | <verbal>
///   Perceived: [f,c,a,d]
///   Action: aK <label>
///   Robot: <utterance>
///   Reward: <value>
///   Progress: task I subtask J trial T
///
/// Progress names the subtask attempted in that timestep (1-based). The
/// `perception_noise` of `options` applies; the one in `env` is ignored.
SimulationResult run_interaction(const Policy& policy, const EnvConfig& env, TextBackend& backend,
                                 const SimulationOptions& options, Rng& rng, std::ostream& transcript);

}  // namespace caresim
