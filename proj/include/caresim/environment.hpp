#pragma once

#include "caresim/plwd_model.hpp"
#include "caresim/reward.hpp"
#include "caresim/rng.hpp"
#include "caresim/scenario.hpp"

namespace caresim {

/// Everything that defines the simulated task environment.
struct EnvConfig {
  ScenarioSpec scenario = default_shopping_scenario();
  TransitionModel model = TransitionModel::defaults();
  RewardWeights weights;
  /// When set, the caregiver acts on a noisy copy of the true state.
  bool use_perceived = false;
  double perception_noise = 0.0;

  void validate() const;
};

/// Flips each bit independently with probability `noise`. Four draws.
StatusVector apply_perception_noise(const StatusVector& s, double noise, Rng& rng);

struct StepResult {
  StatusVector post_transition;  // state after the assistance step, before any skip
  StatusVector next_state;       // state the next step starts from
  StepEvents events;
  double reward = 0.0;
  bool terminal = false;
};

/// Episodic caregiving environment. Each step applies the assistance-driven
/// transition (4 draws), advances the scenario on the post-transition state,
/// scores it, and on a forced skip applies the skip transition (4 more draws)
/// to obtain the successor.
class CaregivingEnv {
 public:
  explicit CaregivingEnv(EnvConfig config);

  void reset();
  StepResult step(AssistAction action, Rng& rng);

  /// State as seen by the caregiver: the true state, or a noisy copy of it
  /// when perception noise is enabled (4 draws in that case, none otherwise).
  StatusVector observe(const StatusVector& s, Rng& rng) const;

  const StatusVector& state() const { return state_; }
  const ProgressState& progress() const { return progress_; }
  bool done() const { return progress_.terminal; }
  const EnvConfig& config() const { return config_; }

 private:
  EnvConfig config_;
  StatusVector state_;
  ProgressState progress_;
};

}  // namespace caresim
