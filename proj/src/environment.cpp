#include "caresim/environment.hpp"

#include "caresim/error.hpp"

namespace caresim {

void EnvConfig::validate() const {
  scenario.validate();
  model.validate();
  if (!(perception_noise >= 0.0 && perception_noise <= 1.0)) {
    throw ConfigError("perception noise must be in [0, 1]");
  }
}

StatusVector apply_perception_noise(const StatusVector& s, double noise, Rng& rng) {
  StatusVector out = s;
  for (Status st : kAllStatuses) {
    if (rng.bernoulli(noise)) out.set(st, !s.get(st));
  }
  return out;
}

CaregivingEnv::CaregivingEnv(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
  reset();
}

void CaregivingEnv::reset() {
  state_ = kStartState;
  progress_ = ProgressState{};
}

StepResult CaregivingEnv::step(AssistAction action, Rng& rng) {
  if (progress_.terminal) throw UsageError("step called on a finished episode");
  StepResult out;
  out.post_transition = transition(config_.model, state_, action, rng);
  auto [progress, events] =
      advance(progress_, out.post_transition, action, config_.scenario.max_trial, config_.scenario);
  out.events = events;
  out.reward = compute_reward(out.post_transition, events, config_.weights);
  out.next_state =
      events.subtask_skipped ? step_skip(config_.model, out.post_transition, rng) : out.post_transition;
  out.terminal = progress.terminal;
  progress_ = std::move(progress);
  state_ = out.next_state;
  return out;
}

StatusVector CaregivingEnv::observe(const StatusVector& s, Rng& rng) const {
  if (!config_.use_perceived) return s;
  return apply_perception_noise(s, config_.perception_noise, rng);
}

}  // namespace caresim
