#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "caresim/scenario.hpp"
#include "caresim/status.hpp"

namespace caresim {

/// Weights of the immediate reward. Defaults are the shipped calibration.
struct RewardWeights {
  double forget = -1;
  double confuse = -1;
  double anger = -5;
  double disengaged = -1;
  double increased_trial = -1;
  double subtask_complete = 50;
  double subtask_skip = -10;
  double increased_timestep = -1;
  double task_complete = 20;
  /// Charged together with subtask_complete, indexed by the completing action.
  std::array<double, kNumActions> assist = {0, -1, -3, -5};

  double assist_weight(AssistAction a) const { return assist[action_index(a)]; }

  friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

/// Immediate reward of one step. Status penalties are taken from `next_state`;
/// the assistance cost is only charged when the step completes a subtask.
double compute_reward(const StatusVector& next_state, const StepEvents& events,
                      const RewardWeights& weights);

/// JSON keys: forget, confuse, anger, disengaged, increased_trial,
/// subtask_complete, subtask_skip, increased_timestep, task_complete,
/// assist {a0..a3}. Omitted keys keep their defaults; unknown keys throw.
RewardWeights reward_weights_from_json(const std::string& text);
RewardWeights load_reward_weights(const std::filesystem::path& path);
std::string reward_weights_to_json(const RewardWeights& w);

}  // namespace caresim
