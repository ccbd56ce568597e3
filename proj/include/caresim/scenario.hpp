#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "caresim/status.hpp"

namespace caresim {

struct TaskSpec {
  std::string name;
  std::vector<std::string> subtasks;
  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

/// A scenario is an ordered list of tasks, each an ordered list of subtasks.
/// `max_trial` is the number of attempts allowed per subtask before the
/// environment forces a skip.
struct ScenarioSpec {
  std::string name;
  int max_trial = 5;
  std::vector<TaskSpec> tasks;

  int total_subtasks() const;
  /// Upper bound on episode length: max_trial x total_subtasks.
  int max_episode_length() const { return max_trial * total_subtasks(); }
  /// Throws ConfigError on an empty task list, an empty task or max_trial < 1.
  void validate() const;

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

/// The shipped two-task shopping scenario (6 + 2 subtasks, max_trial 5).
ScenarioSpec default_shopping_scenario();

/// Strict JSON loading: {"name", "max_trial", "tasks": [{"name", "subtasks": [...]}]}.
/// Unknown fields are rejected.
ScenarioSpec scenario_from_json(const std::string& text);
ScenarioSpec load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const ScenarioSpec& spec);

/// Live position of an episode within its scenario.
struct ProgressState {
  int task_index = 0;
  int subtask_index = 0;
  int trial_count = 0;     // trials spent on the current subtask
  int timestep_count = 0;  // trials spent in the whole episode
  bool subtask_started = false;
  std::set<std::pair<int, int>> skipped_subtasks;
  bool terminal = false;

  friend bool operator==(const ProgressState&, const ProgressState&) = default;
};

/// What happened during one interaction step; the inputs to the reward.
struct StepEvents {
  int delta_trial = 0;
  int delta_timestep = 0;
  bool subtask_completed = false;
  bool subtask_skipped = false;
  bool task_completed = false;
  AssistAction action_taken = AssistAction::kNoAssistance;

  friend bool operator==(const StepEvents&, const StepEvents&) = default;
};

struct AdvanceResult {
  ProgressState progress;
  StepEvents events;
};

/// Applies one trial whose outcome is `post_state`. A clear post-state
/// completes the subtask; otherwise, once the trial budget is spent, the
/// subtask is skipped. Either way the episode moves to the next subtask and
/// the task is marked complete when that subtask was the task's last.
/// Throws UsageError on terminal progress.
AdvanceResult advance(const ProgressState& progress, const StatusVector& post_state,
                      AssistAction action, int max_trial, const ScenarioSpec& scenario);

bool is_terminal(const ProgressState& progress);

}  // namespace caresim
