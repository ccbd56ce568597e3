#include "caresim/scenario.hpp"

#include "caresim/error.hpp"
#include "json_util.hpp"

namespace caresim {

using nlohmann::json;

int ScenarioSpec::total_subtasks() const {
  int n = 0;
  for (const auto& t : tasks) n += static_cast<int>(t.subtasks.size());
  return n;
}

void ScenarioSpec::validate() const {
  if (max_trial < 1) throw ConfigError("scenario: max_trial must be >= 1");
  if (tasks.empty()) throw ConfigError("scenario: at least one task is required");
  for (const auto& t : tasks) {
    if (t.subtasks.empty()) throw ConfigError("scenario: task '" + t.name + "' has no subtasks");
  }
}

ScenarioSpec default_shopping_scenario() {
  ScenarioSpec spec;
  spec.name = "shopping";
  spec.max_trial = 5;
  spec.tasks = {
      {"Select 3 items on the shopping list correctly",
       {"Identify item one", "Pick up item one and gather it in the basket", "Identify item two",
        "Pick up item two and gather it in the basket", "Identify item three",
        "Pick up item three and gather it in the basket"}},
      {"Select the correct cash for the 3 grocery items",
       {"Work out the total price", "Pick out the matching cash"}},
  };
  return spec;
}

ScenarioSpec scenario_from_json(const std::string& text) {
  const json root = detail::parse_json(text, "scenario");
  detail::require_object(root, "scenario");
  detail::reject_unknown_keys(root, {"name", "max_trial", "tasks"}, "scenario");

  ScenarioSpec spec;
  if (root.contains("name")) spec.name = detail::get_string(root["name"], "scenario.name");
  if (root.contains("max_trial")) {
    const auto& mt = root["max_trial"];
    if (!mt.is_number_integer()) throw ConfigError("scenario.max_trial: expected an integer");
    spec.max_trial = mt.get<int>();
  }
  if (!root.contains("tasks") || !root["tasks"].is_array()) {
    throw ConfigError("scenario.tasks: expected an array");
  }
  for (std::size_t i = 0; i < root["tasks"].size(); ++i) {
    const auto& tj = root["tasks"][i];
    const std::string where = "scenario.tasks[" + std::to_string(i) + "]";
    detail::require_object(tj, where);
    detail::reject_unknown_keys(tj, {"name", "subtasks"}, where);
    TaskSpec task;
    if (tj.contains("name")) task.name = detail::get_string(tj["name"], where + ".name");
    if (!tj.contains("subtasks") || !tj["subtasks"].is_array()) {
      throw ConfigError(where + ".subtasks: expected an array");
    }
    for (const auto& sj : tj["subtasks"]) task.subtasks.push_back(detail::get_string(sj, where + ".subtasks"));
    spec.tasks.push_back(std::move(task));
  }
  spec.validate();
  return spec;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(detail::read_file(path));
}

std::string scenario_to_json(const ScenarioSpec& spec) {
  json root;
  root["name"] = spec.name;
  root["max_trial"] = spec.max_trial;
  root["tasks"] = json::array();
  for (const auto& t : spec.tasks) root["tasks"].push_back({{"name", t.name}, {"subtasks", t.subtasks}});
  return root.dump(2) + "\n";
}

AdvanceResult advance(const ProgressState& progress, const StatusVector& post_state,
                      AssistAction action, int max_trial, const ScenarioSpec& scenario) {
  if (progress.terminal) throw UsageError("advance called on a finished episode");
  if (max_trial < 1) throw UsageError("max_trial must be >= 1");

  AdvanceResult out{progress, {}};
  ProgressState& p = out.progress;
  StepEvents& ev = out.events;
  ev.action_taken = action;
  ev.delta_trial = 1;
  ev.delta_timestep = 1;
  p.trial_count += 1;
  p.timestep_count += 1;
  p.subtask_started = true;

  if (post_state.all_clear()) {
    ev.subtask_completed = true;
  } else if (p.trial_count >= max_trial) {
    ev.subtask_skipped = true;
    p.skipped_subtasks.emplace(p.task_index, p.subtask_index);
  } else {
    return out;
  }

  p.trial_count = 0;
  p.subtask_started = false;
  p.subtask_index += 1;
  const auto& task = scenario.tasks.at(static_cast<std::size_t>(p.task_index));
  if (p.subtask_index >= static_cast<int>(task.subtasks.size())) {
    ev.task_completed = true;
    p.subtask_index = 0;
    p.task_index += 1;
    if (p.task_index >= static_cast<int>(scenario.tasks.size())) p.terminal = true;
  }
  return out;
}

bool is_terminal(const ProgressState& progress) { return progress.terminal; }

}  // namespace caresim
