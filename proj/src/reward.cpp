#include "caresim/reward.hpp"

#include "caresim/error.hpp"
#include "json_util.hpp"

namespace caresim {

using nlohmann::json;

double compute_reward(const StatusVector& next_state, const StepEvents& events,
                      const RewardWeights& w) {
  double r = 0.0;
  r += w.forget * next_state.forgetful();
  r += w.confuse * next_state.confused();
  r += w.anger * next_state.angry();
  r += w.disengaged * next_state.disengaged();
  r += w.increased_trial * events.delta_trial;
  if (events.subtask_completed) r += w.subtask_complete + w.assist_weight(events.action_taken);
  if (events.subtask_skipped) r += w.subtask_skip;
  r += w.increased_timestep * events.delta_timestep;
  if (events.task_completed) r += w.task_complete;
  return r;
}

namespace {

struct Field {
  const char* key;
  double RewardWeights::*member;
};

constexpr Field kFields[] = {
    {"forget", &RewardWeights::forget},
    {"confuse", &RewardWeights::confuse},
    {"anger", &RewardWeights::anger},
    {"disengaged", &RewardWeights::disengaged},
    {"increased_trial", &RewardWeights::increased_trial},
    {"subtask_complete", &RewardWeights::subtask_complete},
    {"subtask_skip", &RewardWeights::subtask_skip},
    {"increased_timestep", &RewardWeights::increased_timestep},
    {"task_complete", &RewardWeights::task_complete},
};

}  // namespace

RewardWeights reward_weights_from_json(const std::string& text) {
  const json root = detail::parse_json(text, "reward weights");
  detail::require_object(root, "reward weights");
  RewardWeights w;
  for (const auto& [key, value] : root.items()) {
    if (key == "assist") {
      detail::require_object(value, "assist");
      for (const auto& [akey, avalue] : value.items()) {
        auto a = parse_action(akey);
        if (!a) throw ConfigError("reward weights.assist: unknown action '" + akey + "'");
        w.assist[action_index(*a)] = detail::get_number(avalue, "assist." + akey);
      }
      continue;
    }
    bool found = false;
    for (const auto& f : kFields) {
      if (key == f.key) {
        w.*(f.member) = detail::get_number(value, key);
        found = true;
      }
    }
    if (!found) throw ConfigError("reward weights: unknown field '" + key + "'");
  }
  return w;
}

RewardWeights load_reward_weights(const std::filesystem::path& path) {
  return reward_weights_from_json(detail::read_file(path));
}

std::string reward_weights_to_json(const RewardWeights& w) {
  json root;
  for (const auto& f : kFields) root[f.key] = w.*(f.member);
  json assist = json::object();
  for (AssistAction a : kAllActions) assist[std::string(action_code(a))] = w.assist_weight(a);
  root["assist"] = assist;
  return root.dump(2) + "\n";
}

}  // namespace caresim
