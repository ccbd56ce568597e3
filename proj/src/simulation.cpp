#include "caresim/simulation.hpp"

#include "caresim/error.hpp"
#include "text_util.hpp"

namespace caresim {

namespace {

void sync_context(InteractionContext& ctx, const ScenarioSpec& scenario, const ProgressState& progress) {
  if (progress.terminal) return;
  const auto& task = scenario.tasks.at(static_cast<std::size_t>(progress.task_index));
  ctx.task_name = task.name;
  ctx.subtask_name = task.subtasks.at(static_cast<std::size_t>(progress.subtask_index));
}

}  // namespace

SimulationResult run_interaction(const Policy& policy, const EnvConfig& env_config, TextBackend& backend,
                                 const SimulationOptions& options, Rng& rng, std::ostream& out) {
  if (!(options.perception_noise >= 0.0 && options.perception_noise <= 1.0)) {
    throw ConfigError("perception noise must be in [0, 1]");
  }
  EnvConfig cfg = env_config;
  cfg.use_perceived = false;  // perception goes through the text backend here
  CaregivingEnv env(cfg);
  InteractionContext ctx(options.history_cap);
  ctx.scenario_name = cfg.scenario.name;

  out << "# caresim transcript\n";
  out << "Scenario: " << cfg.scenario.name << "\n";
  out << "Backend: " << backend.name() << "\n";
  out << "PromptVariant: " << options.variant.name() << "\n";
  out << "Policy: " << policy.id() << "\n";
  out << "DecisionInput: " << (options.use_perceived ? "perceived" : "true") << "\n";
  out << "PerceptionNoise: " << detail::format_double(options.perception_noise) << "\n";

  SimulationResult result;
  while (!env.done()) {
    const ProgressState before = env.progress();
    sync_context(ctx, cfg.scenario, before);
    const StatusVector truth = env.state();

    const BehaviorText behavior = backend.narrate(truth, ctx);
    ctx.record(Speaker::kPerson, behavior.combined());
    const PerceivedState perceived = backend.perceive(behavior, ctx, options.perception_noise, rng);
    if (!(perceived.state == truth)) result.misperceived_steps += 1;

    const StatusVector decision_input = options.use_perceived ? perceived.state : truth;
    const AssistAction action = policy(decision_input);
    const std::optional<StatusVector> state_for_prompt =
        options.variant.include_state ? std::optional<StatusVector>(decision_input) : std::nullopt;
    const std::string utterance = backend.render_assist(action, ctx, options.variant, state_for_prompt);
    ctx.record(Speaker::kCaregiver, utterance);

    const StepResult step = env.step(action, rng);
    result.total_return += step.reward;
    result.steps += 1;

    out << "=== Timestep " << result.steps << " ===\n";
    out << "TrueState: " << truth.to_string() << "\n";
    out << "PLWD: " << behavior.nonverbal << " | " << behavior.verbal << "\n";
    out << "Perceived: " << perceived.state.to_string() << "\n";
    out << "Action: " << action_code(action) << " " << action_label(action) << "\n";
    out << "Robot: " << utterance << "\n";
    out << "Reward: " << detail::format_double(step.reward) << "\n";
    out << "Progress: task " << before.task_index + 1 << " subtask " << before.subtask_index + 1 << " trial "
        << before.trial_count + 1 << "\n";
  }
  out << "=== End ===\n";
  out << "Return: " << detail::format_double(result.total_return) << "\n";
  out << "Timesteps: " << result.steps << "\n";
  return result;
}

}  // namespace caresim
