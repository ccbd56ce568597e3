#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "caresim/caresim.hpp"

namespace py = pybind11;
using namespace caresim;

namespace {

StatusVector to_state(const py::object& o) {
  if (py::isinstance<StatusVector>(o)) return o.cast<StatusVector>();
  if (py::isinstance<py::int_>(o)) return StatusVector::from_index(o.cast<int>());
  const auto bits = o.cast<std::vector<int>>();
  if (bits.size() != 4) throw py::value_error("a status vector has four entries");
  return StatusVector(bits[0] != 0, bits[1] != 0, bits[2] != 0, bits[3] != 0);
}

AssistAction to_action(const py::object& o) {
  if (py::isinstance<AssistAction>(o)) return o.cast<AssistAction>();
  if (py::isinstance<py::int_>(o)) return action_from_index(o.cast<int>());
  const auto a = parse_action(o.cast<std::string>());
  if (!a) throw py::value_error("unknown action");
  return *a;
}

}  // namespace

PYBIND11_MODULE(caresim, m) {
  m.doc() = "Dementia-caregiving interaction simulator with a tabular Q-learning caregiver";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<BackendError>(m, "BackendError", PyExc_RuntimeError);

  py::enum_<Status>(m, "Status")
      .value("FORGETFUL", Status::kForgetful)
      .value("CONFUSED", Status::kConfused)
      .value("ANGRY", Status::kAngry)
      .value("DISENGAGED", Status::kDisengaged);

  py::enum_<AssistAction>(m, "AssistAction")
      .value("NO_ASSISTANCE", AssistAction::kNoAssistance)
      .value("VERBAL_SUPPORTIVE", AssistAction::kVerbalSupportive)
      .value("VERBAL_NON_DIRECTIVE", AssistAction::kVerbalNonDirective)
      .value("VERBAL_DIRECTIVE", AssistAction::kVerbalDirective)
      .def_property_readonly("code", [](AssistAction a) { return std::string(action_code(a)); })
      .def_property_readonly("label", [](AssistAction a) { return std::string(action_label(a)); });

  py::class_<StatusVector>(m, "StatusVector")
      .def(py::init<bool, bool, bool, bool>(), py::arg("forgetful") = false, py::arg("confused") = false,
           py::arg("angry") = false, py::arg("disengaged") = false)
      .def_static("from_index", &StatusVector::from_index)
      .def_static("parse",
                  [](const std::string& s) {
                    auto v = StatusVector::parse(s);
                    if (!v) throw py::value_error("not a status vector: " + s);
                    return *v;
                  })
      .def_property_readonly("index", &StatusVector::index)
      .def_property_readonly("forgetful", &StatusVector::forgetful)
      .def_property_readonly("confused", &StatusVector::confused)
      .def_property_readonly("angry", &StatusVector::angry)
      .def_property_readonly("disengaged", &StatusVector::disengaged)
      .def("to_list", [](const StatusVector& s) {
        return std::vector<int>{s.forgetful(), s.confused(), s.angry(), s.disengaged()};
      })
      .def("__eq__", [](const StatusVector& a, const StatusVector& b) { return a == b; })
      .def("__hash__", &StatusVector::index)
      .def("__str__", &StatusVector::to_string)
      .def("__repr__", [](const StatusVector& s) { return "StatusVector(" + s.to_string() + ")"; });

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed") = 0)
      .def("uniform", &Rng::uniform);
  m.def("derive_seed", &derive_seed, py::arg("base"), py::arg("index"));

  py::class_<TransitionModel>(m, "TransitionModel")
      .def_static("defaults", &TransitionModel::defaults)
      .def_static("from_json", &transition_model_from_json)
      .def_static("load", [](const std::string& p) { return load_transition_model(p); })
      .def("to_json", [](const TransitionModel& tm) { return transition_model_to_json(tm); });

  m.def(
      "onset_probability",
      [](const TransitionModel& model, const py::object& state, const py::object& action, int target) {
        return onset_probability(model, to_state(state), to_action(action), target);
      },
      py::arg("model"), py::arg("state"), py::arg("action"), py::arg("target"));
  m.def(
      "transition",
      [](const TransitionModel& model, const py::object& state, const py::object& action, Rng& rng) {
        return transition(model, to_state(state), to_action(action), rng);
      },
      py::arg("model"), py::arg("state"), py::arg("action"), py::arg("rng"));
  m.def(
      "step_skip", [](const TransitionModel& model, const py::object& state, Rng& rng) {
        return step_skip(model, to_state(state), rng);
      },
      py::arg("model"), py::arg("state"), py::arg("rng"));

  py::class_<TaskSpec>(m, "TaskSpec")
      .def_readonly("name", &TaskSpec::name)
      .def_readonly("subtasks", &TaskSpec::subtasks);
  py::class_<ScenarioSpec>(m, "ScenarioSpec")
      .def_static("default_shopping", &default_shopping_scenario)
      .def_static("from_json", &scenario_from_json)
      .def_static("load", [](const std::string& p) { return load_scenario(p); })
      .def("to_json", [](const ScenarioSpec& s) { return scenario_to_json(s); })
      .def_readonly("name", &ScenarioSpec::name)
      .def_readonly("max_trial", &ScenarioSpec::max_trial)
      .def_readonly("tasks", &ScenarioSpec::tasks)
      .def_property_readonly("total_subtasks", &ScenarioSpec::total_subtasks)
      .def_property_readonly("max_episode_length", &ScenarioSpec::max_episode_length);

  py::class_<StepEvents>(m, "StepEvents")
      .def(py::init<>())
      .def_readwrite("delta_trial", &StepEvents::delta_trial)
      .def_readwrite("delta_timestep", &StepEvents::delta_timestep)
      .def_readwrite("subtask_completed", &StepEvents::subtask_completed)
      .def_readwrite("subtask_skipped", &StepEvents::subtask_skipped)
      .def_readwrite("task_completed", &StepEvents::task_completed)
      .def_readwrite("action_taken", &StepEvents::action_taken);

  py::class_<RewardWeights>(m, "RewardWeights")
      .def(py::init<>())
      .def_static("from_json", &reward_weights_from_json)
      .def("to_json", [](const RewardWeights& w) { return reward_weights_to_json(w); })
      .def_readwrite("anger", &RewardWeights::anger)
      .def_readwrite("subtask_complete", &RewardWeights::subtask_complete)
      .def_readwrite("subtask_skip", &RewardWeights::subtask_skip)
      .def_readwrite("task_complete", &RewardWeights::task_complete)
      .def_readwrite("assist", &RewardWeights::assist);
  m.def(
      "compute_reward",
      [](const py::object& next_state, const StepEvents& events, const RewardWeights& w) {
        return compute_reward(to_state(next_state), events, w);
      },
      py::arg("next_state"), py::arg("events"), py::arg("weights") = RewardWeights{});

  py::class_<EnvConfig>(m, "EnvConfig")
      .def(py::init<>())
      .def_readwrite("scenario", &EnvConfig::scenario)
      .def_readwrite("model", &EnvConfig::model)
      .def_readwrite("weights", &EnvConfig::weights)
      .def_readwrite("use_perceived", &EnvConfig::use_perceived)
      .def_readwrite("perception_noise", &EnvConfig::perception_noise);

  py::class_<QTable>(m, "QTable")
      .def(py::init<>())
      .def("row", [](const QTable& q, int i) { return q.row(i); })
      .def("serialize", &QTable::serialize)
      .def_static("parse", &QTable::parse)
      .def("save", [](const QTable& q, const std::string& p) { q.save(p); })
      .def_static("load", [](const std::string& p) { return QTable::load(p); });

  py::class_<Policy>(m, "Policy")
      .def_static("uniform", &Policy::uniform)
      .def_static("from_id", &Policy::from_id)
      .def_property_readonly("id", &Policy::id)
      .def("__call__", [](const Policy& p, const py::object& s) { return p(to_state(s)); })
      .def("__eq__", [](const Policy& a, const Policy& b) { return a == b; })
      .def("serialize", &Policy::serialize)
      .def_static("parse", &Policy::parse)
      .def("save", [](const Policy& p, const std::string& path) { p.save(path); })
      .def_static("load", [](const std::string& p) { return Policy::load(p); });
  m.def("extract_policy", &extract_policy);

  py::class_<EpsilonSchedule>(m, "EpsilonSchedule")
      .def_static("constant", &EpsilonSchedule::constant)
      .def_static("decaying", &EpsilonSchedule::decaying)
      .def_static("default_decay", &EpsilonSchedule::default_decay)
      .def("at", &EpsilonSchedule::at)
      .def("__str__", &EpsilonSchedule::describe);

  py::class_<TrainingConfig>(m, "TrainingConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainingConfig::learning_rate)
      .def_readwrite("discount", &TrainingConfig::discount)
      .def_readwrite("epochs", &TrainingConfig::epochs)
      .def_readwrite("episodes_per_epoch", &TrainingConfig::episodes_per_epoch)
      .def_readwrite("schedule", &TrainingConfig::schedule)
      .def_readwrite("seed", &TrainingConfig::seed)
      .def_readwrite("env", &TrainingConfig::env)
      .def_readwrite("snapshot_rollouts", &TrainingConfig::snapshot_rollouts)
      .def_readwrite("late_window", &TrainingConfig::late_window)
      .def_readwrite("random_baseline", &TrainingConfig::random_baseline);

  py::class_<SnapshotRecord>(m, "SnapshotRecord")
      .def_readonly("epoch", &SnapshotRecord::epoch)
      .def_readonly("epsilon", &SnapshotRecord::epsilon)
      .def_readonly("policy_id", &SnapshotRecord::policy_id)
      .def_readonly("mean_return", &SnapshotRecord::mean_return)
      .def_readonly("random_mean_return", &SnapshotRecord::random_mean_return);
  py::class_<TrainingLog>(m, "TrainingLog")
      .def_readonly("strategy_label", &TrainingLog::strategy_label)
      .def_readonly("snapshots", &TrainingLog::snapshots)
      .def("late_policies", &TrainingLog::late_policy_list)
      .def("to_csv", &TrainingLog::to_csv)
      .def_static("from_csv", &TrainingLog::from_csv)
      .def("learning_curve_csv", &TrainingLog::learning_curve_csv);
  py::class_<TrainingResult>(m, "TrainingResult")
      .def_readonly("q", &TrainingResult::q)
      .def_readonly("log", &TrainingResult::log);
  m.def(
      "train", [](const TrainingConfig& c) { return train(c); }, py::arg("config"),
      py::call_guard<py::gil_scoped_release>());

  py::class_<EvaluationReport>(m, "EvaluationReport")
      .def_readonly("policy_id", &EvaluationReport::policy_id)
      .def_readonly("num_rollouts", &EvaluationReport::num_rollouts)
      .def_readonly("mean_return", &EvaluationReport::mean_return)
      .def_readonly("std_return", &EvaluationReport::std_return)
      .def_readonly("returns", &EvaluationReport::returns)
      .def("to_json", &EvaluationReport::to_json);
  m.def(
      "evaluate_policy",
      [](const Policy& p, const EnvConfig& env, int n, std::uint64_t seed, int threads) {
        return evaluate_policy(p, env, n, seed, threads);
      },
      py::arg("policy"), py::arg("env"), py::arg("rollouts") = 40, py::arg("seed") = 0, py::arg("threads") = 1,
      py::call_guard<py::gil_scoped_release>());
  m.def(
      "evaluate_random",
      [](const EnvConfig& env, int n, std::uint64_t seed, int threads) {
        return evaluate_policy(RandomActor{}, env, n, seed, threads);
      },
      py::arg("env"), py::arg("rollouts") = 40, py::arg("seed") = 0, py::arg("threads") = 1,
      py::call_guard<py::gil_scoped_release>());

  py::class_<FinalCandidate>(m, "FinalCandidate")
      .def_readonly("policy", &FinalCandidate::policy)
      .def_readonly("frequency", &FinalCandidate::frequency)
      .def_readonly("report", &FinalCandidate::report);
  py::class_<FinalSelection>(m, "FinalSelection")
      .def_readonly("best", &FinalSelection::best)
      .def_readonly("candidates", &FinalSelection::candidates);
  m.def(
      "select_final_policy",
      [](const TrainingLog& log, const EnvConfig& env, int rollouts, std::uint64_t seed, int threads) {
        return select_final_policy(log, env, rollouts, seed, threads);
      },
      py::arg("log"), py::arg("env"), py::arg("rollouts") = 10000, py::arg("seed") = 0, py::arg("threads") = 1,
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "simulate",
      [](const Policy& policy, const EnvConfig& env, std::uint64_t seed, double noise, bool use_perceived,
         const std::string& variant) {
        auto v = PromptVariant::parse(variant);
        if (!v) throw py::value_error("unknown prompt variant: " + variant);
        SimulationOptions opts;
        opts.perception_noise = noise;
        opts.use_perceived = use_perceived;
        opts.variant = *v;
        TemplateBackend backend(seed);
        Rng rng(seed);
        std::ostringstream out;
        const auto r = run_interaction(policy, env, backend, opts, rng, out);
        return py::make_tuple(r.total_return, r.steps, out.str());
      },
      py::arg("policy"), py::arg("env"), py::arg("seed") = 0, py::arg("noise") = 0.0,
      py::arg("use_perceived") = false, py::arg("variant") = "brief",
      "Runs one narrated episode with the offline template backend; returns (return, steps, transcript).");
}
