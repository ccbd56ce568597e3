// caresim: train, evaluate and simulate the caregiving agent from the shell.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "caresim/caresim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace caresim::cli {
namespace {

enum ExitCode : int { kOk = 0, kConfigError = 2, kBackendError = 3, kFormatError = 4 };

struct CommonOptions {
  std::string scenario_path;
  std::string model_path;
  std::string weights_path;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  bool use_perceived = false;
  double noise = 0.0;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--scenario", o.scenario_path, "Scenario config (JSON); default: built-in shopping");
  cmd->add_option("--model", o.model_path, "Transition model config (JSON); default: built-in");
  cmd->add_option("--weights", o.weights_path, "Reward weights config (JSON); default: built-in");
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--out-dir", o.out_dir, "Directory for all outputs");
  cmd->add_flag("--use-perceived", o.use_perceived, "Act on the perceived instead of the true state");
  cmd->add_option("--noise", o.noise, "Perception noise: per-bit flip probability")->check(CLI::Range(0.0, 1.0));
}

EnvConfig build_env(const CommonOptions& o) {
  EnvConfig env;
  if (!o.scenario_path.empty()) env.scenario = load_scenario(o.scenario_path);
  if (!o.model_path.empty()) env.model = load_transition_model(o.model_path);
  if (!o.weights_path.empty()) env.weights = load_reward_weights(o.weights_path);
  env.use_perceived = o.use_perceived;
  env.perception_noise = o.noise;
  env.validate();
  return env;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed: " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Written before any other output. `args` is the command line without the
/// program name and without --out-dir, so replay can redirect outputs.
void write_manifest(const fs::path& out_dir, const std::string& command, const std::vector<std::string>& args,
                    const CommonOptions& common, const EnvConfig& env, json resolved, const json& outputs) {
  json m;
  m["tool"] = "caresim";
  m["version"] = kVersion;
  m["command"] = command;
  m["args"] = args;
  m["seed"] = common.seed;
  m["started_at"] = utc_timestamp();
  resolved["scenario"] = json::parse(scenario_to_json(env.scenario));
  resolved["transition_model"] = json::parse(transition_model_to_json(env.model));
  resolved["reward_weights"] = json::parse(reward_weights_to_json(env.weights));
  resolved["use_perceived"] = env.use_perceived;
  resolved["perception_noise"] = env.perception_noise;
  m["config"] = resolved;
  m["outputs"] = outputs;
  write_file(out_dir / "manifest.json", m.dump(2) + "\n");
}

std::vector<std::string> strip_out_dir(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out-dir") {
      ++i;
      continue;
    }
    if (args[i].rfind("--out-dir=", 0) == 0) continue;
    out.push_back(args[i]);
  }
  return out;
}

struct TrainOptions {
  std::string schedule = "constant";
  double epsilon = 0.1;
  double eps_min = 0.03;
  double eps_max = 1.0;
  double decay_epoch = 300;
  double decay_epsilon = 0.8;
  double lambda = 0.0;
  int epochs = 6000;
  int episodes = 30;
  double alpha = 0.05;
  double gamma = 0.95;
  int snapshot_episode = 10;
  int snapshot_rollouts = 40;
  int late_window = 100;
  bool no_random_baseline = false;
  bool quiet = false;
};

int cmd_train(const CommonOptions& common, const TrainOptions& t, const std::vector<std::string>& args) {
  TrainingConfig cfg;
  cfg.env = build_env(common);
  cfg.seed = common.seed;
  cfg.learning_rate = t.alpha;
  cfg.discount = t.gamma;
  cfg.epochs = t.epochs;
  cfg.episodes_per_epoch = t.episodes;
  cfg.snapshot_episode = t.snapshot_episode;
  cfg.snapshot_rollouts = t.snapshot_rollouts;
  cfg.late_window = t.late_window;
  cfg.random_baseline = !t.no_random_baseline;
  if (t.schedule == "constant") {
    cfg.schedule = EpsilonSchedule::constant(t.epsilon);
  } else if (t.lambda > 0.0) {
    cfg.schedule = EpsilonSchedule::decaying(t.eps_min, t.eps_max, t.lambda);
  } else {
    cfg.schedule = EpsilonSchedule::decaying_through(t.eps_min, t.eps_max, t.decay_epoch, t.decay_epsilon);
  }
  cfg.validate();

  const fs::path dir(common.out_dir);
  fs::create_directories(dir);
  const json outputs = {{"qtable", (dir / "qtable.txt").string()},
                        {"policy", (dir / "policy.txt").string()},
                        {"training_log", (dir / "train_log.csv").string()},
                        {"learning_curve", (dir / "learning_curve.csv").string()}};
  json resolved = {{"schedule", cfg.schedule.describe()},
                   {"learning_rate", cfg.learning_rate},
                   {"discount", cfg.discount},
                   {"epochs", cfg.epochs},
                   {"episodes_per_epoch", cfg.episodes_per_epoch},
                   {"snapshot_episode", cfg.snapshot_episode},
                   {"snapshot_rollouts", cfg.snapshot_rollouts},
                   {"late_window", cfg.late_window},
                   {"random_baseline", cfg.random_baseline}};
  write_manifest(dir, "train", args, common, cfg.env, resolved, outputs);

  const int report_every = std::max(1, cfg.epochs / 20);
  auto progress = [&](const SnapshotRecord& r) {
    if (t.quiet || (r.epoch + 1) % report_every != 0) return;
    std::cerr << "epoch " << r.epoch + 1 << "/" << cfg.epochs << "  epsilon " << r.epsilon << "  snapshot return "
              << r.mean_return << "\n";
  };
  const TrainingResult result = train(cfg, progress);
  const Policy policy = extract_policy(result.q);

  result.q.save(dir / "qtable.txt");
  policy.save(dir / "policy.txt");
  result.log.save(dir / "train_log.csv");
  write_file(dir / "learning_curve.csv", result.log.learning_curve_csv());

  // Every artifact must parse back.
  if (!(QTable::load(dir / "qtable.txt") == result.q)) throw FormatError("q-table did not round-trip");
  if (!(Policy::load(dir / "policy.txt") == policy)) throw FormatError("policy did not round-trip");
  (void)TrainingLog::load(dir / "train_log.csv");

  const auto& last = result.log.snapshots.back();
  std::cout << "strategy: " << result.log.strategy_label << "\n";
  std::cout << "final policy: " << policy.id() << "\n";
  std::cout << "final snapshot mean return (" << cfg.snapshot_rollouts << " rollouts): " << last.mean_return << "\n";
  if (cfg.random_baseline) std::cout << "random baseline mean return: " << last.random_mean_return << "\n";
  return kOk;
}

struct EvaluateOptions {
  std::string policy_path;
  std::string baseline;
  bool select_final = false;
  std::string log_path;
  int rollouts = -1;
  int threads = 1;
};

void print_report(const EvaluationReport& r) {
  std::cout << r.policy_id << "  rollouts " << r.num_rollouts << "  mean " << r.mean_return << "  std "
            << r.std_return << "\n";
}

int cmd_evaluate(const CommonOptions& common, const EvaluateOptions& e, const std::vector<std::string>& args) {
  const int modes = int(!e.policy_path.empty()) + int(!e.baseline.empty()) + int(e.select_final);
  if (modes != 1) throw ConfigError("evaluate needs exactly one of --policy, --baseline random, --select-final");
  if (!e.baseline.empty() && e.baseline != "random") throw ConfigError("unknown baseline: " + e.baseline);
  if (e.select_final && e.log_path.empty()) throw ConfigError("--select-final needs --log");
  const int rollouts = e.rollouts > 0 ? e.rollouts : (e.select_final ? 10000 : 40);

  const EnvConfig env = build_env(common);
  const fs::path dir(common.out_dir);
  fs::create_directories(dir);
  json outputs = {{"report", (dir / "evaluation.json").string()}};
  if (e.select_final) outputs["final_policy"] = (dir / "final_policy.txt").string();
  json resolved = {{"rollouts", rollouts}, {"threads", e.threads}};
  if (!e.policy_path.empty()) resolved["policy"] = e.policy_path;
  if (!e.baseline.empty()) resolved["baseline"] = e.baseline;
  if (e.select_final) resolved["log"] = e.log_path;

  // Load inputs before the manifest so a missing file leaves no partial run.
  std::optional<Policy> policy;
  std::optional<TrainingLog> log;
  if (!e.policy_path.empty()) policy = Policy::load(e.policy_path);
  if (e.select_final) log = TrainingLog::load(e.log_path);
  write_manifest(dir, "evaluate", args, common, env, resolved, outputs);

  if (e.select_final) {
    const FinalSelection sel = select_final_policy(*log, env, rollouts, common.seed, e.threads);
    json report = json::object();
    report["final_policy"] = sel.best.id();
    report["candidates"] = json::array();
    for (const auto& c : sel.candidates) {
      json cj = json::parse(c.report.to_json());
      cj["frequency"] = c.frequency;
      report["candidates"].push_back(cj);
      std::cout << "candidate (x" << c.frequency << ") ";
      print_report(c.report);
    }
    write_file(dir / "evaluation.json", report.dump(2) + "\n");
    sel.best.save(dir / "final_policy.txt");
    (void)Policy::load(dir / "final_policy.txt");
    std::cout << "final policy: " << sel.best.id() << "\n";
    return kOk;
  }

  const Actor actor = policy ? Actor(*policy) : Actor(RandomActor{});
  const EvaluationReport r = evaluate_policy(actor, env, rollouts, common.seed, e.threads);
  write_file(dir / "evaluation.json", r.to_json());
  (void)EvaluationReport::from_json(read_file(dir / "evaluation.json"));
  print_report(r);
  return kOk;
}

struct SimulateOptions {
  std::string policy_path;
  std::string backend = "template";
  std::string http_config;
  std::string base_url;
  std::string model_name;
  double temperature = -1;
  int timeout_ms = -1;
  int max_retries = -1;
  std::string variant = "brief";
  std::size_t history_cap = kDefaultHistoryCap;
  std::string transcript;
};

int cmd_simulate(const CommonOptions& common, const SimulateOptions& s, const std::vector<std::string>& args) {
  EnvConfig env = build_env(common);
  const auto variant = PromptVariant::parse(s.variant);
  if (!variant) throw ConfigError("unknown prompt variant: " + s.variant);
  const Policy policy = Policy::load(s.policy_path);

  std::unique_ptr<TextBackend> backend;
  json backend_json = {{"name", s.backend}};
  if (s.backend == "template") {
    backend = std::make_unique<TemplateBackend>(common.seed);
  } else if (s.backend == "http") {
    ChatClientConfig cc = s.http_config.empty() ? ChatClientConfig{} : load_chat_client_config(s.http_config);
    if (!s.base_url.empty()) cc.base_url = s.base_url;
    if (!s.model_name.empty()) cc.model = s.model_name;
    if (s.temperature >= 0) cc.temperature = s.temperature;
    if (s.timeout_ms > 0) cc.timeout_ms = s.timeout_ms;
    if (s.max_retries >= 0) cc.max_retries = s.max_retries;
    backend = std::make_unique<HttpBackend>(cc);
    backend_json.update({{"base_url", cc.base_url},
                         {"model", cc.model},
                         {"temperature", cc.temperature},
                         {"timeout_ms", cc.timeout_ms},
                         {"max_retries", cc.max_retries},
                         {"api_key_env", cc.api_key_env}});
  } else {
    throw ConfigError("unknown backend: " + s.backend);
  }

  const fs::path dir(common.out_dir);
  fs::create_directories(dir);
  const fs::path transcript_path = s.transcript.empty() ? dir / "transcript.txt" : fs::path(s.transcript);
  json resolved = {{"policy", s.policy_path},
                   {"policy_id", policy.id()},
                   {"backend", backend_json},
                   {"prompt_variant", variant->name()},
                   {"history_cap", s.history_cap}};
  write_manifest(dir, "simulate", args, common, env, resolved, {{"transcript", transcript_path.string()}});

  SimulationOptions opts;
  opts.use_perceived = common.use_perceived;
  opts.perception_noise = common.noise;
  opts.variant = *variant;
  opts.history_cap = s.history_cap;
  Rng rng(common.seed);
  std::ostringstream text;
  const SimulationResult r = run_interaction(policy, env, *backend, opts, rng, text);
  write_file(transcript_path, text.str());
  if (read_file(transcript_path) != text.str()) throw FormatError("transcript did not round-trip");
  std::cout << "timesteps " << r.steps << "  return " << r.total_return << "  misperceived steps "
            << r.misperceived_steps << "\n";
  std::cout << "transcript: " << transcript_path.string() << "\n";
  return kOk;
}

int run(const std::vector<std::string>& argv);

int cmd_replay(const std::string& manifest_path, const std::string& out_dir) {
  json m;
  try {
    m = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  if (!m.contains("args") || !m["args"].is_array()) throw FormatError("manifest has no args");
  std::vector<std::string> argv = {"caresim"};
  for (const auto& a : m["args"]) argv.push_back(a.get<std::string>());
  if (!out_dir.empty()) {
    argv.push_back("--out-dir");
    argv.push_back(out_dir);
  }
  return run(argv);
}

int run(const std::vector<std::string>& argv) {
  CLI::App app{"Dementia-caregiving interaction simulator with a tabular Q-learning caregiver"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOptions common;
  TrainOptions t;
  auto* train_cmd = app.add_subcommand("train", "Train the Q-learning caregiver");
  add_common(train_cmd, common);
  train_cmd->add_option("--schedule", t.schedule, "Exploration schedule")->check(CLI::IsMember({"constant", "decay"}));
  train_cmd->add_option("--epsilon", t.epsilon, "Constant epsilon")->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--eps-min", t.eps_min, "Decay floor");
  train_cmd->add_option("--eps-max", t.eps_max, "Decay start");
  train_cmd->add_option("--decay-epoch", t.decay_epoch, "Epoch at which the decay reaches --decay-epsilon");
  train_cmd->add_option("--decay-epsilon", t.decay_epsilon, "Epsilon reached at --decay-epoch");
  train_cmd->add_option("--lambda", t.lambda, "Explicit decay rate (overrides --decay-epoch/--decay-epsilon)");
  train_cmd->add_option("--epochs", t.epochs, "Training epochs");
  train_cmd->add_option("--episodes", t.episodes, "Episodes per epoch");
  train_cmd->add_option("--alpha", t.alpha, "Learning rate");
  train_cmd->add_option("--gamma", t.gamma, "Discount factor");
  train_cmd->add_option("--snapshot-episode", t.snapshot_episode, "Episode of each epoch to snapshot (1-based)");
  train_cmd->add_option("--snapshot-rollouts", t.snapshot_rollouts, "Rollouts per snapshot evaluation");
  train_cmd->add_option("--late-window", t.late_window, "Final episodes whose policies are recorded");
  train_cmd->add_flag("--no-random-baseline", t.no_random_baseline, "Skip the per-epoch random baseline");
  train_cmd->add_flag("--quiet", t.quiet, "No progress output");

  EvaluateOptions e;
  auto* eval_cmd = app.add_subcommand("evaluate", "Monte Carlo evaluation of a policy or baseline");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--policy", e.policy_path, "Policy file");
  eval_cmd->add_option("--baseline", e.baseline, "Baseline actor (random)");
  eval_cmd->add_flag("--select-final", e.select_final, "Pick the final policy from a training log");
  eval_cmd->add_option("--log", e.log_path, "Training log for --select-final");
  eval_cmd->add_option("--rollouts", e.rollouts, "Rollouts per policy (default 40; 10000 with --select-final)");
  eval_cmd->add_option("--threads", e.threads, "Worker threads")->check(CLI::PositiveNumber);

  SimulateOptions s;
  auto* sim_cmd = app.add_subcommand("simulate", "Run one narrated interaction episode");
  add_common(sim_cmd, common);
  sim_cmd->add_option("--policy", s.policy_path, "Policy file")->required();
  sim_cmd->add_option("--backend", s.backend, "Text backend")->check(CLI::IsMember({"template", "http"}));
  sim_cmd->add_option("--http-config", s.http_config, "HTTP backend config (JSON)");
  sim_cmd->add_option("--base-url", s.base_url, "Chat-completions base URL");
  sim_cmd->add_option("--model-name", s.model_name, "Chat model name");
  sim_cmd->add_option("--temperature", s.temperature, "Sampling temperature");
  sim_cmd->add_option("--timeout-ms", s.timeout_ms, "Per-call deadline in milliseconds");
  sim_cmd->add_option("--max-retries", s.max_retries, "Retries per call");
  sim_cmd->add_option("--variant", s.variant, "Assistance prompt variant: brief, brief+state, detailed, detailed+state");
  sim_cmd->add_option("--history-cap", s.history_cap, "Interaction history length")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--transcript", s.transcript, "Transcript path (default <out-dir>/transcript.txt)");

  std::string manifest_path, replay_out;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a command from its manifest");
  replay_cmd->add_option("--manifest", manifest_path, "manifest.json of the run")->required();
  replay_cmd->add_option("--out-dir", replay_out, "Write outputs here instead of the original directory");

  std::vector<std::string> rev(argv.rbegin(), argv.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }
  const std::vector<std::string> args = strip_out_dir({argv.begin() + 1, argv.end()});

  try {
    if (*train_cmd) return cmd_train(common, t, args);
    if (*eval_cmd) return cmd_evaluate(common, e, args);
    if (*sim_cmd) return cmd_simulate(common, s, args);
    if (*replay_cmd) return cmd_replay(manifest_path, replay_out);
  } catch (const ConfigError& err) {
    std::cerr << "configuration error: " << err.what() << "\n";
    return kConfigError;
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return kConfigError;
  } catch (const BackendError& err) {
    std::cerr << (err.kind() == BackendError::Kind::kConfig ? "configuration error: " : "backend error (")
              << (err.kind() == BackendError::Kind::kConfig ? "" : std::string(backend_error_kind_name(err.kind())) + "): ")
              << err.what() << "\n";
    return err.kind() == BackendError::Kind::kConfig ? kConfigError : kBackendError;
  } catch (const FormatError& err) {
    std::cerr << "format error: " << err.what() << "\n";
    return kFormatError;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "filesystem error: " << err.what() << "\n";
    return kFormatError;
  }
  return kOk;
}

}  // namespace
}  // namespace caresim::cli

int main(int argc, char** argv) {
  return caresim::cli::run(std::vector<std::string>(argv, argv + argc));
}
