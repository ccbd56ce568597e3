#include "caresim/training.hpp"

#include <cmath>
#include <limits>

#include "caresim/error.hpp"
#include "text_util.hpp"

namespace caresim {

namespace {

constexpr std::string_view kLogHeader = "record,epoch,episode,epsilon,policy,mean_return,random_mean_return";

// Stream tags keep evaluation seeds disjoint from each other.
constexpr std::uint64_t kSnapshotStream = 0x736e6170ULL;
constexpr std::uint64_t kRandomStream = 0x72616e64ULL;

std::string label_for(const EpsilonSchedule& s) {
  return s.is_constant() ? "constant-epsilon" : "decaying-epsilon";
}

}  // namespace

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("learning rate must be in (0, 1]");
  if (!(discount >= 0.0 && discount < 1.0)) throw ConfigError("discount must be in [0, 1)");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (episodes_per_epoch < 1) throw ConfigError("episodes per epoch must be >= 1");
  if (snapshot_episode < 1 || snapshot_episode > episodes_per_epoch) {
    throw ConfigError("snapshot episode must be within [1, episodes per epoch]");
  }
  if (snapshot_rollouts < 1) throw ConfigError("snapshot rollouts must be >= 1");
  if (late_window < 0) throw ConfigError("late window must be >= 0");
  env.validate();
}

TrainingResult train(const TrainingConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  TrainingResult result;
  result.log.strategy_label = label_for(config.schedule);
  for (int i = 0; i < kNumStates; ++i) result.q.row(i).fill(config.initial_q);

  Rng rng(config.seed);
  CaregivingEnv env(config.env);
  const long long total_episodes = static_cast<long long>(config.epochs) * config.episodes_per_epoch;
  const long long late_begin = total_episodes - config.late_window;
  const std::uint64_t snapshot_base = derive_seed(config.seed, kSnapshotStream);
  const std::uint64_t random_base = derive_seed(config.seed, kRandomStream);

  long long episode = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double epsilon = config.schedule.at(epoch);
    for (int k = 1; k <= config.episodes_per_epoch; ++k, ++episode) {
      env.reset();
      StatusVector seen = env.observe(env.state(), rng);
      while (!env.done()) {
        const AssistAction a = select_action(result.q, seen, epsilon, rng);
        const StepResult step = env.step(a, rng);
        const StatusVector seen_next = env.observe(step.next_state, rng);
        q_update(result.q, seen, a, step.reward, seen_next, step.terminal, config.learning_rate,
                 config.discount);
        seen = seen_next;
      }

      if (k == config.snapshot_episode) {
        const Policy snapshot = extract_policy(result.q);
        SnapshotRecord rec;
        rec.epoch = epoch;
        rec.epsilon = epsilon;
        rec.policy_id = snapshot.id();
        rec.mean_return = evaluate_policy(snapshot, config.env, config.snapshot_rollouts,
                                          derive_seed(snapshot_base, static_cast<std::uint64_t>(epoch)))
                              .mean_return;
        rec.random_mean_return =
            config.random_baseline
                ? evaluate_policy(RandomActor{}, config.env, config.snapshot_rollouts,
                                  derive_seed(random_base, static_cast<std::uint64_t>(epoch)))
                      .mean_return
                : std::numeric_limits<double>::quiet_NaN();
        result.log.snapshots.push_back(rec);
        if (on_epoch) on_epoch(rec);
      }
      if (episode >= late_begin) {
        result.log.late_policies.push_back({epoch, episode, extract_policy(result.q).id()});
      }
    }
  }
  return result;
}

std::vector<Policy> TrainingLog::late_policy_list() const {
  std::vector<Policy> out;
  out.reserve(late_policies.size());
  for (const auto& r : late_policies) out.push_back(Policy::from_id(r.policy_id));
  return out;
}

std::string TrainingLog::to_csv() const {
  std::string out = "# strategy " + strategy_label + "\n" + std::string(kLogHeader) + "\n";
  for (const auto& s : snapshots) {
    out += "snapshot," + std::to_string(s.epoch) + ",," + detail::format_double(s.epsilon) + "," + s.policy_id +
           "," + detail::format_double(s.mean_return) + ",";
    if (!std::isnan(s.random_mean_return)) out += detail::format_double(s.random_mean_return);
    out += "\n";
  }
  for (const auto& l : late_policies) {
    out += "late," + std::to_string(l.epoch) + "," + std::to_string(l.episode) + ",," + l.policy_id + ",,\n";
  }
  return out;
}

TrainingLog TrainingLog::from_csv(const std::string& text) {
  TrainingLog log;
  bool header_seen = false;
  auto ls = detail::lines(text);
  for (std::size_t n = 0; n < ls.size(); ++n) {
    std::string_view line = ls[n];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view tag = "# strategy ";
      if (line.substr(0, tag.size()) == tag) log.strategy_label = std::string(line.substr(tag.size()));
      continue;
    }
    const std::string where = "training log line " + std::to_string(n + 1);
    if (!header_seen) {
      if (line != kLogHeader) throw FormatError(where + ": unexpected header");
      header_seen = true;
      continue;
    }
    auto f = detail::split(line, ',');
    if (f.size() != 7) throw FormatError(where + ": expected 7 fields");
    auto epoch = detail::parse_int(f[1]);
    if (!epoch) throw FormatError(where + ": bad epoch");
    // Validates the id.
    const std::string id = Policy::from_id(std::string(f[4])).id();
    if (f[0] == "snapshot") {
      SnapshotRecord r;
      r.epoch = static_cast<int>(*epoch);
      auto eps = detail::parse_double(f[3]);
      auto mean = detail::parse_double(f[5]);
      if (!eps || !mean) throw FormatError(where + ": bad number");
      r.epsilon = *eps;
      r.policy_id = id;
      r.mean_return = *mean;
      r.random_mean_return = std::numeric_limits<double>::quiet_NaN();
      if (!f[6].empty()) {
        auto rnd = detail::parse_double(f[6]);
        if (!rnd) throw FormatError(where + ": bad random mean");
        r.random_mean_return = *rnd;
      }
      log.snapshots.push_back(r);
    } else if (f[0] == "late") {
      auto ep = detail::parse_int(f[2]);
      if (!ep) throw FormatError(where + ": bad episode");
      log.late_policies.push_back({static_cast<int>(*epoch), *ep, id});
    } else {
      throw FormatError(where + ": unknown record kind");
    }
  }
  if (!header_seen) throw FormatError("training log: missing header");
  return log;
}

void TrainingLog::save(const std::filesystem::path& path) const { detail::write_text(path, to_csv()); }
TrainingLog TrainingLog::load(const std::filesystem::path& path) { return from_csv(detail::read_text(path)); }

std::string TrainingLog::learning_curve_csv() const {
  std::string out = "epoch,strategy,mean_return\n";
  for (const auto& s : snapshots) {
    out += std::to_string(s.epoch) + "," + strategy_label + "," + detail::format_double(s.mean_return) + "\n";
    if (!std::isnan(s.random_mean_return)) {
      out += std::to_string(s.epoch) + ",random," + detail::format_double(s.random_mean_return) + "\n";
    }
  }
  return out;
}

FinalSelection select_final_policy(const TrainingLog& log, const EnvConfig& env, int rollouts,
                                   std::uint64_t base_seed, int threads) {
  if (log.late_policies.empty()) throw UsageError("select_final_policy: training log has no late policies");
  return select_final_policy(log.late_policy_list(), env, rollouts, base_seed, threads);
}

}  // namespace caresim
