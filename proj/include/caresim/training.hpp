#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "caresim/environment.hpp"
#include "caresim/evaluation.hpp"
#include "caresim/qlearning.hpp"

namespace caresim {

struct TrainingConfig {
  double learning_rate = 0.05;
  double discount = 0.95;
  int epochs = 6000;
  int episodes_per_epoch = 30;
  EpsilonSchedule schedule = EpsilonSchedule::constant(0.1);
  std::uint64_t seed = 0;
  EnvConfig env;

  /// 1-based episode within each epoch after which the greedy policy is
  /// snapshotted and evaluated.
  int snapshot_episode = 10;
  int snapshot_rollouts = 40;
  /// Number of final training episodes whose greedy policies are recorded.
  int late_window = 100;
  /// Also evaluate the random actor each epoch for the learning curve.
  bool random_baseline = true;
  /// Value every Q entry starts from.
  double initial_q = 0.0;

  void validate() const;
};

struct SnapshotRecord {
  int epoch = 0;
  double epsilon = 0.0;
  std::string policy_id;
  double mean_return = 0.0;
  double random_mean_return = 0.0;  // NaN when the baseline is disabled
};

struct LatePolicyRecord {
  int epoch = 0;
  long long episode = 0;  // global 0-based episode index
  std::string policy_id;
};

/// Per-epoch snapshot rows plus the greedy policies of the final episodes.
///
/// CSV layout, one header line then one row per record:
///   record,epoch,episode,epsilon,policy,mean_return,random_mean_return
/// `record` is "snapshot" or "late"; unused columns are empty.
struct TrainingLog {
  std::string strategy_label;
  std::vector<SnapshotRecord> snapshots;
  std::vector<LatePolicyRecord> late_policies;

  std::vector<Policy> late_policy_list() const;

  std::string to_csv() const;
  static TrainingLog from_csv(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static TrainingLog load(const std::filesystem::path& path);

  /// Rows "epoch,strategy,mean_return" for the strategy and, when recorded,
  /// the random baseline.
  std::string learning_curve_csv() const;
};

struct TrainingResult {
  QTable q;
  TrainingLog log;
};

using EpochCallback = std::function<void(const SnapshotRecord&)>;

/// Tabular Q-learning over `epochs x episodes_per_epoch` episodes with a
/// single persistent table. The training stream is Rng(seed); evaluation
/// rollouts use derived seeds and never touch it.
TrainingResult train(const TrainingConfig& config, const EpochCallback& on_epoch = {});

/// Final-policy selection from a training log.
FinalSelection select_final_policy(const TrainingLog& log, const EnvConfig& env, int rollouts = 10000,
                                   std::uint64_t base_seed = 0, int threads = 1);

}  // namespace caresim
