#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <variant>

#include "caresim/rng.hpp"
#include "caresim/status.hpp"

namespace caresim {

/// Action-value table over the 16 status vectors and 4 assistance levels.
class QTable {
 public:
  using Row = std::array<double, kNumActions>;

  QTable() = default;

  double& at(const StatusVector& s, AssistAction a) { return rows_[s.index()][action_index(a)]; }
  double at(const StatusVector& s, AssistAction a) const { return rows_[s.index()][action_index(a)]; }
  Row& row(int state_index) { return rows_.at(state_index); }
  const Row& row(int state_index) const { return rows_.at(state_index); }
  double max_value(const StatusVector& s) const;

  /// Line-oriented text: "<index> [f,c,a,d] q0 q1 q2 q3" per state, values in
  /// shortest round-trip form, so equal tables serialize byte-identically.
  std::string serialize() const;
  static QTable parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static QTable load(const std::filesystem::path& path);

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::array<Row, kNumStates> rows_{};
};

/// Deterministic mapping from every status vector to an assistance level.
class Policy {
 public:
  Policy() = default;
  explicit Policy(const std::array<AssistAction, kNumStates>& actions) : actions_(actions) {}
  static Policy uniform(AssistAction a);

  AssistAction operator()(const StatusVector& s) const { return actions_[s.index()]; }
  AssistAction& at(const StatusVector& s) { return actions_[s.index()]; }

  /// 16 action digits in state-index order, e.g. "2111...". Lexicographic
  /// order on ids is the documented tie-break order.
  std::string id() const;
  static Policy from_id(const std::string& id);

  std::string serialize() const;
  static Policy parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static Policy load(const std::filesystem::path& path);

  friend bool operator==(const Policy&, const Policy&) = default;

 private:
  std::array<AssistAction, kNumStates> actions_{};
};

struct ConstantEpsilon {
  double epsilon = 0.1;
};

/// eps(t) = eps_min + (eps_max - eps_min) * exp(-lambda * t), t in epochs.
struct DecayingEpsilon {
  double eps_min = 0.03;
  double eps_max = 1.0;
  double lambda = 0.0;
};

class EpsilonSchedule {
 public:
  using Variant = std::variant<ConstantEpsilon, DecayingEpsilon>;

  static EpsilonSchedule constant(double epsilon);
  static EpsilonSchedule decaying(double eps_min, double eps_max, double lambda);
  /// Chooses lambda so that eps(target_epoch) == target_epsilon.
  static EpsilonSchedule decaying_through(double eps_min, double eps_max, double target_epoch,
                                          double target_epsilon);
  /// eps_min 0.03, eps_max 1, eps(300) = 0.8.
  static EpsilonSchedule default_decay();

  double at(long long epoch) const;
  const Variant& variant() const { return v_; }
  bool is_constant() const { return std::holds_alternative<ConstantEpsilon>(v_); }
  std::string describe() const;

 private:
  explicit EpsilonSchedule(Variant v) : v_(v) {}
  Variant v_;
};

double epsilon_at(const EpsilonSchedule& schedule, long long epoch);

/// Epsilon-greedy choice. Always draws exactly two uniforms: the first decides
/// explore vs exploit, the second picks uniformly among all actions
/// (exploring) or among the maximal actions (exploiting).
AssistAction select_action(const QTable& q, const StatusVector& state, double epsilon, Rng& rng);

/// One-step Q-learning backup. Terminal successors bootstrap with 0.
void q_update(QTable& q, const StatusVector& s, AssistAction a, double reward,
              const StatusVector& s_next, bool terminal, double alpha, double gamma);

/// Greedy policy with lowest-index tie-break.
Policy extract_policy(const QTable& q);

}  // namespace caresim
