#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>

#include "caresim/rng.hpp"
#include "caresim/status.hpp"

namespace caresim {

/// Probability pair that replaces the default dynamics of one status under
/// one assistance level.
struct AssistOverride {
  double persist_prob = 0.0;  // P(Yes -> Yes)
  double onset_prob = 0.0;    // P(No -> Yes)
  friend bool operator==(const AssistOverride&, const AssistOverride&) = default;
};

/// Persistence of one status across a forced subtask skip. When `partner` is
/// set and also present, `with_partner` applies; otherwise `alone` applies.
/// Absent statuses never appear after a skip.
struct SkipRule {
  std::optional<Status> partner;
  double with_partner = 0.0;
  double alone = 0.0;
  friend bool operator==(const SkipRule&, const SkipRule&) = default;
};

/// Markov dynamics of the four statuses.
///
/// Onset of a status is its base probability plus additive increments from
/// every other status currently present, clamped to [0, 1]. Persistence is a
/// fixed per-status value and is not affected by the other statuses. Assist
/// overrides, where defined, replace both for that (action, status) pair.
struct TransitionModel {
  std::array<double, kNumStatuses> base_onset{};
  std::array<double, kNumStatuses> persistence{};
  /// influence[from][to]: onset increment for `to` while `from` is present.
  std::array<std::array<double, kNumStatuses>, kNumStatuses> influence{};
  std::array<std::array<std::optional<AssistOverride>, kNumStatuses>, kNumActions> assist_overrides{};
  std::array<SkipRule, kNumStatuses> skip_rules{};

  /// Clinical defaults shipped with the simulator.
  static TransitionModel defaults();

  /// Throws ConfigError if any probability lies outside [0, 1] or a skip
  /// rule names its own status as partner.
  void validate() const;

  friend bool operator==(const TransitionModel&, const TransitionModel&) = default;
};

/// P(target is Yes at t+1 | current, assist). Pure.
double onset_probability(const TransitionModel& model, const StatusVector& current,
                         AssistAction assist, Status target);
/// Same, with the target given as an integer id; ids outside [0, 3] throw
/// UsageError.
double onset_probability(const TransitionModel& model, const StatusVector& current,
                         AssistAction assist, int target_id);

/// One interaction step. Draws exactly four uniforms, in status order.
StatusVector transition(const TransitionModel& model, const StatusVector& current,
                        AssistAction assist, Rng& rng);

/// P(status is Yes after a forced skip | current).
double skip_probability(const TransitionModel& model, const StatusVector& current, Status target);

/// Successor state of a forced skip. Draws exactly four uniforms.
StatusVector step_skip(const TransitionModel& model, const StatusVector& current, Rng& rng);

/// JSON config I/O. Unknown keys are rejected; omitted sections keep their
/// default values.
TransitionModel transition_model_from_json(const std::string& text);
TransitionModel load_transition_model(const std::filesystem::path& path);
std::string transition_model_to_json(const TransitionModel& model);

}  // namespace caresim
