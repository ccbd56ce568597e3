#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace caresim {

/// The four binary cognitive/affective statuses of the simulated person, in
/// canonical order. The order fixes bit positions and rng draw order.
enum class Status : int { kForgetful = 0, kConfused = 1, kAngry = 2, kDisengaged = 3 };

inline constexpr int kNumStatuses = 4;
inline constexpr int kNumStates = 16;
inline constexpr std::array<Status, kNumStatuses> kAllStatuses = {
    Status::kForgetful, Status::kConfused, Status::kAngry, Status::kDisengaged};

std::string_view status_name(Status s);
std::optional<Status> parse_status(std::string_view name);
/// Validated conversion from an integer id; throws UsageError outside [0, 3].
Status status_from_id(int id);

/// Four-bit status vector. Index encoding: forgetful is the most significant
/// bit, disengaged the least, so [f,c,a,d] reads as a binary number.
class StatusVector {
 public:
  constexpr StatusVector() = default;
  constexpr StatusVector(bool forgetful, bool confused, bool angry, bool disengaged)
      : bits_{forgetful, confused, angry, disengaged} {}

  static StatusVector from_index(int index);
  constexpr int index() const {
    return (bits_[0] << 3) | (bits_[1] << 2) | (bits_[2] << 1) | int(bits_[3]);
  }

  constexpr bool get(Status s) const { return bits_[static_cast<int>(s)]; }
  constexpr void set(Status s, bool on) { bits_[static_cast<int>(s)] = on; }
  constexpr bool operator[](Status s) const { return get(s); }

  constexpr bool forgetful() const { return bits_[0]; }
  constexpr bool confused() const { return bits_[1]; }
  constexpr bool angry() const { return bits_[2]; }
  constexpr bool disengaged() const { return bits_[3]; }

  constexpr bool all_clear() const { return !bits_[0] && !bits_[1] && !bits_[2] && !bits_[3]; }
  constexpr int count() const { return bits_[0] + bits_[1] + bits_[2] + bits_[3]; }

  /// "[f,c,a,d]" with 0/1 digits.
  std::string to_string() const;
  /// Inverse of to_string(); tolerates surrounding whitespace.
  static std::optional<StatusVector> parse(std::string_view text);

  friend constexpr bool operator==(const StatusVector&, const StatusVector&) = default;

 private:
  std::array<bool, kNumStatuses> bits_{};
};

inline constexpr StatusVector kStartState{};

/// Caregiver assistance levels a0..a3, ordered by intrusiveness. The forced
/// subtask skip is an environment event and deliberately not a member.
enum class AssistAction : int {
  kNoAssistance = 0,
  kVerbalSupportive = 1,
  kVerbalNonDirective = 2,
  kVerbalDirective = 3,
};

inline constexpr int kNumActions = 4;
inline constexpr std::array<AssistAction, kNumActions> kAllActions = {
    AssistAction::kNoAssistance, AssistAction::kVerbalSupportive,
    AssistAction::kVerbalNonDirective, AssistAction::kVerbalDirective};

constexpr int action_index(AssistAction a) { return static_cast<int>(a); }
AssistAction action_from_index(int index);

/// "a0".."a3".
std::string_view action_code(AssistAction a);
/// Human-readable label, e.g. "VerbalSupportive".
std::string_view action_label(AssistAction a);
/// Accepts either the code ("a2") or the label ("VerbalNonDirective").
std::optional<AssistAction> parse_action(std::string_view text);

}  // namespace caresim
