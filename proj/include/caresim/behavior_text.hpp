#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "caresim/rng.hpp"
#include "caresim/status.hpp"

namespace caresim {

enum class Speaker { kPerson, kCaregiver };

std::string_view speaker_name(Speaker s);

struct Utterance {
  Speaker speaker;
  std::string text;
};

inline constexpr std::size_t kDefaultHistoryCap = 20;

/// What the text layer knows about the ongoing interaction.
class InteractionContext {
 public:
  explicit InteractionContext(std::size_t history_cap = kDefaultHistoryCap);

  std::string scenario_name;
  std::string task_name;
  std::string subtask_name;

  /// Appends to the history, dropping the oldest entries beyond the cap.
  /// Caregiver entries also become the latest caregiver utterance.
  void record(Speaker speaker, std::string text);

  const std::deque<Utterance>& history() const { return history_; }
  std::size_t history_cap() const { return cap_; }
  const std::string& latest_caregiver_utterance() const { return latest_caregiver_; }
  /// Most recent entry by the person, if any.
  std::optional<std::string> latest_person_behavior() const;
  /// Total entries ever recorded (not capped).
  std::uint64_t turns_recorded() const { return turns_; }

 private:
  std::size_t cap_;
  std::deque<Utterance> history_;
  std::string latest_caregiver_;
  std::uint64_t turns_ = 0;
};

struct BehaviorText {
  std::string nonverbal;
  std::string verbal;  // may be empty, e.g. a disengaged silence

  /// "<nonverbal> | <verbal>"
  std::string combined() const;
  friend bool operator==(const BehaviorText&, const BehaviorText&) = default;
};

enum class Provenance { kExact, kParsed, kNoisy };
std::string_view provenance_name(Provenance p);

struct PerceivedState {
  StatusVector state;
  Provenance provenance = Provenance::kExact;
};

enum class Guidance { kBrief, kDetailed };

struct PromptVariant {
  Guidance guidance = Guidance::kBrief;
  bool include_state = false;

  /// "brief", "brief+state", "detailed", "detailed+state".
  std::string name() const;
  static std::optional<PromptVariant> parse(std::string_view name);
  friend bool operator==(const PromptVariant&, const PromptVariant&) = default;
};

/// The four guidance x state combinations.
std::vector<PromptVariant> all_prompt_variants();

/// Failure of a text backend. `raw` carries the offending text or body.
class BackendError : public std::runtime_error {
 public:
  enum class Kind { kConfig, kTimeout, kConnection, kHttpStatus, kMalformedReply, kUnparseable };

  BackendError(Kind kind, const std::string& message, std::string raw = {}, int http_status = 0,
               int attempts = 0);

  Kind kind() const { return kind_; }
  const std::string& raw() const { return raw_; }
  int http_status() const { return http_status_; }
  int attempts() const { return attempts_; }

 private:
  Kind kind_;
  std::string raw_;
  int http_status_;
  int attempts_;
};

std::string_view backend_error_kind_name(BackendError::Kind k);

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// Prompt for rendering the person's behavior. Sections, in order: role,
/// task context, interaction history, latest caregiver assistance, state
/// guidelines, current state vector, output format.
std::vector<ChatMessage> behavior_prompt(const StatusVector& state, const InteractionContext& ctx);

/// Prompt asking a model to recover the status vector from observed behavior.
std::vector<ChatMessage> perception_prompt(const BehaviorText& behavior, const InteractionContext& ctx);

/// Prompt for turning an abstract assistance level into caregiver speech.
/// Sections: role and purpose, task context, interaction history, current
/// behavior, assistive action, output format, assistance guidelines (brief or
/// detailed) and, when the variant asks for it, the current state.
/// Throws UsageError when the variant includes the state but none is given.
std::vector<ChatMessage> assist_prompt(AssistAction action, const InteractionContext& ctx,
                                       const PromptVariant& variant, const std::optional<StatusVector>& state);

/// Extracts the first "[b,b,b,b]" binary vector from free text.
std::optional<StatusVector> find_status_vector(std::string_view text);

/// Machine-readable marker the template backend embeds in its output.
std::string state_marker(const StatusVector& s);
std::optional<StatusVector> parse_state_marker(std::string_view text);

/// Renders and interprets interaction text.
class TextBackend {
 public:
  virtual ~TextBackend() = default;

  virtual std::string name() const = 0;
  virtual BehaviorText narrate(const StatusVector& state, const InteractionContext& ctx) = 0;
  /// Recovers a status vector and then flips each bit with probability
  /// `noise` (always four draws from `rng`).
  virtual PerceivedState perceive(const BehaviorText& behavior, const InteractionContext& ctx, double noise,
                                  Rng& rng) = 0;
  virtual std::string render_assist(AssistAction action, const InteractionContext& ctx,
                                    const PromptVariant& variant, const std::optional<StatusVector>& state) = 0;
};

/// Offline backend. Output is a pure function of the inputs and the seed.
class TemplateBackend final : public TextBackend {
 public:
  explicit TemplateBackend(std::uint64_t seed = 0) : seed_(seed) {}

  std::string name() const override { return "template"; }
  BehaviorText narrate(const StatusVector& state, const InteractionContext& ctx) override;
  PerceivedState perceive(const BehaviorText& behavior, const InteractionContext& ctx, double noise,
                          Rng& rng) override;
  std::string render_assist(AssistAction action, const InteractionContext& ctx, const PromptVariant& variant,
                            const std::optional<StatusVector>& state) override;

 private:
  std::uint64_t pick(std::uint64_t salt, const InteractionContext& ctx) const;
  std::uint64_t seed_;
};

}  // namespace caresim
