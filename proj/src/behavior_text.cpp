#include "caresim/behavior_text.hpp"

#include <array>
#include <string_view>

#include "caresim/environment.hpp"
#include "caresim/error.hpp"

namespace caresim {

namespace {

using Bank = std::vector<std::string_view>;

struct StatusPhrases {
  Bank nonverbal;
  Bank verbal;
};

// Indexed by Status.
const std::array<StatusPhrases, kNumStatuses>& phrase_banks() {
  static const std::array<StatusPhrases, kNumStatuses> banks = {{
      {{"stops mid-reach and glances around the shelves as if trying to recall something",
        "holds the list loosely without reading it, eyes drifting between items",
        "picks up an item, sets it back, then picks it up again"},
       {"Wait... what was I looking for again?", "Did I already get that one? I can't remember.",
        "There was something else... it's gone now."}},
      {{"turns the item over slowly, frowning at the label",
        "looks back and forth between the list and the shelf with a puzzled expression",
        "hesitates with a hand hovering between two similar items"},
       {"Is this the right one? They all look the same.", "Which one did the list say? I don't follow.",
        "Hmm, is this where I'm supposed to be?"}},
      {{"puts the basket down hard and crosses both arms",
        "jabs a finger at the list, jaw tight and voice raised",
        "shoves the item back onto the shelf with a sharp sigh"},
       {"I already did that! Why do you keep asking me?", "This is ridiculous. Just leave me alone.",
        "Stop telling me what to do, I know how to shop!"}},
      {{"avoids eye contact and stares down at the floor",
        "lets the list hang at their side and gazes past the shelves",
        "shifts weight from foot to foot, shoulders slumped, attention wandering"},
       {"Mm... I guess... that's fine.", "", "Whatever... it doesn't matter much."}},
  }};
  return banks;
}

const StatusPhrases& cooperative_phrases() {
  static const StatusPhrases p = {
      {"nods at the caregiver and checks the list line by line",
       "reaches for the item calmly and reads the label carefully",
       "smiles briefly and places the item neatly in the basket"},
      {"Okay, this one's on the list. I'll take it.", "Right, that's the next one.",
       "Good, I think I have it now."}};
  return p;
}

const std::array<Bank, kNumActions>& assist_banks() {
  static const std::array<Bank, kNumActions> banks = {{
      {},
      {"Keep at it, you're doing well.", "Great, that's it.", "You're doing fine, take your time.",
       "Nice work so far."},
      {"Is there anything missing?", "Can you try another way?", "What does your list say next?",
       "Is that the one you were looking for?"},
      {"Check the shopping list again.", "Look at the list and pick the next item on it.",
       "Compare the label with the name on your list."},
  }};
  return banks;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string_view choose(const Bank& bank, std::uint64_t r) { return bank[r % bank.size()]; }

std::string task_context(const InteractionContext& ctx) {
  std::string out = "Scenario: " + (ctx.scenario_name.empty() ? std::string("daily activity") : ctx.scenario_name);
  if (!ctx.task_name.empty()) out += "\nCurrent task: " + ctx.task_name;
  if (!ctx.subtask_name.empty()) out += "\nCurrent step: " + ctx.subtask_name;
  return out;
}

std::string history_block(const InteractionContext& ctx) {
  if (ctx.history().empty()) return "(no interaction yet)";
  std::string out;
  for (const auto& u : ctx.history()) {
    out += std::string(speaker_name(u.speaker)) + ": " + u.text + "\n";
  }
  out.pop_back();
  return out;
}

constexpr std::string_view kStateGuidelines =
    "Forgetfulness: losing track of the step, repeating actions, asking what comes next.\n"
    "Confusion: unsure which item or action is right, misreading the list, puzzled looks.\n"
    "Anger: irritation or frustration, raised voice, abrupt movements, refusing help.\n"
    "Disengagement: withdrawn, little eye contact, short or trailing replies, wandering attention.";

constexpr std::string_view kBriefAssistGuidance =
    "a0 no assistance: say nothing.\n"
    "a1 verbal supportive: encouragement only.\n"
    "a2 verbal non-directive: a cue, usually a question, that does not say exactly what to do.\n"
    "a3 verbal directive: a clear statement of what to do next.";

constexpr std::string_view kDetailedAssistGuidance =
    "a0 no assistance: the caregiver stays silent and lets the person continue alone.\n"
    "a1 verbal supportive: encouragement to start, continue or finish the step without any task "
    "information, e.g. \"Keep at it\" or \"Great\".\n"
    "a2 verbal non-directive: a cue that helps the person notice what to do without naming it, "
    "typically phrased as a question, e.g. \"Is there anything missing?\" or \"Can you try another way?\".\n"
    "a3 verbal directive: an explicit instruction for the next action, e.g. \"Check the list again\" or "
    "\"The price is written on the tag\".\n"
    "Use the least intrusive wording that fits the chosen level, stay warm and patient, and keep to one "
    "or two short sentences.";

std::string describe_state(const StatusVector& s) {
  std::string out = s.to_string() + " (";
  for (Status st : kAllStatuses) {
    if (st != Status::kForgetful) out += ", ";
    out += std::string(status_name(st)) + "=" + (s.get(st) ? "yes" : "no");
  }
  return out + ")";
}

}  // namespace

std::string_view speaker_name(Speaker s) { return s == Speaker::kPerson ? "Person" : "Caregiver"; }

InteractionContext::InteractionContext(std::size_t history_cap) : cap_(history_cap) {
  if (cap_ == 0) throw UsageError("history cap must be >= 1");
}

void InteractionContext::record(Speaker speaker, std::string text) {
  if (speaker == Speaker::kCaregiver) latest_caregiver_ = text;
  history_.push_back({speaker, std::move(text)});
  while (history_.size() > cap_) history_.pop_front();
  ++turns_;
}

std::optional<std::string> InteractionContext::latest_person_behavior() const {
  for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
    if (it->speaker == Speaker::kPerson) return it->text;
  }
  return std::nullopt;
}

std::string BehaviorText::combined() const { return nonverbal + " | " + verbal; }

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kExact: return "exact";
    case Provenance::kParsed: return "parsed";
    case Provenance::kNoisy: return "noisy";
  }
  return "?";
}

std::string PromptVariant::name() const {
  std::string out = guidance == Guidance::kBrief ? "brief" : "detailed";
  if (include_state) out += "+state";
  return out;
}

std::optional<PromptVariant> PromptVariant::parse(std::string_view name) {
  for (const auto& v : all_prompt_variants()) {
    if (v.name() == name) return v;
  }
  return std::nullopt;
}

std::vector<PromptVariant> all_prompt_variants() {
  return {{Guidance::kBrief, false}, {Guidance::kBrief, true}, {Guidance::kDetailed, false},
          {Guidance::kDetailed, true}};
}

BackendError::BackendError(Kind kind, const std::string& message, std::string raw, int http_status,
                           int attempts)
    : std::runtime_error(message), kind_(kind), raw_(std::move(raw)), http_status_(http_status),
      attempts_(attempts) {}

std::string_view backend_error_kind_name(BackendError::Kind k) {
  switch (k) {
    case BackendError::Kind::kConfig: return "config";
    case BackendError::Kind::kTimeout: return "timeout";
    case BackendError::Kind::kConnection: return "connection";
    case BackendError::Kind::kHttpStatus: return "http-status";
    case BackendError::Kind::kMalformedReply: return "malformed-reply";
    case BackendError::Kind::kUnparseable: return "unparseable";
  }
  return "?";
}

std::vector<ChatMessage> behavior_prompt(const StatusVector& state, const InteractionContext& ctx) {
  std::string system =
      "## Role\n"
      "You play an older adult living with moderate dementia who is carrying out an everyday activity "
      "with the help of a caregiver. Stay in character at all times.";
  std::string user;
  user += "## Task context\n" + task_context(ctx) + "\n\n";
  user += "## Interaction history\n" + history_block(ctx) + "\n\n";
  user += "## Latest caregiver assistance\n" +
          (ctx.latest_caregiver_utterance().empty() ? std::string("(none)") : ctx.latest_caregiver_utterance()) +
          "\n\n";
  user += "## State guidelines\n" + std::string(kStateGuidelines) + "\n\n";
  user += "## Current state\n[Forgetfulness, Confusion, Anger, Disengagement] = " + state.to_string() +
          "\nShow every status marked 1 and none marked 0.\n\n";
  user +=
      "## Output format\n"
      "Reply with a JSON object {\"nonverbal\": \"...\", \"verbal\": \"...\"}. \"nonverbal\" describes "
      "actions, posture and facial expression in third person; \"verbal\" is what the person says "
      "(may be empty). No other text.";
  return {{"system", system}, {"user", user}};
}

std::vector<ChatMessage> perception_prompt(const BehaviorText& behavior, const InteractionContext& ctx) {
  std::string system =
      "## Purpose\n"
      "You are the perception module of an assistive robot. From the observed behavior of a person "
      "living with dementia, judge which cognitive and emotional statuses are present.";
  std::string user;
  user += "## Task context\n" + task_context(ctx) + "\n\n";
  user += "## Status definitions\n" + std::string(kStateGuidelines) + "\n\n";
  user += "## Observed behavior\nNonverbal: " + behavior.nonverbal + "\nVerbal: " +
          (behavior.verbal.empty() ? std::string("(silent)") : behavior.verbal) + "\n\n";
  user +=
      "## Output format\n"
      "Reply with only the binary vector [Forgetfulness, Confusion, Anger, Disengagement], "
      "using 1 for present and 0 for absent, e.g. [0,1,0,0].";
  return {{"system", system}, {"user", user}};
}

std::vector<ChatMessage> assist_prompt(AssistAction action, const InteractionContext& ctx,
                                       const PromptVariant& variant, const std::optional<StatusVector>& state) {
  if (variant.include_state && !state) {
    throw UsageError("prompt variant " + variant.name() + " needs the current state");
  }
  std::string system =
      "## Role and purpose\n"
      "You are a socially assistive robot acting as a caregiver for a person living with dementia. "
      "Help them finish the activity themselves with the least assistance that works.";
  std::string user;
  user += "## Task context\n" + task_context(ctx) + "\n\n";
  user += "## Interaction history\n" + history_block(ctx) + "\n\n";
  user += "## Current behavior\n" + ctx.latest_person_behavior().value_or("(not observed yet)") + "\n\n";
  user += "## Assistive action\n" + std::string(action_code(action)) + " " + std::string(action_label(action)) +
          "\n\n";
  user +=
      "## Output format\n"
      "Reply with only the words the robot says, one or two short sentences. For a0 reply with an "
      "empty string.\n\n";
  user += "## Assistance guidelines\n" +
          std::string(variant.guidance == Guidance::kBrief ? kBriefAssistGuidance : kDetailedAssistGuidance);
  if (variant.include_state) {
    user += "\n\n## Current state\n[Forgetfulness, Confusion, Anger, Disengagement] = " + describe_state(*state);
  }
  return {{"system", system}, {"user", user}};
}

std::optional<StatusVector> find_status_vector(std::string_view text) {
  for (std::size_t open = text.find('['); open != std::string_view::npos; open = text.find('[', open + 1)) {
    const auto close = text.find(']', open);
    if (close == std::string_view::npos) break;
    if (auto v = StatusVector::parse(text.substr(open, close - open + 1))) return v;
  }
  return std::nullopt;
}

std::string state_marker(const StatusVector& s) { return "{{state=" + s.to_string() + "}}"; }

std::optional<StatusVector> parse_state_marker(std::string_view text) {
  constexpr std::string_view open = "{{state=";
  const auto begin = text.rfind(open);
  if (begin == std::string_view::npos) return std::nullopt;
  const auto end = text.find("}}", begin);
  if (end == std::string_view::npos) return std::nullopt;
  return StatusVector::parse(text.substr(begin + open.size(), end - begin - open.size()));
}

std::uint64_t TemplateBackend::pick(std::uint64_t salt, const InteractionContext& ctx) const {
  std::uint64_t h = fnv1a(ctx.subtask_name, fnv1a(ctx.task_name));
  return derive_seed(seed_ ^ h, salt * 0x10000ULL + ctx.turns_recorded());
}

BehaviorText TemplateBackend::narrate(const StatusVector& state, const InteractionContext& ctx) {
  BehaviorText out;
  const std::uint64_t r = pick(static_cast<std::uint64_t>(state.index()) + 1, ctx);
  if (state.all_clear()) {
    const auto& p = cooperative_phrases();
    out.nonverbal = std::string(choose(p.nonverbal, r));
    out.verbal = std::string(choose(p.verbal, r >> 16));
  } else {
    int n = 0;
    for (Status s : kAllStatuses) {
      if (!state.get(s)) continue;
      const auto& p = phrase_banks()[static_cast<int>(s)];
      const std::uint64_t rs = mix_seed(r + static_cast<std::uint64_t>(s));
      if (n++ > 0) out.nonverbal += "; then ";
      out.nonverbal += choose(p.nonverbal, rs);
      auto v = choose(p.verbal, rs >> 16);
      if (!v.empty()) {
        if (!out.verbal.empty()) out.verbal += ' ';
        out.verbal += v;
      }
    }
  }
  out.nonverbal = "The person " + out.nonverbal + ". " + state_marker(state);
  return out;
}

PerceivedState TemplateBackend::perceive(const BehaviorText& behavior, const InteractionContext&, double noise,
                                         Rng& rng) {
  if (!(noise >= 0.0 && noise <= 1.0)) throw UsageError("perception noise must be in [0, 1]");
  auto s = parse_state_marker(behavior.nonverbal);
  if (!s) {
    throw BackendError(BackendError::Kind::kUnparseable, "no state marker in behavior text",
                       behavior.combined());
  }
  PerceivedState out;
  out.state = apply_perception_noise(*s, noise, rng);
  out.provenance = noise > 0.0 ? Provenance::kNoisy : Provenance::kExact;
  return out;
}

std::string TemplateBackend::render_assist(AssistAction action, const InteractionContext& ctx,
                                           const PromptVariant& variant, const std::optional<StatusVector>& state) {
  if (variant.include_state && !state) {
    throw UsageError("prompt variant " + variant.name() + " needs the current state");
  }
  if (action == AssistAction::kNoAssistance) return {};
  const std::uint64_t r = pick(0x100 + static_cast<std::uint64_t>(action_index(action)), ctx);
  std::string out(choose(assist_banks()[action_index(action)], r));
  if (variant.guidance == Guidance::kDetailed) {
    switch (action) {
      case AssistAction::kVerbalSupportive: out += " You're making good progress."; break;
      case AssistAction::kVerbalNonDirective: out += " Take a look around before you decide."; break;
      case AssistAction::kVerbalDirective:
        if (!ctx.subtask_name.empty()) out += " Next step: " + ctx.subtask_name + ".";
        break;
      default: break;
    }
  }
  if (variant.include_state && state->angry() && action == AssistAction::kVerbalSupportive) {
    out = "I understand this is frustrating. " + out;
  }
  return out;
}

}  // namespace caresim
