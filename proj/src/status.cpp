#include "caresim/status.hpp"

#include <cctype>

#include "caresim/error.hpp"

namespace caresim {

namespace {

constexpr std::array<std::string_view, kNumStatuses> kStatusNames = {
    "forgetful", "confused", "angry", "disengaged"};
constexpr std::array<std::string_view, kNumActions> kActionCodes = {"a0", "a1", "a2", "a3"};
constexpr std::array<std::string_view, kNumActions> kActionLabels = {
    "NoAssistance", "VerbalSupportive", "VerbalNonDirective", "VerbalDirective"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view status_name(Status s) { return kStatusNames[static_cast<int>(s)]; }

std::optional<Status> parse_status(std::string_view name) {
  for (int i = 0; i < kNumStatuses; ++i) {
    if (kStatusNames[i] == name) return static_cast<Status>(i);
  }
  return std::nullopt;
}

Status status_from_id(int id) {
  if (id < 0 || id >= kNumStatuses) {
    throw UsageError("status id out of range: " + std::to_string(id));
  }
  return static_cast<Status>(id);
}

StatusVector StatusVector::from_index(int index) {
  if (index < 0 || index >= kNumStates) {
    throw UsageError("state index out of range: " + std::to_string(index));
  }
  return StatusVector((index >> 3) & 1, (index >> 2) & 1, (index >> 1) & 1, index & 1);
}

std::string StatusVector::to_string() const {
  std::string out = "[";
  for (int i = 0; i < kNumStatuses; ++i) {
    if (i > 0) out += ',';
    out += bits_[i] ? '1' : '0';
  }
  out += ']';
  return out;
}

std::optional<StatusVector> StatusVector::parse(std::string_view text) {
  text = trim(text);
  if (text.size() < 2 || text.front() != '[' || text.back() != ']') return std::nullopt;
  text = text.substr(1, text.size() - 2);
  StatusVector v;
  int n = 0;
  while (true) {
    auto comma = text.find(',');
    auto field = trim(text.substr(0, comma));
    if (n >= kNumStatuses || field.size() != 1 || (field[0] != '0' && field[0] != '1')) {
      return std::nullopt;
    }
    v.bits_[n++] = field[0] == '1';
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (n != kNumStatuses) return std::nullopt;
  return v;
}

AssistAction action_from_index(int index) {
  if (index < 0 || index >= kNumActions) {
    throw UsageError("action index out of range: " + std::to_string(index));
  }
  return static_cast<AssistAction>(index);
}

std::string_view action_code(AssistAction a) { return kActionCodes[action_index(a)]; }
std::string_view action_label(AssistAction a) { return kActionLabels[action_index(a)]; }

std::optional<AssistAction> parse_action(std::string_view text) {
  text = trim(text);
  for (int i = 0; i < kNumActions; ++i) {
    if (text == kActionCodes[i] || text == kActionLabels[i]) return static_cast<AssistAction>(i);
  }
  return std::nullopt;
}

}  // namespace caresim
