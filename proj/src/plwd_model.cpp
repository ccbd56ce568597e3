#include "caresim/plwd_model.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "caresim/error.hpp"
#include "json_util.hpp"

namespace caresim {

namespace {

constexpr int F = static_cast<int>(Status::kForgetful);
constexpr int C = static_cast<int>(Status::kConfused);
constexpr int A = static_cast<int>(Status::kAngry);
constexpr int D = static_cast<int>(Status::kDisengaged);

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError(what + " must be a probability in [0, 1], got " + std::to_string(p));
  }
}

using nlohmann::json;

std::array<double, kNumStatuses> read_status_map(const json& j, const std::string& where,
                                                 std::array<double, kNumStatuses> values) {
  detail::require_object(j, where);
  for (const auto& [key, value] : j.items()) {
    auto s = parse_status(key);
    if (!s) throw ConfigError(where + ": unknown status '" + key + "'");
    values[static_cast<int>(*s)] = detail::get_number(value, where + "." + key);
  }
  return values;
}

json status_map_to_json(const std::array<double, kNumStatuses>& values) {
  json j = json::object();
  for (Status s : kAllStatuses) j[std::string(status_name(s))] = values[static_cast<int>(s)];
  return j;
}

}  // namespace

TransitionModel TransitionModel::defaults() {
  TransitionModel m;
  m.base_onset[F] = 0.30;
  m.base_onset[C] = 0.30;
  m.base_onset[A] = 0.05;
  m.base_onset[D] = 0.20;

  m.persistence[F] = 0.99;
  m.persistence[C] = 0.99;
  m.persistence[A] = 1.00;
  m.persistence[D] = 0.99;

  // Row: status present at t. Column: status whose onset is raised.
  m.influence[F] = {0.00, 0.05, 0.06, 0.02};
  m.influence[C] = {0.07, 0.00, 0.08, 0.02};
  m.influence[A] = {0.07, 0.08, 0.00, 0.10};
  m.influence[D] = {0.07, 0.10, 0.20, 0.00};

  auto& supportive = m.assist_overrides[action_index(AssistAction::kVerbalSupportive)];
  supportive[A] = AssistOverride{0.05, 0.0};
  supportive[D] = AssistOverride{0.05, 0.0};

  auto& non_directive = m.assist_overrides[action_index(AssistAction::kVerbalNonDirective)];
  non_directive[F] = AssistOverride{0.40, 0.0};
  non_directive[C] = AssistOverride{0.60, 0.0};

  auto& directive = m.assist_overrides[action_index(AssistAction::kVerbalDirective)];
  directive[F] = AssistOverride{0.05, 0.0};
  directive[C] = AssistOverride{0.05, 0.0};

  m.skip_rules[F] = SkipRule{Status::kConfused, 0.5, 0.2};
  m.skip_rules[C] = SkipRule{Status::kForgetful, 0.5, 0.2};
  m.skip_rules[A] = SkipRule{std::nullopt, 0.0, 0.5};
  m.skip_rules[D] = SkipRule{std::nullopt, 0.0, 0.5};
  return m;
}

void TransitionModel::validate() const {
  for (Status s : kAllStatuses) {
    const int i = static_cast<int>(s);
    const std::string name(status_name(s));
    check_probability(base_onset[i], "base_onset." + name);
    check_probability(persistence[i], "persistence." + name);
    for (Status t : kAllStatuses) {
      const int k = static_cast<int>(t);
      if (i == k) continue;
      check_probability(influence[i][k], "influence." + name + "." + std::string(status_name(t)));
    }
    const SkipRule& rule = skip_rules[i];
    if (rule.partner == s) throw ConfigError("skip_rules." + name + ": partner must differ");
    check_probability(rule.with_partner, "skip_rules." + name + ".with_partner");
    check_probability(rule.alone, "skip_rules." + name + ".alone");
  }
  for (AssistAction a : kAllActions) {
    for (Status s : kAllStatuses) {
      const auto& o = assist_overrides[action_index(a)][static_cast<int>(s)];
      if (!o) continue;
      const std::string where =
          "assist_overrides." + std::string(action_code(a)) + "." + std::string(status_name(s));
      check_probability(o->persist_prob, where + ".persist");
      check_probability(o->onset_prob, where + ".onset");
    }
  }
}

double onset_probability(const TransitionModel& model, const StatusVector& current,
                         AssistAction assist, Status target) {
  const int t = static_cast<int>(target);
  if (const auto& o = model.assist_overrides[action_index(assist)][t]) {
    return current.get(target) ? o->persist_prob : o->onset_prob;
  }
  if (current.get(target)) return model.persistence[t];
  double p = model.base_onset[t];
  for (Status other : kAllStatuses) {
    if (other != target && current.get(other)) p += model.influence[static_cast<int>(other)][t];
  }
  return std::clamp(p, 0.0, 1.0);
}

double onset_probability(const TransitionModel& model, const StatusVector& current,
                         AssistAction assist, int target_id) {
  return onset_probability(model, current, assist, status_from_id(target_id));
}

StatusVector transition(const TransitionModel& model, const StatusVector& current,
                        AssistAction assist, Rng& rng) {
  StatusVector next;
  for (Status s : kAllStatuses) {
    next.set(s, rng.bernoulli(onset_probability(model, current, assist, s)));
  }
  return next;
}

double skip_probability(const TransitionModel& model, const StatusVector& current, Status target) {
  if (!current.get(target)) return 0.0;
  const SkipRule& rule = model.skip_rules[static_cast<int>(target)];
  if (rule.partner && current.get(*rule.partner)) return rule.with_partner;
  return rule.alone;
}

StatusVector step_skip(const TransitionModel& model, const StatusVector& current, Rng& rng) {
  StatusVector next;
  for (Status s : kAllStatuses) {
    next.set(s, rng.bernoulli(skip_probability(model, current, s)));
  }
  return next;
}

TransitionModel transition_model_from_json(const std::string& text) {
  const json root = detail::parse_json(text, "transition model");
  detail::require_object(root, "transition model");
  TransitionModel m = TransitionModel::defaults();

  for (const auto& [key, value] : root.items()) {
    if (key == "base_onset") {
      m.base_onset = read_status_map(value, key, m.base_onset);
    } else if (key == "persistence") {
      m.persistence = read_status_map(value, key, m.persistence);
    } else if (key == "influence") {
      detail::require_object(value, key);
      for (const auto& [from_key, row] : value.items()) {
        auto from = parse_status(from_key);
        if (!from) throw ConfigError("influence: unknown status '" + from_key + "'");
        auto& target_row = m.influence[static_cast<int>(*from)];
        target_row = read_status_map(row, "influence." + from_key, target_row);
        if (target_row[static_cast<int>(*from)] != 0.0) {
          throw ConfigError("influence." + from_key + ": a status cannot influence itself");
        }
      }
    } else if (key == "assist_overrides") {
      detail::require_object(value, key);
      for (const auto& [action_key, per_status] : value.items()) {
        auto action = parse_action(action_key);
        if (!action) throw ConfigError("assist_overrides: unknown action '" + action_key + "'");
        const std::string where = "assist_overrides." + action_key;
        detail::require_object(per_status, where);
        for (const auto& [status_key, pair] : per_status.items()) {
          auto status = parse_status(status_key);
          if (!status) throw ConfigError(where + ": unknown status '" + status_key + "'");
          auto& slot = m.assist_overrides[action_index(*action)][static_cast<int>(*status)];
          if (pair.is_null()) {
            slot.reset();
            continue;
          }
          const std::string w = where + "." + status_key;
          detail::require_object(pair, w);
          detail::reject_unknown_keys(pair, {"persist", "onset"}, w);
          AssistOverride o = slot.value_or(AssistOverride{});
          if (pair.contains("persist")) o.persist_prob = detail::get_number(pair["persist"], w + ".persist");
          if (pair.contains("onset")) o.onset_prob = detail::get_number(pair["onset"], w + ".onset");
          slot = o;
        }
      }
    } else if (key == "skip_rules") {
      detail::require_object(value, key);
      for (const auto& [status_key, rule_json] : value.items()) {
        auto status = parse_status(status_key);
        if (!status) throw ConfigError("skip_rules: unknown status '" + status_key + "'");
        const std::string w = "skip_rules." + status_key;
        detail::require_object(rule_json, w);
        detail::reject_unknown_keys(rule_json, {"partner", "with_partner", "alone"}, w);
        SkipRule& rule = m.skip_rules[static_cast<int>(*status)];
        if (rule_json.contains("partner")) {
          const auto& p = rule_json["partner"];
          if (p.is_null()) {
            rule.partner.reset();
          } else {
            auto partner = p.is_string() ? parse_status(p.get<std::string>()) : std::nullopt;
            if (!partner) throw ConfigError(w + ".partner: expected a status name or null");
            rule.partner = partner;
          }
        }
        if (rule_json.contains("with_partner")) {
          rule.with_partner = detail::get_number(rule_json["with_partner"], w + ".with_partner");
        }
        if (rule_json.contains("alone")) rule.alone = detail::get_number(rule_json["alone"], w + ".alone");
      }
    } else {
      throw ConfigError("transition model: unknown field '" + key + "'");
    }
  }
  m.validate();
  return m;
}

TransitionModel load_transition_model(const std::filesystem::path& path) {
  return transition_model_from_json(detail::read_file(path));
}

std::string transition_model_to_json(const TransitionModel& m) {
  json root;
  root["base_onset"] = status_map_to_json(m.base_onset);
  root["persistence"] = status_map_to_json(m.persistence);
  json influence = json::object();
  for (Status from : kAllStatuses) {
    json row = json::object();
    for (Status to : kAllStatuses) {
      if (from == to) continue;
      row[std::string(status_name(to))] = m.influence[static_cast<int>(from)][static_cast<int>(to)];
    }
    influence[std::string(status_name(from))] = row;
  }
  root["influence"] = influence;
  json overrides = json::object();
  for (AssistAction a : kAllActions) {
    json per_status = json::object();
    for (Status s : kAllStatuses) {
      if (const auto& o = m.assist_overrides[action_index(a)][static_cast<int>(s)]) {
        per_status[std::string(status_name(s))] = {{"persist", o->persist_prob},
                                                   {"onset", o->onset_prob}};
      }
    }
    if (!per_status.empty()) overrides[std::string(action_code(a))] = per_status;
  }
  root["assist_overrides"] = overrides;
  json skip = json::object();
  for (Status s : kAllStatuses) {
    const SkipRule& rule = m.skip_rules[static_cast<int>(s)];
    json r;
    r["partner"] = rule.partner ? json(std::string(status_name(*rule.partner))) : json(nullptr);
    r["with_partner"] = rule.with_partner;
    r["alone"] = rule.alone;
    skip[std::string(status_name(s))] = r;
  }
  root["skip_rules"] = skip;
  return root.dump(2) + "\n";
}

}  // namespace caresim
