#include "caresim/qlearning.hpp"

#include <algorithm>
#include <cmath>

#include "caresim/error.hpp"
#include "text_util.hpp"

namespace caresim {

namespace {

constexpr std::string_view kQTableHeader = "# caresim q-table v1";
constexpr std::string_view kPolicyHeader = "# caresim policy v1";

}  // namespace

double QTable::max_value(const StatusVector& s) const {
  const Row& r = rows_[s.index()];
  return *std::max_element(r.begin(), r.end());
}

std::string QTable::serialize() const {
  std::string out(kQTableHeader);
  out += "\n# index state q_a0 q_a1 q_a2 q_a3\n";
  for (int i = 0; i < kNumStates; ++i) {
    out += std::to_string(i) + ' ' + StatusVector::from_index(i).to_string();
    for (double v : rows_[i]) out += ' ' + detail::format_double(v);
    out += '\n';
  }
  return out;
}

QTable QTable::parse(const std::string& text) {
  auto ls = detail::lines(text);
  if (ls.empty() || ls.front() != kQTableHeader) throw FormatError("q-table: missing header");
  QTable q;
  std::array<bool, kNumStates> seen{};
  for (std::size_t n = 1; n < ls.size(); ++n) {
    if (ls[n].empty() || ls[n].front() == '#') continue;
    auto tok = detail::tokens(ls[n]);
    const std::string where = "q-table line " + std::to_string(n + 1);
    if (tok.size() != 2 + kNumActions) throw FormatError(where + ": expected 6 fields");
    auto idx = detail::parse_int(tok[0]);
    if (!idx || *idx < 0 || *idx >= kNumStates) throw FormatError(where + ": bad state index");
    auto vec = StatusVector::parse(tok[1]);
    if (!vec || vec->index() != *idx) throw FormatError(where + ": state vector does not match index");
    if (seen[*idx]) throw FormatError(where + ": duplicate state");
    seen[*idx] = true;
    for (int a = 0; a < kNumActions; ++a) {
      auto v = detail::parse_double(tok[2 + a]);
      if (!v || !std::isfinite(*v)) throw FormatError(where + ": bad value");
      q.rows_[*idx][a] = *v;
    }
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
    throw FormatError("q-table: not all 16 states present");
  }
  return q;
}

void QTable::save(const std::filesystem::path& path) const { detail::write_text(path, serialize()); }
QTable QTable::load(const std::filesystem::path& path) { return parse(detail::read_text(path)); }

Policy Policy::uniform(AssistAction a) {
  std::array<AssistAction, kNumStates> acts;
  acts.fill(a);
  return Policy(acts);
}

std::string Policy::id() const {
  std::string out(kNumStates, '0');
  for (int i = 0; i < kNumStates; ++i) out[i] = static_cast<char>('0' + action_index(actions_[i]));
  return out;
}

Policy Policy::from_id(const std::string& id) {
  if (id.size() != kNumStates) throw FormatError("policy id must have 16 digits: '" + id + "'");
  std::array<AssistAction, kNumStates> acts;
  for (int i = 0; i < kNumStates; ++i) {
    if (id[i] < '0' || id[i] >= '0' + kNumActions) throw FormatError("bad policy id: '" + id + "'");
    acts[i] = action_from_index(id[i] - '0');
  }
  return Policy(acts);
}

std::string Policy::serialize() const {
  std::string out(kPolicyHeader);
  out += "\n# id " + id() + "\n# index state action label\n";
  for (int i = 0; i < kNumStates; ++i) {
    out += std::to_string(i) + ' ' + StatusVector::from_index(i).to_string() + ' ' +
           std::string(action_code(actions_[i])) + ' ' + std::string(action_label(actions_[i])) + '\n';
  }
  return out;
}

Policy Policy::parse(const std::string& text) {
  auto ls = detail::lines(text);
  if (ls.empty() || ls.front() != kPolicyHeader) throw FormatError("policy: missing header");
  Policy p;
  std::array<bool, kNumStates> seen{};
  for (std::size_t n = 1; n < ls.size(); ++n) {
    if (ls[n].empty() || ls[n].front() == '#') continue;
    auto tok = detail::tokens(ls[n]);
    const std::string where = "policy line " + std::to_string(n + 1);
    if (tok.size() < 3) throw FormatError(where + ": expected index, state and action");
    auto idx = detail::parse_int(tok[0]);
    if (!idx || *idx < 0 || *idx >= kNumStates) throw FormatError(where + ": bad state index");
    auto vec = StatusVector::parse(tok[1]);
    if (!vec || vec->index() != *idx) throw FormatError(where + ": state vector does not match index");
    auto act = parse_action(tok[2]);
    if (!act) throw FormatError(where + ": unknown action '" + std::string(tok[2]) + "'");
    if (seen[*idx]) throw FormatError(where + ": duplicate state");
    seen[*idx] = true;
    p.actions_[*idx] = *act;
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
    throw FormatError("policy: not all 16 states present");
  }
  return p;
}

void Policy::save(const std::filesystem::path& path) const { detail::write_text(path, serialize()); }
Policy Policy::load(const std::filesystem::path& path) { return parse(detail::read_text(path)); }

EpsilonSchedule EpsilonSchedule::constant(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must be in [0, 1]");
  return EpsilonSchedule(ConstantEpsilon{epsilon});
}

EpsilonSchedule EpsilonSchedule::decaying(double eps_min, double eps_max, double lambda) {
  if (!(0.0 <= eps_min && eps_min <= eps_max && eps_max <= 1.0)) {
    throw ConfigError("decay schedule needs 0 <= eps_min <= eps_max <= 1");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("decay rate lambda must be > 0");
  return EpsilonSchedule(DecayingEpsilon{eps_min, eps_max, lambda});
}

EpsilonSchedule EpsilonSchedule::decaying_through(double eps_min, double eps_max, double target_epoch,
                                                  double target_epsilon) {
  if (!(target_epoch > 0.0)) throw ConfigError("decay target epoch must be > 0");
  if (!(eps_min < target_epsilon && target_epsilon < eps_max)) {
    throw ConfigError("decay target epsilon must lie strictly between eps_min and eps_max");
  }
  const double lambda = std::log((eps_max - eps_min) / (target_epsilon - eps_min)) / target_epoch;
  return decaying(eps_min, eps_max, lambda);
}

EpsilonSchedule EpsilonSchedule::default_decay() { return decaying_through(0.03, 1.0, 300.0, 0.8); }

double EpsilonSchedule::at(long long epoch) const {
  if (const auto* c = std::get_if<ConstantEpsilon>(&v_)) return c->epsilon;
  const auto& d = std::get<DecayingEpsilon>(v_);
  return d.eps_min + (d.eps_max - d.eps_min) * std::exp(-d.lambda * static_cast<double>(epoch));
}

std::string EpsilonSchedule::describe() const {
  if (const auto* c = std::get_if<ConstantEpsilon>(&v_)) {
    return "constant(epsilon=" + detail::format_double(c->epsilon) + ")";
  }
  const auto& d = std::get<DecayingEpsilon>(v_);
  return "decay(eps_min=" + detail::format_double(d.eps_min) + ", eps_max=" + detail::format_double(d.eps_max) +
         ", lambda=" + detail::format_double(d.lambda) + ")";
}

double epsilon_at(const EpsilonSchedule& schedule, long long epoch) { return schedule.at(epoch); }

AssistAction select_action(const QTable& q, const StatusVector& state, double epsilon, Rng& rng) {
  const double explore = rng.uniform();
  const double pick = rng.uniform();
  if (explore < epsilon) return action_from_index(static_cast<int>(pick * kNumActions));

  const auto& row = q.row(state.index());
  const double best = *std::max_element(row.begin(), row.end());
  std::array<int, kNumActions> ties{};
  int n = 0;
  for (int a = 0; a < kNumActions; ++a) {
    if (row[a] == best) ties[n++] = a;
  }
  return action_from_index(ties[static_cast<int>(pick * n)]);
}

void q_update(QTable& q, const StatusVector& s, AssistAction a, double reward, const StatusVector& s_next,
              bool terminal, double alpha, double gamma) {
  const double bootstrap = terminal ? 0.0 : q.max_value(s_next);
  double& v = q.at(s, a);
  v += alpha * (reward + gamma * bootstrap - v);
}

Policy extract_policy(const QTable& q) {
  std::array<AssistAction, kNumStates> acts;
  for (int i = 0; i < kNumStates; ++i) {
    const auto& row = q.row(i);
    acts[i] = action_from_index(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return Policy(acts);
}

}  // namespace caresim
