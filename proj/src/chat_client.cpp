#include "caresim/chat_client.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "caresim/environment.hpp"
#include "caresim/error.hpp"
#include "json_util.hpp"

namespace caresim {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

void ChatClientConfig::resolve_api_key() {
  const char* v = std::getenv(api_key_env.c_str());
  if (v == nullptr || *v == '\0') {
    throw BackendError(BackendError::Kind::kConfig,
                       "http backend needs an API credential in environment variable " + api_key_env);
  }
  api_key = v;
}

void ChatClientConfig::validate() const {
  auto fail = [](const std::string& m) { throw BackendError(BackendError::Kind::kConfig, m); };
  if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0) {
    fail("base_url must start with http:// or https://");
  }
  if (model.empty()) fail("model must not be empty");
  if (!(temperature >= 0.0 && temperature <= 2.0)) fail("temperature must be in [0, 2]");
  if (timeout_ms < 1) fail("timeout_ms must be >= 1");
  if (max_retries < 0) fail("max_retries must be >= 0");
  if (retry_base_delay_ms < 0) fail("retry_base_delay_ms must be >= 0");
}

ChatClientConfig chat_client_config_from_json(const std::string& text) {
  const json root = detail::parse_json(text, "http backend config");
  detail::require_object(root, "http backend config");
  detail::reject_unknown_keys(
      root, {"base_url", "model", "temperature", "timeout_ms", "max_retries", "retry_base_delay_ms", "api_key_env"},
      "http backend config");
  ChatClientConfig c;
  auto get_int = [&](const char* key, int& out) {
    if (!root.contains(key)) return;
    if (!root[key].is_number_integer()) throw ConfigError(std::string(key) + ": expected an integer");
    out = root[key].get<int>();
  };
  if (root.contains("base_url")) c.base_url = detail::get_string(root["base_url"], "base_url");
  if (root.contains("model")) c.model = detail::get_string(root["model"], "model");
  if (root.contains("temperature")) c.temperature = detail::get_number(root["temperature"], "temperature");
  if (root.contains("api_key_env")) c.api_key_env = detail::get_string(root["api_key_env"], "api_key_env");
  get_int("timeout_ms", c.timeout_ms);
  get_int("max_retries", c.max_retries);
  get_int("retry_base_delay_ms", c.retry_base_delay_ms);
  try {
    c.validate();
  } catch (const BackendError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ChatClientConfig load_chat_client_config(const std::filesystem::path& path) {
  return chat_client_config_from_json(detail::read_file(path));
}

std::string chat_request_body(const ChatClientConfig& config, const std::vector<ChatMessage>& messages) {
  json body;
  body["model"] = config.model;
  body["temperature"] = config.temperature;
  body["messages"] = json::array();
  for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  return body.dump();
}

std::string parse_chat_response(const std::string& body) {
  try {
    const json j = json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw BackendError(BackendError::Kind::kMalformedReply, "content is not a string", body);
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError(BackendError::Kind::kMalformedReply, std::string("malformed chat response: ") + e.what(),
                       body);
  }
}

ChatClient::ChatClient(ChatClientConfig config) : config_(std::move(config)) {
  config_.validate();
  if (config_.api_key.empty()) config_.resolve_api_key();
  const auto scheme_end = config_.base_url.find("://") + 3;
  const auto path_begin = config_.base_url.find('/', scheme_end);
  scheme_host_port_ = config_.base_url.substr(0, path_begin);
  path_prefix_ = path_begin == std::string::npos ? "" : config_.base_url.substr(path_begin);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (config_.base_url.rfind("https://", 0) == 0) {
    throw BackendError(BackendError::Kind::kConfig, "this build has no TLS support; use an http:// base_url");
  }
#endif
}

std::string ChatClient::complete(const std::vector<ChatMessage>& messages) {
  const auto deadline = Clock::now() + std::chrono::milliseconds(config_.timeout_ms);
  const std::string body = chat_request_body(config_, messages);
  const std::string path = path_prefix_ + "/chat/completions";
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const int max_attempts = config_.max_retries + 1;
  BackendError last(BackendError::Kind::kTimeout, "deadline reached before the first attempt");
  last_attempts_ = 0;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (remaining.count() <= 0) break;

    httplib::Client cli(scheme_host_port_);
    cli.set_connection_timeout(remaining);
    cli.set_read_timeout(remaining);
    cli.set_write_timeout(remaining);
    last_attempts_ = attempt;
    auto res = cli.Post(path, headers, body, "application/json");

    bool retryable = false;
    if (!res) {
      const auto err = res.error();
      const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                             err == httplib::Error::Write || Clock::now() >= deadline;
      last = BackendError(timed_out ? BackendError::Kind::kTimeout : BackendError::Kind::kConnection,
                          "request to " + scheme_host_port_ + path + " failed: " + httplib::to_string(err), {}, 0,
                          attempt);
      retryable = true;
    } else if (res->status >= 200 && res->status < 300) {
      try {
        return parse_chat_response(res->body);
      } catch (const BackendError& e) {
        throw BackendError(e.kind(), e.what(), e.raw(), res->status, attempt);
      }
    } else {
      last = BackendError(BackendError::Kind::kHttpStatus, "endpoint returned HTTP " + std::to_string(res->status),
                          res->body, res->status, attempt);
      retryable = res->status == 408 || res->status == 429 || res->status >= 500;
    }
    if (!retryable) throw last;
    if (attempt == max_attempts) break;

    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    const long long backoff = static_cast<long long>(config_.retry_base_delay_ms) << std::min(attempt - 1, 16);
    const auto wait = std::chrono::milliseconds(std::min<long long>(backoff, std::max<long long>(0, left.count())));
    std::this_thread::sleep_for(wait);
  }
  if (Clock::now() >= deadline && last.kind() != BackendError::Kind::kHttpStatus) {
    throw BackendError(BackendError::Kind::kTimeout,
                       "no reply within " + std::to_string(config_.timeout_ms) + " ms (" + last.what() + ")",
                       last.raw(), last.http_status(), last_attempts_);
  }
  throw last;
}

namespace {

std::string strip_code_fence(std::string s) {
  const auto first = s.find("```");
  if (first == std::string::npos) return s;
  auto start = s.find('\n', first);
  const auto last = s.rfind("```");
  if (start == std::string::npos || last <= start) return s;
  return s.substr(start + 1, last - start - 1);
}

}  // namespace

BehaviorText HttpBackend::narrate(const StatusVector& state, const InteractionContext& ctx) {
  const std::string reply = client_.complete(behavior_prompt(state, ctx));
  try {
    const json j = json::parse(strip_code_fence(reply));
    BehaviorText out;
    out.nonverbal = j.at("nonverbal").get<std::string>();
    out.verbal = j.contains("verbal") && !j["verbal"].is_null() ? j["verbal"].get<std::string>() : "";
    return out;
  } catch (const json::exception& e) {
    throw BackendError(BackendError::Kind::kMalformedReply, std::string("behavior reply is not the expected JSON: ") +
                                                                e.what(),
                       reply);
  }
}

PerceivedState HttpBackend::perceive(const BehaviorText& behavior, const InteractionContext& ctx, double noise,
                                     Rng& rng) {
  if (!(noise >= 0.0 && noise <= 1.0)) throw UsageError("perception noise must be in [0, 1]");
  const std::string reply = client_.complete(perception_prompt(behavior, ctx));
  auto s = find_status_vector(reply);
  if (!s) throw BackendError(BackendError::Kind::kUnparseable, "no status vector in perception reply", reply);
  PerceivedState out;
  out.state = apply_perception_noise(*s, noise, rng);
  out.provenance = noise > 0.0 ? Provenance::kNoisy : Provenance::kParsed;
  return out;
}

std::string HttpBackend::render_assist(AssistAction action, const InteractionContext& ctx,
                                       const PromptVariant& variant, const std::optional<StatusVector>& state) {
  auto messages = assist_prompt(action, ctx, variant, state);
  if (action == AssistAction::kNoAssistance) return {};
  std::string reply = client_.complete(messages);
  while (!reply.empty() && (reply.back() == '\n' || reply.back() == ' ')) reply.pop_back();
  return reply;
}

}  // namespace caresim
