#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "caresim/behavior_text.hpp"

namespace caresim {

inline constexpr const char* kDefaultApiKeyEnv = "CARESIM_API_KEY";

/// Settings for a chat-completions-compatible endpoint.
struct ChatClientConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  double temperature = 0.7;
  /// Overall deadline for one call, including retries and backoff.
  int timeout_ms = 30000;
  /// Extra attempts after the first one.
  int max_retries = 2;
  int retry_base_delay_ms = 250;
  std::string api_key_env = kDefaultApiKeyEnv;
  /// Resolved credential; filled from `api_key_env` by resolve_api_key().
  std::string api_key;

  /// Reads the credential from the environment. Throws BackendError(kConfig)
  /// when the variable is unset or empty.
  void resolve_api_key();
  void validate() const;
};

/// JSON keys: base_url, model, temperature, timeout_ms, max_retries,
/// retry_base_delay_ms, api_key_env. Unknown keys are rejected.
ChatClientConfig chat_client_config_from_json(const std::string& text);
ChatClientConfig load_chat_client_config(const std::filesystem::path& path);

/// Request body for POST {base_url}/chat/completions.
std::string chat_request_body(const ChatClientConfig& config, const std::vector<ChatMessage>& messages);
/// choices[0].message.content of a response body; throws
/// BackendError(kMalformedReply) otherwise.
std::string parse_chat_response(const std::string& body);

/// Blocking client. Retries connection failures, timeouts, 408, 429 and 5xx
/// with exponential backoff, at most `max_retries` times and never past the
/// overall deadline. Other statuses and malformed bodies fail immediately.
class ChatClient {
 public:
  explicit ChatClient(ChatClientConfig config);

  std::string complete(const std::vector<ChatMessage>& messages);

  const ChatClientConfig& config() const { return config_; }
  /// Attempts made by the last complete() call.
  int last_attempts() const { return last_attempts_; }

 private:
  ChatClientConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  int last_attempts_ = 0;
};

/// Text backend that delegates generation and perception to a chat model.
class HttpBackend final : public TextBackend {
 public:
  explicit HttpBackend(ChatClientConfig config) : client_(std::move(config)) {}

  std::string name() const override { return "http"; }
  BehaviorText narrate(const StatusVector& state, const InteractionContext& ctx) override;
  PerceivedState perceive(const BehaviorText& behavior, const InteractionContext& ctx, double noise,
                          Rng& rng) override;
  std::string render_assist(AssistAction action, const InteractionContext& ctx, const PromptVariant& variant,
                            const std::optional<StatusVector>& state) override;

  ChatClient& client() { return client_; }

 private:
  ChatClient client_;
};

}  // namespace caresim
