#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sense {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct LlmRequest {
  std::string model_name;
  std::vector<ChatMessage> messages;
  double temperature = 0.2;
  int max_tokens = 2048;

  bool operator==(const LlmRequest&) const = default;
};

enum class FinishReason { Stop, Length, Error };

struct TokenUsage {
  long long prompt_tokens = 0;
  long long completion_tokens = 0;

  bool operator==(const TokenUsage&) const = default;
};

struct LlmResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::Stop;
  std::optional<TokenUsage> usage;

  bool operator==(const LlmResponse&) const = default;
};

class LlmError : public std::runtime_error {
 public:
  enum class Kind {
    BackendUnavailable,  // network/timeout after retries
    RequestRejected,     // HTTP 4xx
    ScriptMiss,          // mock has no entry for this request
    AmbiguousScript      // more than one mock entry matches
  };

  LlmError(Kind kind, const std::string& message, int status = 0)
      : std::runtime_error(message), kind_(kind), status_(status) {}

  Kind kind() const { return kind_; }
  int status() const { return status_; }

 private:
  Kind kind_;
  int status_;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string describe() const = 0;

  // Called by complete() after request validation; not for direct use.
  virtual LlmResponse complete_raw(const LlmRequest& request) = 0;
};

// Validates the request (non-empty messages, temperature in [0, 2],
// positive max_tokens; throws std::invalid_argument before any dispatch)
// and hands it to the backend.
LlmResponse complete(LlmBackend& backend, const LlmRequest& request);

// One scripted exchange. Exactly one of `match` (substring of the last
// User message) or `turn` (1-based call ordinal) selects it. `fail`
// simulates a backend error instead of returning `completion`.
struct MockScriptEntry {
  std::optional<std::string> match;
  std::optional<int> turn;
  std::string completion;
  std::optional<std::string> fail;  // "unavailable" or "rejected"
  int status = 429;                 // used with fail == "rejected"

  bool operator==(const MockScriptEntry&) const = default;
};

struct MockScript {
  std::vector<MockScriptEntry> entries;

  static MockScript load(const std::string& json_text);
  static MockScript load_file(const std::string& path);

  bool operator==(const MockScript&) const = default;
};

// Deterministic scripted backend; consumes no network. Turn matching is
// serialized per instance so concurrent callers see a consistent ordinal.
class MockBackend : public LlmBackend {
 public:
  // Throws std::invalid_argument on ambiguous scripts (duplicate turn
  // ordinals or duplicate match texts).
  explicit MockBackend(MockScript script);

  std::string describe() const override { return "mock"; }
  LlmResponse complete_raw(const LlmRequest& request) override;

  int turns_served() const;

 private:
  MockScript script_;
  mutable std::mutex mu_;
  int turn_ = 0;
};

std::unique_ptr<LlmBackend> mock_backend_from_script(MockScript script);

struct RemoteConfig {
  std::string endpoint_url;  // e.g. https://api.example.com/v1/chat/completions
  std::string api_key;
  int max_retries = 3;       // transient failures retried this many times
  int retry_delay_ms = 250;  // base of the exponential backoff
  int timeout_seconds = 60;
};

// OpenAI-style chat-completion client. Transient failures (connect errors,
// HTTP 5xx) are retried with exponential backoff; the serialized request
// body is reused byte-for-byte across retries. HTTP 4xx raises
// RequestRejected immediately.
class RemoteBackend : public LlmBackend {
 public:
  explicit RemoteBackend(RemoteConfig config);

  std::string describe() const override { return "remote"; }
  LlmResponse complete_raw(const LlmRequest& request) override;

 private:
  RemoteConfig config_;
};

// Serialized wire form of a request; exposed so tests can pin the contract.
std::string request_body_json(const LlmRequest& request);

}  // namespace sense
