#include "sense/llm.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

namespace sense {

namespace {

using njson = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "?";
}

LlmResponse complete(LlmBackend& backend, const LlmRequest& request) {
  if (request.messages.empty()) {
    throw std::invalid_argument("request must carry at least one message");
  }
  if (request.temperature < 0.0 || request.temperature > 2.0) {
    throw std::invalid_argument("temperature must be within [0, 2]");
  }
  if (request.max_tokens <= 0) {
    throw std::invalid_argument("max_tokens must be positive");
  }
  return backend.complete_raw(request);
}

MockScript MockScript::load(const std::string& json_text) {
  njson doc;
  try {
    doc = njson::parse(json_text);
  } catch (const njson::parse_error& e) {
    throw std::invalid_argument(std::string("mock script is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw std::invalid_argument("mock script must be a JSON array");

  MockScript script;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const njson& je = doc[i];
    if (!je.is_object()) {
      throw std::invalid_argument("mock script entry " + std::to_string(i) +
                                  " must be an object");
    }
    MockScriptEntry e;
    if (je.contains("match")) e.match = je["match"].get<std::string>();
    if (je.contains("turn")) e.turn = je["turn"].get<int>();
    if (je.contains("completion")) e.completion = je["completion"].get<std::string>();
    if (je.contains("fail")) e.fail = je["fail"].get<std::string>();
    if (je.contains("status")) e.status = je["status"].get<int>();
    if (e.match.has_value() == e.turn.has_value()) {
      throw std::invalid_argument("mock script entry " + std::to_string(i) +
                                  " needs exactly one of 'match' or 'turn'");
    }
    if (e.fail && *e.fail != "unavailable" && *e.fail != "rejected") {
      throw std::invalid_argument("mock script entry " + std::to_string(i) +
                                  " has unknown fail kind '" + *e.fail + "'");
    }
    script.entries.push_back(std::move(e));
  }
  return script;
}

MockScript MockScript::load_file(const std::string& path) { return load(read_file(path)); }

MockBackend::MockBackend(MockScript script) : script_(std::move(script)) {
  for (std::size_t i = 0; i < script_.entries.size(); ++i) {
    for (std::size_t j = i + 1; j < script_.entries.size(); ++j) {
      const auto& a = script_.entries[i];
      const auto& b = script_.entries[j];
      if (a.turn && b.turn && *a.turn == *b.turn) {
        throw std::invalid_argument("mock script has two entries for turn " +
                                    std::to_string(*a.turn));
      }
      if (a.match && b.match && *a.match == *b.match) {
        throw std::invalid_argument("mock script has two entries matching '" + *a.match + "'");
      }
    }
  }
}

LlmResponse MockBackend::complete_raw(const LlmRequest& request) {
  std::lock_guard<std::mutex> lock(mu_);
  ++turn_;

  const std::string* last_user = nullptr;
  for (const auto& m : request.messages) {
    if (m.role == Role::User) last_user = &m.content;
  }

  const MockScriptEntry* hit = nullptr;
  for (const auto& e : script_.entries) {
    if (e.turn && *e.turn == turn_) {
      hit = &e;  // an ordinal matcher is the most specific; it wins outright
      break;
    }
  }
  if (hit == nullptr && last_user != nullptr) {
    std::vector<const MockScriptEntry*> text_hits;
    for (const auto& e : script_.entries) {
      if (e.match && last_user->find(*e.match) != std::string::npos) {
        text_hits.push_back(&e);
      }
    }
    if (text_hits.size() > 1) {
      throw LlmError(LlmError::Kind::AmbiguousScript,
                     "mock script: " + std::to_string(text_hits.size()) +
                         " entries match the request at turn " + std::to_string(turn_));
    }
    if (text_hits.size() == 1) hit = text_hits[0];
  }

  if (hit == nullptr) {
    throw LlmError(LlmError::Kind::ScriptMiss,
                   "mock script has no entry for turn " + std::to_string(turn_));
  }
  if (hit->fail) {
    if (*hit->fail == "rejected") {
      throw LlmError(LlmError::Kind::RequestRejected,
                     "mock script rejects turn " + std::to_string(turn_) + " with status " +
                         std::to_string(hit->status),
                     hit->status);
    }
    throw LlmError(LlmError::Kind::BackendUnavailable,
                   "mock script fails turn " + std::to_string(turn_));
  }

  LlmResponse out;
  out.text = hit->completion;
  out.finish_reason = FinishReason::Stop;
  return out;
}

int MockBackend::turns_served() const {
  std::lock_guard<std::mutex> lock(mu_);
  return turn_;
}

std::unique_ptr<LlmBackend> mock_backend_from_script(MockScript script) {
  return std::make_unique<MockBackend>(std::move(script));
}

std::string request_body_json(const LlmRequest& request) {
  njson body;
  body["model"] = request.model_name;
  njson messages = njson::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  body["messages"] = std::move(messages);
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  return body.dump();
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  if (config_.endpoint_url.empty()) {
    throw std::invalid_argument("remote backend needs an endpoint URL");
  }
}

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = url.find('/', host_start);
  SplitUrl out;
  if (path_start == std::string::npos) {
    out.origin = url;
    out.path = "/v1/chat/completions";
  } else {
    out.origin = url.substr(0, path_start);
    out.path = url.substr(path_start);
  }
  return out;
}

LlmResponse parse_completion_response(const std::string& body) {
  njson doc;
  try {
    doc = njson::parse(body);
  } catch (const njson::parse_error& e) {
    throw LlmError(LlmError::Kind::BackendUnavailable,
                   std::string("backend returned unparseable body: ") + e.what());
  }
  LlmResponse out;
  if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
    throw LlmError(LlmError::Kind::BackendUnavailable, "backend response carries no choices");
  }
  const njson& choice = doc["choices"][0];
  if (choice.contains("message") && choice["message"].contains("content")) {
    out.text = choice["message"]["content"].get<std::string>();
  }
  std::string reason = choice.value("finish_reason", "stop");
  if (reason == "stop") {
    out.finish_reason = FinishReason::Stop;
  } else if (reason == "length") {
    out.finish_reason = FinishReason::Length;
  } else {
    out.finish_reason = FinishReason::Error;
  }
  if (doc.contains("usage") && doc["usage"].is_object()) {
    TokenUsage usage;
    usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0LL);
    usage.completion_tokens = doc["usage"].value("completion_tokens", 0LL);
    out.usage = usage;
  }
  return out;
}

}  // namespace

LlmResponse RemoteBackend::complete_raw(const LlmRequest& request) {
  const SplitUrl url = split_url(config_.endpoint_url);
  const std::string body = request_body_json(request);  // reused verbatim across retries

  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(config_.retry_delay_ms * (1 << (attempt - 1))));
    }
    httplib::Client client(url.origin);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);

    httplib::Result res = client.Post(url.path, headers, body, "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      return parse_completion_response(res->body);
    }
    if (res->status >= 400 && res->status < 500) {
      throw LlmError(LlmError::Kind::RequestRejected,
                     "backend rejected the request with HTTP " + std::to_string(res->status),
                     res->status);
    }
    last_error = "HTTP " + std::to_string(res->status);
  }
  throw LlmError(LlmError::Kind::BackendUnavailable,
                 "backend unavailable after " + std::to_string(config_.max_retries + 1) +
                     " attempts (" + last_error + ")");
}

}  // namespace sense
