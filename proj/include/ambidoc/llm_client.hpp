#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace ambidoc::llm {

struct CompletionRequest {
  std::string system_text;
  std::string user_text;
  std::string model = "gpt-4";
  double temperature = 0.0;
  int max_tokens = 1024;
};

// Throws Error{kConfigError} when temperature < 0 or user_text is empty.
void validate(const CompletionRequest& request);

// Lower-case hex SHA-256 over (system, user, model, temperature). max_tokens
// is deliberately not part of the identity.
std::string request_hash(const CompletionRequest& request);

std::string sha256_hex(std::string_view data);

struct Transcript {
  std::string request_hash;
  CompletionRequest request;
  std::string response_text;
  std::string captured_at;  // ISO-8601 UTC
};

std::string serialize_transcript(const Transcript& t);
Transcript parse_transcript(std::string_view json_text);

// Directory of "<request_hash>.json" files. Appends never overwrite an
// existing transcript; concurrent appends are serialized.
class TranscriptStore {
 public:
  explicit TranscriptStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::optional<Transcript> find(std::string_view hash) const;
  bool contains(std::string_view hash) const;
  // Returns false when a transcript for that hash already exists.
  bool append(const Transcript& t);
  std::vector<std::string> hashes() const;

 private:
  std::filesystem::path dir_;
  std::mutex mu_;
};

class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual std::string complete(const CompletionRequest& request) = 0;
};

// Serves stored responses by request hash; throws Error{kReplayMiss}
// (message carries the hash) when absent.
class ReplayClient : public CompletionClient {
 public:
  explicit ReplayClient(std::filesystem::path store_dir);
  std::string complete(const CompletionRequest& request) override;

 private:
  std::filesystem::path dir_;
};

// Forwards to another client and appends each exchange to a store.
class RecordingClient : public CompletionClient {
 public:
  RecordingClient(CompletionClient& inner, TranscriptStore& store);
  std::string complete(const CompletionRequest& request) override;

 private:
  CompletionClient& inner_;
  TranscriptStore& store_;
};

// Answers from a function; used for scripted backends and tests.
class CallbackClient : public CompletionClient {
 public:
  using Fn = std::function<std::string(const CompletionRequest&)>;
  explicit CallbackClient(Fn fn) : fn_(std::move(fn)) {}
  std::string complete(const CompletionRequest& request) override { return fn_(request); }

 private:
  Fn fn_;
};

struct HttpSettings {
  // Full URL of a chat-completions endpoint.
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key;
  std::chrono::milliseconds timeout{120'000};
  int max_retries = 5;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{8'000};
  std::size_t in_flight_cap = 4;
};

// Live backend speaking the chat-completions JSON shape. HTTP 429 and 5xx
// are retried with exponential backoff; exhausting retries on 429 throws
// Error{kRateLimited}, anything else Error{kLlmUnavailable}.
class HttpClient : public CompletionClient {
 public:
  explicit HttpClient(HttpSettings settings);
  std::string complete(const CompletionRequest& request) override;

  std::string build_body(const CompletionRequest& request) const;
  // Pulls choices[0].message.content; throws Error{kLlmUnavailable}.
  static std::string parse_response(std::string_view body);

 private:
  HttpSettings settings_;
  std::string base_url_;
  std::string path_;
  std::counting_semaphore<1024> in_flight_;
};

// Contents of the last non-empty fenced code block; otherwise the last run
// of lines that begins with SELECT or WITH and continues until a blank line
// or a line ending in ';'. Trailing semicolons and whitespace are trimmed.
// Throws Error{kNoSqlFound}.
std::string extract_sql(std::string_view response);

}  // namespace ambidoc::llm
