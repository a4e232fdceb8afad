#include <httplib.h>

#include <algorithm>
#include <thread>

#include <json.hpp>

#include "ambidoc/error.hpp"
#include "ambidoc/llm_client.hpp"

namespace ambidoc::llm {

using nlohmann::json;

namespace {

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1024>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1024>& sem_;
};

// Splits "scheme://host[:port]/path" into ("scheme://host[:port]", "/path").
std::pair<std::string, std::string> split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kConfigError, "endpoint must be an absolute URL: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpClient::HttpClient(HttpSettings settings)
    : settings_(std::move(settings)),
      in_flight_(static_cast<std::ptrdiff_t>(
          std::clamp<std::size_t>(settings_.in_flight_cap, 1, 1024))) {
  std::tie(base_url_, path_) = split_endpoint(settings_.endpoint);
}

std::string HttpClient::build_body(const CompletionRequest& request) const {
  json messages = json::array();
  if (!request.system_text.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system_text}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user_text}});
  json body = {{"model", request.model},
               {"messages", messages},
               {"temperature", request.temperature},
               {"max_tokens", request.max_tokens}};
  return body.dump();
}

std::string HttpClient::parse_response(std::string_view body) {
  try {
    const json j = json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kLlmUnavailable, std::string("malformed completion response: ") + e.what());
  }
}

std::string HttpClient::complete(const CompletionRequest& request) {
  validate(request);
  SlotGuard slot(in_flight_);
  httplib::Client client(base_url_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(settings_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(settings_.timeout - secs);
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  client.set_connection_timeout(std::min<long>(secs.count(), 30), 0);
  httplib::Headers headers;
  if (!settings_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + settings_.api_key);
  }
  const std::string body = build_body(request);

  auto backoff = settings_.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      throw Error(ErrorCode::kLlmUnavailable,
                  "request to " + settings_.endpoint + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status == 200) return parse_response(res->body);
    const bool retryable = res->status == 429 || res->status >= 500;
    if (!retryable || attempt >= settings_.max_retries) {
      const ErrorCode code =
          res->status == 429 ? ErrorCode::kRateLimited : ErrorCode::kLlmUnavailable;
      throw Error(code, "endpoint returned HTTP " + std::to_string(res->status) + " after " +
                            std::to_string(attempt) + " retries");
    }
    std::this_thread::sleep_for(backoff);
    backoff = std::min(backoff * 2, settings_.max_backoff);
  }
}

}  // namespace ambidoc::llm
