#include "ambidoc/llm_client.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ambidoc/error.hpp"
#include "ambidoc/text.hpp"

namespace ambidoc::llm {

using nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool starts_sql(std::string_view line) {
  const std::string_view t = text::trim(line);
  for (std::string_view kw : {"SELECT", "WITH"}) {
    if (text::starts_with_icase(t, kw)) {
      if (t.size() == kw.size()) return true;
      const auto next = static_cast<unsigned char>(t[kw.size()]);
      if (std::isspace(next) || next == '(' || next == '*') return true;
    }
  }
  return false;
}

std::string strip_terminators(std::string_view s) {
  s = text::trim(s);
  while (!s.empty() && (s.back() == ';' || std::isspace(static_cast<unsigned char>(s.back())))) {
    s.remove_suffix(1);
  }
  return std::string(text::trim(s));
}

}  // namespace

void validate(const CompletionRequest& request) {
  if (!(request.temperature >= 0.0)) {
    throw Error(ErrorCode::kConfigError, "temperature must be >= 0");
  }
  if (request.user_text.empty()) throw Error(ErrorCode::kConfigError, "empty user text");
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIoError, "SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xF];
  }
  return out;
}

std::string request_hash(const CompletionRequest& request) {
  const json identity = json::array(
      {request.system_text, request.user_text, request.model, request.temperature});
  return sha256_hex(identity.dump());
}

std::string serialize_transcript(const Transcript& t) {
  json j;
  j["request_hash"] = t.request_hash;
  j["request"] = {{"system", t.request.system_text},
                  {"user", t.request.user_text},
                  {"model", t.request.model},
                  {"temperature", t.request.temperature},
                  {"max_tokens", t.request.max_tokens}};
  j["response"] = t.response_text;
  j["captured_at"] = t.captured_at;
  return j.dump(2) + "\n";
}

Transcript parse_transcript(std::string_view json_text) {
  try {
    const json j = json::parse(json_text);
    Transcript t;
    t.request_hash = j.at("request_hash").get<std::string>();
    const json& r = j.at("request");
    t.request.system_text = r.at("system").get<std::string>();
    t.request.user_text = r.at("user").get<std::string>();
    t.request.model = r.at("model").get<std::string>();
    t.request.temperature = r.at("temperature").get<double>();
    t.request.max_tokens = r.value("max_tokens", 1024);
    t.response_text = j.at("response").get<std::string>();
    t.captured_at = j.value("captured_at", "");
    return t;
  } catch (const json::exception& e) {
    throw ParseError(0, "", std::string("bad transcript: ") + e.what());
  }
}

TranscriptStore::TranscriptStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::optional<Transcript> TranscriptStore::find(std::string_view hash) const {
  const auto p = dir_ / (std::string(hash) + ".json");
  std::error_code ec;
  if (!std::filesystem::is_regular_file(p, ec)) return std::nullopt;
  return parse_transcript(read_file(p));
}

bool TranscriptStore::contains(std::string_view hash) const {
  std::error_code ec;
  return std::filesystem::is_regular_file(dir_ / (std::string(hash) + ".json"), ec);
}

bool TranscriptStore::append(const Transcript& t) {
  std::lock_guard lock(mu_);
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  const auto target = dir_ / (t.request_hash + ".json");
  if (std::filesystem::exists(target)) return false;
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out << serialize_transcript(t);
  }
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot store transcript: " + ec.message());
  return true;
}

std::vector<std::string> TranscriptStore::hashes() const {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir_, ec)) {
    if (entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

ReplayClient::ReplayClient(std::filesystem::path store_dir) : dir_(std::move(store_dir)) {}

std::string ReplayClient::complete(const CompletionRequest& request) {
  validate(request);
  const std::string hash = request_hash(request);
  const auto p = dir_ / (hash + ".json");
  std::error_code ec;
  if (!std::filesystem::is_regular_file(p, ec)) {
    throw Error(ErrorCode::kReplayMiss, "no transcript for request " + hash);
  }
  return parse_transcript(read_file(p)).response_text;
}

RecordingClient::RecordingClient(CompletionClient& inner, TranscriptStore& store)
    : inner_(inner), store_(store) {}

std::string RecordingClient::complete(const CompletionRequest& request) {
  validate(request);
  std::string response = inner_.complete(request);
  store_.append({request_hash(request), request, response, utc_now()});
  return response;
}

std::string extract_sql(std::string_view response) {
  std::optional<std::string> fenced;
  std::size_t pos = 0;
  while (true) {
    const auto open = response.find("```", pos);
    if (open == std::string_view::npos) break;
    auto body = response.find('\n', open + 3);
    if (body == std::string_view::npos) break;
    const auto close = response.find("```", body + 1);
    if (close == std::string_view::npos) break;
    std::string content = strip_terminators(response.substr(body + 1, close - body - 1));
    if (!content.empty()) fenced = std::move(content);
    pos = close + 3;
  }
  if (fenced) return *fenced;

  const auto lines = text::split_lines(response);
  std::optional<std::string> last_run;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!starts_sql(lines[i])) continue;
    std::string run;
    std::size_t j = i;
    for (; j < lines.size() && !text::trim(lines[j]).empty(); ++j) {
      if (!run.empty()) run += '\n';
      run += lines[j];
      if (text::trim(lines[j]).ends_with(';')) {
        ++j;
        break;
      }
    }
    std::string candidate = strip_terminators(run);
    if (!candidate.empty()) last_run = std::move(candidate);
    i = j == i ? i : j - 1;
  }
  if (last_run) return *last_run;
  throw Error(ErrorCode::kNoSqlFound, "no SQL statement found in model response");
}

}  // namespace ambidoc::llm
