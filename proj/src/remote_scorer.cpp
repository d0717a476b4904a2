#include "seqscm/remote_scorer.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace seqscm {

namespace {

// Splits "scheme://host[:port]/path" into base and path.
void split_url(const std::string& url, std::string& base, std::string& path) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ScorerError(ScorerError::Kind::Config, "remote scorer URL missing scheme: " + url);
  }
  const std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base = url;
    path = "/v1/completions";
  } else {
    base = url.substr(0, path_start);
    path = url.substr(path_start);
  }
}

class InFlightSlot {
 public:
  InFlightSlot(std::mutex& mutex, std::condition_variable& cv, int& count, int cap)
      : mutex_(mutex), cv_(cv), count_(count) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return count_ < cap; });
    ++count_;
  }
  ~InFlightSlot() {
    {
      std::lock_guard lock(mutex_);
      --count_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex& mutex_;
  std::condition_variable& cv_;
  int& count_;
};

}  // namespace

RemoteScorerConfig RemoteScorerConfig::with_environment_overrides() const {
  RemoteScorerConfig out = *this;
  if (const char* url = std::getenv("SEQSCM_SCORER_URL"); url && *url) {
    out.url = url;
  }
  if (const char* token = std::getenv("SEQSCM_SCORER_TOKEN"); token && *token) {
    out.auth_token = token;
  }
  return out;
}

RemoteScorer::RemoteScorer(RemoteScorerConfig config) : config_(std::move(config)) {
  if (config_.url.empty()) {
    throw ScorerError(ScorerError::Kind::Config,
                      "remote scorer needs a URL (flag or SEQSCM_SCORER_URL)");
  }
  if (config_.max_in_flight < 1) {
    throw ScorerError(ScorerError::Kind::Config, "remote scorer in-flight cap must be >= 1");
  }
  split_url(config_.url, host_base_, path_);
}

RemoteScorer::~RemoteScorer() = default;

double sum_continuation_logprobs(const std::string& response_body,
                                 std::size_t continuation_start) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(response_body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScorerError(ScorerError::Kind::Protocol,
                      std::string("remote scorer: unparsable response: ") + e.what());
  }
  if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
    throw ScorerError(ScorerError::Kind::Protocol, "remote scorer: response has no choices");
  }
  const auto& choice = doc["choices"][0];
  if (!choice.contains("logprobs") || choice["logprobs"].is_null()) {
    throw ScorerError(ScorerError::Kind::Protocol,
                      "remote scorer: endpoint did not return logprobs");
  }
  const auto& logprobs = choice["logprobs"];
  if (!logprobs.contains("token_logprobs") || !logprobs["token_logprobs"].is_array()) {
    throw ScorerError(ScorerError::Kind::Protocol,
                      "remote scorer: response missing token_logprobs");
  }
  const auto& token_logprobs = logprobs["token_logprobs"];
  const auto& offsets = logprobs.contains("text_offset") ? logprobs["text_offset"]
                                                         : nlohmann::json::array();
  if (!offsets.is_array() || offsets.size() != token_logprobs.size()) {
    throw ScorerError(ScorerError::Kind::Protocol,
                      "remote scorer: text_offset missing or misaligned");
  }

  double sum = 0.0;
  for (std::size_t i = 0; i < token_logprobs.size(); ++i) {
    const std::size_t offset = offsets[i].get<std::size_t>();
    if (offset < continuation_start) {
      continue;
    }
    if (token_logprobs[i].is_null()) {
      // Endpoints report null for the very first token of the text, whose
      // probability is undefined without context. Inside a continuation that
      // only happens when the context is empty; the missing term is shared by
      // every candidate rendered from the same template, so it cancels when
      // the distribution is normalized.
      if (i != 0) {
        throw ScorerError(ScorerError::Kind::Protocol,
                          "remote scorer: null logprob inside continuation");
      }
      continue;
    }
    if (!token_logprobs[i].is_number()) {
      throw ScorerError(ScorerError::Kind::Protocol,
                        "remote scorer: non-numeric token logprob");
    }
    sum += token_logprobs[i].get<double>();
  }
  return sum;
}

std::string RemoteScorer::post_with_retries(const std::string& body) const {
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
    }
    httplib::Client client(host_base_);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config_.auth_token.empty()) {
      headers.emplace("Authorization", "Bearer " + config_.auth_token);
    }
    auto result = client.Post(path_, headers, body, "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status >= 500) {
      last_error = "server error: HTTP " + std::to_string(result->status);
      continue;
    }
    if (result->status != 200) {
      throw ScorerError(ScorerError::Kind::Protocol,
                        "remote scorer: HTTP " + std::to_string(result->status) + " from " +
                            config_.url);
    }
    return result->body;
  }
  throw ScorerError(ScorerError::Kind::Unreachable,
                    "remote scorer: " + last_error + " after " +
                        std::to_string(config_.max_retries + 1) + " attempts to " + config_.url);
}

double RemoteScorer::log_score(const std::string& context, const std::string& candidate) const {
  std::string prompt;
  std::size_t continuation_start = 0;
  if (context.empty()) {
    prompt = candidate;
  } else {
    prompt = context + " " + candidate;
    continuation_start = context.size() + 1;
  }

  nlohmann::json request;
  request["model"] = config_.model;
  request["prompt"] = prompt;
  request["max_tokens"] = 0;
  request["echo"] = true;
  request["logprobs"] = 0;

  InFlightSlot slot(in_flight_mutex_, in_flight_cv_, in_flight_, config_.max_in_flight);
  const std::string body = post_with_retries(request.dump());
  return sum_continuation_logprobs(body, continuation_start);
}

}  // namespace seqscm
