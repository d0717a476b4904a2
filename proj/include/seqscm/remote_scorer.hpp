#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>

#include "seqscm/scorer.hpp"

namespace seqscm {

// Connection settings for a completions-style endpoint that can echo-score a
// prompt, returning per-token log-probabilities.
struct RemoteScorerConfig {
  std::string url;  // e.g. "http://localhost:8000/v1/completions"
  std::string model;
  std::string auth_token;
  int timeout_seconds = 30;
  int max_retries = 2;    // additional attempts after the first failure
  int max_in_flight = 4;  // concurrent request cap
  std::string label = "remote";

  // Applies SEQSCM_SCORER_URL / SEQSCM_SCORER_TOKEN on top of this config.
  RemoteScorerConfig with_environment_overrides() const;
};

// Scores context + " " + candidate by requesting the endpoint to echo the
// prompt with log-probabilities and summing the per-token values of the
// candidate's span. One request per candidate.
class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(RemoteScorerConfig config);
  ~RemoteScorer() override;

  double log_score(const std::string& context, const std::string& candidate) const override;
  const std::string& label() const override { return config_.label; }

  const RemoteScorerConfig& config() const { return config_; }

 private:
  std::string post_with_retries(const std::string& body) const;

  RemoteScorerConfig config_;
  std::string host_base_;  // scheme://host[:port]
  std::string path_;

  mutable std::mutex in_flight_mutex_;
  mutable std::condition_variable in_flight_cv_;
  mutable int in_flight_ = 0;
};

// Parses the response body of an echo-scoring request and sums the token
// log-probabilities whose text offset falls at or beyond `continuation_start`.
// Exposed separately so the protocol handling is testable without a server.
double sum_continuation_logprobs(const std::string& response_body,
                                 std::size_t continuation_start);

}  // namespace seqscm
