#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "seqscm/remote_scorer.hpp"
#include "seqscm/rng.hpp"
#include "seqscm/scorer.hpp"
#include "support.hpp"

using namespace seqscm;
using seqscm::testing::CountingScorer;
using seqscm::testing::FixedLogScorer;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += std::abs(a[i] - b[i]);
  }
  return sum;
}

}  // namespace

TEST_CASE("tabular score is the log of the stored raw score") {
  TabularScoreTable table(1.0);
  table.add("", "A", 0.5);
  TabularScorer scorer(table);
  CHECK(log_score(scorer, "A") == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  // Unlisted pairs fall back to the default.
  CHECK(log_score(scorer, "B") == doctest::Approx(0.0));
  CHECK(scorer.log_score("some context", "A") == doctest::Approx(0.0));
}

TEST_CASE("tabular table rejects non-positive scores") {
  TabularScoreTable table(1.0);
  CHECK_THROWS_AS(table.add("", "A", 0.0), ScorerError);
  CHECK_THROWS_AS(table.add("", "A", -1.0), ScorerError);
  CHECK_THROWS_AS(TabularScoreTable(0.0), ScorerError);
}

TEST_CASE("tabular json round trip") {
  TabularScoreTable table(2.5);
  table.add("ctx", "cand", 0.125);
  table.add("", "root phrase.", 7.0);
  const std::string text = table.to_json();
  const TabularScoreTable parsed = TabularScoreTable::from_json(text);
  CHECK(parsed.default_score() == 2.5);
  CHECK(parsed.lookup("ctx", "cand") == 0.125);
  CHECK(parsed.lookup("", "root phrase.") == 7.0);
  CHECK(parsed.lookup("missing", "missing") == 2.5);
  CHECK(parsed.size() == 2);
}

TEST_CASE("uniform token mock scores token count times log(1/V)") {
  UniformTokenScorer scorer(10);
  CHECK(log_score(scorer, "one two three") == doctest::Approx(3.0 * std::log(0.1)).epsilon(1e-12));
  CHECK(log_score(scorer, "word") == doctest::Approx(std::log(0.1)));
  CHECK(scorer.log_score("any context", "a b") == doctest::Approx(2.0 * std::log(0.1)));
}

TEST_CASE("restricted distribution normalizes raw weights") {
  SUBCASE("equal scores give a uniform pair") {
    FixedLogScorer scorer(std::log(0.3));
    const RestrictedDistribution dist = restricted_distribution(scorer, "ctx", {"a", "b"});
    CHECK(dist.probabilities[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(dist.probabilities[1] == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("raw scores e^-1 and e^-2") {
    // Hand-computed before implementation: e^-1/(e^-1+e^-2) = 1/(1+e^-1).
    FixedLogScorer scorer(0.0);
    scorer.set("", "x", -1.0);
    scorer.set("", "y", -2.0);
    const RestrictedDistribution dist = restricted_distribution(scorer, "", {"x", "y"});
    CHECK(dist.probabilities[0] == doctest::Approx(0.731059).epsilon(1e-6));
    CHECK(dist.probabilities[1] == doctest::Approx(0.268941).epsilon(1e-6));
  }
  SUBCASE("a -inf candidate gets exactly zero") {
    FixedLogScorer scorer(0.0);
    scorer.set("", "dead", -kInf);
    const RestrictedDistribution dist = restricted_distribution(scorer, "", {"dead", "alive"});
    CHECK(dist.probabilities[0] == 0.0);
    CHECK(dist.probabilities[1] == 1.0);
  }
  SUBCASE("all candidates -inf is an error") {
    FixedLogScorer scorer(-kInf);
    CHECK_THROWS_AS(restricted_distribution(scorer, "", {"a", "b"}), ScorerError);
  }
  SUBCASE("empty or duplicated spaces are rejected") {
    FixedLogScorer scorer(0.0);
    CHECK_THROWS_AS(restricted_distribution(scorer, "", {}), ScorerError);
    CHECK_THROWS_AS(restricted_distribution(scorer, "", {"a", "a"}), ScorerError);
  }
}

TEST_CASE("restricted distribution properties") {
  RngStream seed_rng(20240901);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t size = 2 + seed_rng.uniform_below(8);
    std::vector<std::string> space;
    FixedLogScorer scorer(0.0);
    FixedLogScorer shifted(0.0);
    const double shift = (seed_rng.uniform01() - 0.5) * 200.0;
    for (std::size_t k = 0; k < size; ++k) {
      space.push_back("cand" + std::to_string(k));
      const double log_w = (seed_rng.uniform01() - 0.5) * 20.0;
      scorer.set("c", space.back(), log_w);
      shifted.set("c", space.back(), log_w + shift);
    }
    const RestrictedDistribution dist = restricted_distribution(scorer, "c", space);

    double sum = 0.0;
    for (double p : dist.probabilities) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    // Softmax shift invariance.
    const RestrictedDistribution dist_shifted = restricted_distribution(shifted, "c", space);
    for (std::size_t k = 0; k < size; ++k) {
      CHECK(dist_shifted.probabilities[k] == doctest::Approx(dist.probabilities[k]).epsilon(1e-12));
    }

    // Permutation equivariance: reverse the candidate order.
    std::vector<std::string> reversed(space.rbegin(), space.rend());
    const RestrictedDistribution dist_rev = restricted_distribution(scorer, "c", reversed);
    for (std::size_t k = 0; k < size; ++k) {
      CHECK(dist_rev.probabilities[size - 1 - k] ==
            doctest::Approx(dist.probabilities[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("sample_restricted draws and bookkeeping") {
  SUBCASE("point mass always yields index 0") {
    FixedLogScorer scorer(-kInf);
    scorer.set("", "only", 0.0);
    RngStream rng(7);
    for (int i = 0; i < 32; ++i) {
      const auto [index, dist] = sample_restricted(scorer, "", {"only", "never", "nope"}, rng);
      CHECK(index == 0);
      CHECK(dist.probabilities[0] == 1.0);
    }
  }
  SUBCASE("identical rng state gives identical draws") {
    FixedLogScorer scorer(0.0);
    scorer.set("", "a", -0.3);
    scorer.set("", "b", -1.1);
    scorer.set("", "c", -2.0);
    RngStream rng1(123456);
    RngStream rng2(123456);
    for (int i = 0; i < 100; ++i) {
      const auto [i1, d1] = sample_restricted(scorer, "", {"a", "b", "c"}, rng1);
      const auto [i2, d2] = sample_restricted(scorer, "", {"a", "b", "c"}, rng2);
      CHECK(i1 == i2);
    }
  }
  SUBCASE("empirical frequency matches the distribution") {
    FixedLogScorer scorer(0.0);
    scorer.set("", "x", -1.0);
    scorer.set("", "y", -2.0);
    RngStream rng(99);
    const int n = 100000;
    int count0 = 0;
    for (int i = 0; i < n; ++i) {
      const auto [index, dist] = sample_restricted(scorer, "", {"x", "y"}, rng);
      count0 += index == 0 ? 1 : 0;
    }
    const double freq = static_cast<double>(count0) / n;
    CHECK(freq > 0.7211);
    CHECK(freq < 0.7411);
  }
  SUBCASE("L1 convergence over a larger space") {
    FixedLogScorer scorer(0.0);
    std::vector<std::string> space;
    for (int k = 0; k < 10; ++k) {
      space.push_back("c" + std::to_string(k));
      scorer.set("", space.back(), -0.37 * k);
    }
    const RestrictedDistribution exact = restricted_distribution(scorer, "", space);
    std::vector<double> counts(space.size(), 0.0);
    RngStream rng(4242);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const auto [index, dist] = sample_restricted(scorer, "", space, rng);
      counts[index] += 1.0;
    }
    for (double& c : counts) {
      c /= n;
    }
    CHECK(l1_distance(counts, exact.probabilities) <= 0.02);
  }
}

TEST_CASE("cached scorer") {
  SUBCASE("memoizes exact string pairs") {
    auto counting = std::make_shared<CountingScorer>(std::make_shared<UniformTokenScorer>(10));
    const ScorerPtr wrapper = cached(counting);
    wrapper->log_score("ctx", "a b c");
    wrapper->log_score("ctx", "a b c");
    CHECK(counting->calls() == 1);
    // One character of difference is a different key.
    wrapper->log_score("ctx ", "a b c");
    CHECK(counting->calls() == 2);
  }
  SUBCASE("restricted_distribution repeats issue zero backend calls") {
    auto counting = std::make_shared<CountingScorer>(std::make_shared<UniformTokenScorer>(10));
    const ScorerPtr wrapper = cached(counting);
    const std::vector<std::string> space{"alpha.", "beta.", "gamma."};
    restricted_distribution(*wrapper, "context.", space);
    const std::size_t calls_after_first = counting->calls();
    CHECK(calls_after_first == space.size());
    restricted_distribution(*wrapper, "context.", space);
    CHECK(counting->calls() == calls_after_first);
  }
  SUBCASE("bit-identical to the wrapped scorer") {
    auto base = std::make_shared<FixedLogScorer>(0.0);
    base->set("c", "a", -0.123456789);
    base->set("c", "b", -3.5);
    const ScorerPtr wrapper = cached(base);
    const RestrictedDistribution direct = restricted_distribution(*base, "c", {"a", "b"});
    const RestrictedDistribution via_cache = restricted_distribution(*wrapper, "c", {"a", "b"});
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(direct.probabilities[k] == via_cache.probabilities[k]);
    }
  }
  SUBCASE("safe under concurrent callers") {
    auto counting = std::make_shared<CountingScorer>(std::make_shared<UniformTokenScorer>(10));
    const ScorerPtr wrapper = cached(counting);
    std::vector<std::thread> threads;
    std::vector<double> results(8, 0.0);
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&, t] {
        for (int i = 0; i < 200; ++i) {
          results[t] = wrapper->log_score("shared", "q w e");
        }
      });
    }
    for (auto& t : threads) {
      t.join();
    }
    for (double r : results) {
      CHECK(r == doctest::Approx(3.0 * std::log(0.1)));
    }
  }
}

// ---------------------------------------------------------------------------
// Remote backend against an in-process endpoint

namespace {

class LocalEndpoint {
 public:
  explicit LocalEndpoint(std::function<void(const httplib::Request&, httplib::Response&)> handler)
      : handler_(std::move(handler)) {
    server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
      handler_(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~LocalEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/completions"; }

 private:
  std::function<void(const httplib::Request&, httplib::Response&)> handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("remote scorer sums the continuation's token logprobs") {
  // Recorded fixture: three candidate tokens at -1.2, -0.3, -2.0 -> -3.5.
  LocalEndpoint endpoint([](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const std::string prompt = body.at("prompt").get<std::string>();
    CHECK(body.at("echo").get<bool>());
    // Context "The sky is blue." + " " + candidate: continuation starts at 17.
    nlohmann::json logprobs;
    logprobs["token_logprobs"] = {nullptr, -9.0, -1.2, -0.3, -2.0};
    logprobs["text_offset"] = {0, 8, 17, 21, 25};
    logprobs["tokens"] = {"The sky ", "is blue.", " It ", "look", "s nice."};
    nlohmann::json response;
    response["choices"] = {{{"text", prompt}, {"logprobs", logprobs}}};
    res.set_content(response.dump(), "application/json");
  });

  RemoteScorerConfig config;
  config.url = endpoint.url();
  config.model = "test-model";
  RemoteScorer scorer(config);
  const double value = scorer.log_score("The sky is blue.", "It looks nice.");
  CHECK(value == doctest::Approx(-3.5).epsilon(1e-12));
}

TEST_CASE("remote scorer protocol errors") {
  SUBCASE("malformed body") {
    LocalEndpoint endpoint([](const httplib::Request&, httplib::Response& res) {
      res.set_content("not json at all", "text/plain");
    });
    RemoteScorerConfig config;
    config.url = endpoint.url();
    RemoteScorer scorer(config);
    try {
      scorer.log_score("a", "b");
      FAIL("expected ScorerError");
    } catch (const ScorerError& e) {
      CHECK(e.kind() == ScorerError::Kind::Protocol);
    }
  }
  SUBCASE("missing logprobs") {
    LocalEndpoint endpoint([](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"choices":[{"text":"x"}]})", "application/json");
    });
    RemoteScorerConfig config;
    config.url = endpoint.url();
    RemoteScorer scorer(config);
    CHECK_THROWS_AS(scorer.log_score("a", "b"), ScorerError);
  }
  SUBCASE("unreachable after bounded retries") {
    RemoteScorerConfig config;
    config.url = "http://127.0.0.1:1/v1/completions";
    config.max_retries = 1;
    config.timeout_seconds = 1;
    RemoteScorer scorer(config);
    try {
      scorer.log_score("a", "b");
      FAIL("expected ScorerError");
    } catch (const ScorerError& e) {
      CHECK(e.kind() == ScorerError::Kind::Unreachable);
    }
  }
}

TEST_CASE("continuation logprob parsing handles the null first token") {
  nlohmann::json logprobs;
  logprobs["token_logprobs"] = {nullptr, -0.5, -0.25};
  logprobs["text_offset"] = {0, 4, 8};
  nlohmann::json response;
  response["choices"] = {{{"logprobs", logprobs}}};
  // Empty context: the undefined first token is skipped, the rest summed.
  CHECK(sum_continuation_logprobs(response.dump(), 0) == doctest::Approx(-0.75));
  // A null beyond position zero is a protocol violation.
  nlohmann::json bad = response;
  bad["choices"][0]["logprobs"]["token_logprobs"] = {-0.5, nullptr, -0.25};
  CHECK_THROWS_AS(sum_continuation_logprobs(bad.dump(), 0), ScorerError);
}
