#include "seqscm/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace seqscm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Separator for composing cache/table keys. Phrases are prose; control
// characters never appear in them.
constexpr char kKeySep = '\x1f';

}  // namespace

double log_score(const Scorer& scorer, const std::string& sequence) {
  return scorer.log_score(std::string(), sequence);
}

RestrictedDistribution restricted_distribution(const Scorer& scorer, const std::string& context,
                                               const std::vector<std::string>& space) {
  if (space.empty()) {
    throw ScorerError(ScorerError::Kind::Config, "restricted_distribution: empty phrase space");
  }
  {
    std::unordered_set<std::string> seen(space.begin(), space.end());
    if (seen.size() != space.size()) {
      throw ScorerError(ScorerError::Kind::Config,
                        "restricted_distribution: phrases in space must be distinct");
    }
  }

  std::vector<double> logs(space.size());
  double max_log = kNegInf;
  for (std::size_t k = 0; k < space.size(); ++k) {
    logs[k] = scorer.log_score(context, space[k]);
    if (std::isnan(logs[k])) {
      throw ScorerError(ScorerError::Kind::Protocol, "scorer returned NaN for candidate '" +
                                                         space[k] + "'");
    }
    max_log = std::max(max_log, logs[k]);
  }
  if (max_log == kNegInf) {
    throw ScorerError(ScorerError::Kind::AllZeroWeight,
                      "every candidate scored -inf under context '" + context + "'");
  }

  RestrictedDistribution dist;
  dist.context = context;
  dist.candidates = space;
  dist.probabilities.resize(space.size());
  double total = 0.0;
  for (std::size_t k = 0; k < space.size(); ++k) {
    dist.probabilities[k] = std::exp(logs[k] - max_log);
    total += dist.probabilities[k];
  }
  for (double& p : dist.probabilities) {
    p /= total;
  }
  return dist;
}

std::pair<std::size_t, RestrictedDistribution> sample_restricted(
    const Scorer& scorer, const std::string& context, const std::vector<std::string>& space,
    RngStream& rng) {
  RestrictedDistribution dist = restricted_distribution(scorer, context, space);
  const std::size_t index = sample_index(dist.probabilities, rng);
  return {index, std::move(dist)};
}

// ---------------------------------------------------------------------------
// TabularScoreTable

TabularScoreTable::TabularScoreTable(double default_score) : default_score_(default_score) {
  if (!(default_score > 0.0)) {
    throw ScorerError(ScorerError::Kind::Config, "tabular default score must be > 0");
  }
}

std::string TabularScoreTable::key(const std::string& context, const std::string& candidate) {
  std::string k;
  k.reserve(context.size() + candidate.size() + 1);
  k.append(context);
  k.push_back(kKeySep);
  k.append(candidate);
  return k;
}

void TabularScoreTable::add(const std::string& context, const std::string& candidate,
                            double score) {
  if (!(score > 0.0)) {
    throw ScorerError(ScorerError::Kind::Config, "tabular score must be > 0 for candidate '" +
                                                     candidate + "'");
  }
  entries_[key(context, candidate)] = score;
}

double TabularScoreTable::lookup(const std::string& context, const std::string& candidate) const {
  const auto it = entries_.find(key(context, candidate));
  return it == entries_.end() ? default_score_ : it->second;
}

TabularScoreTable TabularScoreTable::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScorerError(ScorerError::Kind::Config, std::string("score table: ") + e.what());
  }
  if (!doc.is_object()) {
    throw ScorerError(ScorerError::Kind::Config, "score table: top level must be an object");
  }
  TabularScoreTable table(doc.value("default", 1.0));
  if (doc.contains("entries")) {
    if (!doc["entries"].is_array()) {
      throw ScorerError(ScorerError::Kind::Config, "score table: 'entries' must be an array");
    }
    for (const auto& entry : doc["entries"]) {
      if (!entry.is_object() || !entry.contains("context") || !entry.contains("candidate") ||
          !entry.contains("score")) {
        throw ScorerError(ScorerError::Kind::Config,
                          "score table: each entry needs context, candidate, score");
      }
      table.add(entry["context"].get<std::string>(), entry["candidate"].get<std::string>(),
                entry["score"].get<double>());
    }
  }
  return table;
}

TabularScoreTable TabularScoreTable::from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ScorerError(ScorerError::Kind::Config, "cannot open score table file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string TabularScoreTable::to_json() const {
  nlohmann::ordered_json doc;
  doc["default"] = default_score_;
  auto entries = nlohmann::ordered_json::array();
  // Sort keys so the output is stable.
  std::vector<const std::string*> keys;
  keys.reserve(entries_.size());
  for (const auto& [k, v] : entries_) {
    keys.push_back(&k);
  }
  std::sort(keys.begin(), keys.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });
  for (const std::string* k : keys) {
    const std::size_t sep = k->find(kKeySep);
    nlohmann::ordered_json entry;
    entry["context"] = k->substr(0, sep);
    entry["candidate"] = k->substr(sep + 1);
    entry["score"] = entries_.at(*k);
    entries.push_back(std::move(entry));
  }
  doc["entries"] = std::move(entries);
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// TabularScorer

TabularScorer::TabularScorer(TabularScoreTable table, std::string label)
    : table_(std::move(table)), label_(std::move(label)) {}

double TabularScorer::log_score(const std::string& context, const std::string& candidate) const {
  return std::log(table_.lookup(context, candidate));
}

// ---------------------------------------------------------------------------
// UniformTokenScorer

UniformTokenScorer::UniformTokenScorer(std::size_t vocabulary_size, std::string label)
    : vocabulary_size_(vocabulary_size), label_(std::move(label)) {
  if (vocabulary_size_ == 0) {
    throw ScorerError(ScorerError::Kind::Config, "uniform scorer needs vocabulary size >= 1");
  }
}

double UniformTokenScorer::log_score(const std::string& /*context*/,
                                     const std::string& candidate) const {
  std::size_t tokens = 0;
  bool in_token = false;
  for (char c : candidate) {
    const bool space = (c == ' ' || c == '\t' || c == '\n' || c == '\r');
    if (!space && !in_token) {
      ++tokens;
    }
    in_token = !space;
  }
  return -static_cast<double>(tokens) * std::log(static_cast<double>(vocabulary_size_));
}

// ---------------------------------------------------------------------------
// CachedScorer

CachedScorer::CachedScorer(ScorerPtr inner) : inner_(std::move(inner)) {
  if (!inner_) {
    throw ScorerError(ScorerError::Kind::Config, "cached: null inner scorer");
  }
}

double CachedScorer::log_score(const std::string& context, const std::string& candidate) const {
  std::string key;
  key.reserve(context.size() + candidate.size() + 1);
  key.append(context);
  key.push_back(kKeySep);
  key.append(candidate);

  {
    std::shared_lock lock(mutex_);
    const auto it = memo_.find(key);
    if (it != memo_.end()) {
      return it->second;
    }
  }
  const double value = inner_->log_score(context, candidate);
  {
    std::unique_lock lock(mutex_);
    memo_.emplace(std::move(key), value);
  }
  return value;
}

std::size_t CachedScorer::cache_size() const {
  std::shared_lock lock(mutex_);
  return memo_.size();
}

ScorerPtr cached(ScorerPtr scorer) {
  return std::make_shared<CachedScorer>(std::move(scorer));
}

}  // namespace seqscm
