#pragma once

#include <memory>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seqscm/error.hpp"
#include "seqscm/rng.hpp"

namespace seqscm {

// A sequence-probability backend. Implementations return the log of a raw,
// nonnegative weight for reading `candidate` as the continuation of
// `context`. Weights only need to be comparable across candidates under the
// same context; normalization happens in restricted_distribution.
//
// Implementations must be safe to call from multiple threads concurrently.
class Scorer {
 public:
  virtual ~Scorer() = default;

  // -inf is allowed and means zero weight.
  virtual double log_score(const std::string& context, const std::string& candidate) const = 0;

  virtual const std::string& label() const = 0;
};

using ScorerPtr = std::shared_ptr<const Scorer>;

// Log weight of a standalone sequence (empty context).
double log_score(const Scorer& scorer, const std::string& sequence);

// A scorer's output renormalized over one variable's finite phrase space.
struct RestrictedDistribution {
  std::string context;
  std::vector<std::string> candidates;
  std::vector<double> probabilities;  // aligned to candidates, sums to 1
};

// Normalizes the scorer's weights over `space` given `context`, with a
// max-shift in log space so large negative scores do not underflow.
// Throws ScorerError(AllZeroWeight) if every candidate scores -inf.
RestrictedDistribution restricted_distribution(const Scorer& scorer,
                                               const std::string& context,
                                               const std::vector<std::string>& space);

// Draws one candidate index from the restricted distribution and returns the
// distribution alongside it for bookkeeping.
std::pair<std::size_t, RestrictedDistribution> sample_restricted(
    const Scorer& scorer, const std::string& context, const std::vector<std::string>& space,
    RngStream& rng);

// ---------------------------------------------------------------------------
// Tabular backend

// Exact-match (context, candidate) -> raw score table with a default for
// unlisted pairs. All scores must be strictly positive.
class TabularScoreTable {
 public:
  explicit TabularScoreTable(double default_score = 1.0);

  void add(const std::string& context, const std::string& candidate, double score);
  double lookup(const std::string& context, const std::string& candidate) const;
  double default_score() const { return default_score_; }
  std::size_t size() const { return entries_.size(); }

  // Document format: {"default": w, "entries": [{"context": s, "candidate": s,
  // "score": w}, ...]}.
  static TabularScoreTable from_json(const std::string& text);
  static TabularScoreTable from_json_file(const std::string& path);
  std::string to_json() const;

 private:
  static std::string key(const std::string& context, const std::string& candidate);

  double default_score_;
  std::unordered_map<std::string, double> entries_;
};

class TabularScorer final : public Scorer {
 public:
  TabularScorer(TabularScoreTable table, std::string label = "tabular");

  double log_score(const std::string& context, const std::string& candidate) const override;
  const std::string& label() const override { return label_; }

  const TabularScoreTable& table() const { return table_; }

 private:
  TabularScoreTable table_;
  std::string label_;
};

// ---------------------------------------------------------------------------
// Uniform-token mock

// Scores every whitespace token at 1/vocabulary_size, independent of context.
// Every candidate space it sees becomes uniform up to token-count differences.
class UniformTokenScorer final : public Scorer {
 public:
  explicit UniformTokenScorer(std::size_t vocabulary_size, std::string label = "uniform");

  double log_score(const std::string& context, const std::string& candidate) const override;
  const std::string& label() const override { return label_; }

 private:
  std::size_t vocabulary_size_;
  std::string label_;
};

// ---------------------------------------------------------------------------
// Caching wrapper

// Memoizes log_score results under exact (context, candidate) keys. Values
// are deterministic, so concurrent duplicate inserts are benign.
class CachedScorer final : public Scorer {
 public:
  explicit CachedScorer(ScorerPtr inner);

  double log_score(const std::string& context, const std::string& candidate) const override;
  const std::string& label() const override { return inner_->label(); }

  std::size_t cache_size() const;

 private:
  ScorerPtr inner_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::string, double> memo_;
};

ScorerPtr cached(ScorerPtr scorer);

}  // namespace seqscm
