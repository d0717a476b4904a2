#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "seqscm/scorer.hpp"
#include "seqscm/spec_format.hpp"

namespace seqscm::testing {

inline std::filesystem::path spec_dir() { return std::filesystem::path(SEQSCM_SPEC_DIR); }

inline std::filesystem::path fixture_dir() { return spec_dir() / "fixtures"; }

// Scratch directory unique to the current process.
inline std::filesystem::path make_temp_dir(const std::string& tag) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() /
                                    ("seqscm_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Scorer with explicit log scores per (context, candidate) pair. Unlisted
// pairs get `default_log`. Unlike the tabular backend this can hold -inf.
class FixedLogScorer final : public Scorer {
 public:
  explicit FixedLogScorer(double default_log = 0.0, std::string label = "fixed")
      : default_log_(default_log), label_(std::move(label)) {}

  void set(const std::string& context, const std::string& candidate, double log_score) {
    entries_[{context, candidate}] = log_score;
  }

  double log_score(const std::string& context, const std::string& candidate) const override {
    const auto it = entries_.find({context, candidate});
    return it == entries_.end() ? default_log_ : it->second;
  }

  const std::string& label() const override { return label_; }

 private:
  double default_log_;
  std::string label_;
  std::map<std::pair<std::string, std::string>, double> entries_;
};

// Counts backend invocations; used to observe cache behavior.
class CountingScorer final : public Scorer {
 public:
  explicit CountingScorer(ScorerPtr inner) : inner_(std::move(inner)) {}

  double log_score(const std::string& context, const std::string& candidate) const override {
    calls_.fetch_add(1);
    return inner_->log_score(context, candidate);
  }

  const std::string& label() const override { return inner_->label(); }

  std::size_t calls() const { return calls_.load(); }

 private:
  ScorerPtr inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

// Point-mass mechanisms: the phrase rendered from the picked value index gets
// weight 1 under every phrasing; everything else gets zero. Distributions
// come out as exact point masses.
class PointMassScorer final : public Scorer {
 public:
  PointMassScorer(const ScmSpecDocument& spec, const std::vector<std::size_t>& picks,
                  std::string label = "degenerate")
      : label_(std::move(label)) {
    for (std::size_t i = 0; i < spec.variables.size(); ++i) {
      const SpecVariable& v = spec.variables[i];
      for (const std::string& phrasing : v.phrasings) {
        chosen_.push_back(render_template(phrasing, v.fill_values.at(picks.at(i))));
      }
    }
  }

  double log_score(const std::string& /*context*/, const std::string& candidate) const override {
    for (const std::string& phrase : chosen_) {
      if (phrase == candidate) {
        return 0.0;
      }
    }
    return -std::numeric_limits<double>::infinity();
  }

  const std::string& label() const override { return label_; }

 private:
  std::string label_;
  std::vector<std::string> chosen_;
};

inline ScorerPtr uniform_scorer(std::size_t vocabulary = 100) {
  return std::make_shared<UniformTokenScorer>(vocabulary);
}

inline ScorerPtr tabular_fixture(const std::string& file, const std::string& label) {
  return std::make_shared<TabularScorer>(
      TabularScoreTable::from_json_file((fixture_dir() / file).string()), label);
}

}  // namespace seqscm::testing
