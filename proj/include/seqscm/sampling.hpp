#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seqscm/scm.hpp"

namespace seqscm {

enum class SampleMode { Observational, Interventional, Counterfactual };

std::string to_string(SampleMode mode);
SampleMode sample_mode_from_string(const std::string& text);

// do(variable = value index). The variable must be endogenous.
struct Intervention {
  std::string variable;
  std::size_t value = 0;

  bool operator==(const Intervention&) const = default;
};

struct Provenance {
  VariationId variation;
  std::uint64_t master_seed = 0;
  std::uint64_t unit_index = 0;
  SampleMode mode = SampleMode::Observational;
  std::optional<Intervention> intervention;
};

// One fully sampled assignment. Everything is aligned to the model's
// topological order. Recorded distributions are the bookkeeping that makes
// counterfactuals and probability-space outcomes possible; they are absent
// for intervened and copied variables.
struct Unit {
  std::vector<std::size_t> values;
  std::vector<std::string> phrases;
  std::vector<std::optional<RestrictedDistribution>> distributions;
  Provenance provenance;
};

// Assignment under construction, aligned to the topological order.
struct PartialUnit {
  std::vector<std::optional<std::size_t>> values;
  std::vector<std::string> phrases;

  static PartialUnit empty(std::size_t variable_count);
};

// Concatenation (single-space-joined, in topological order) of the rendered
// phrases of exactly the variable's parents. Empty string for roots. Throws
// SamplingError when a parent is unassigned.
std::string parent_context(const SdScm& scm, const PartialUnit& partial,
                           const std::string& variable);

// The per-unit stream seed: hash of (master seed, unit index, mode,
// intervention), so parallel generation is order-independent.
std::uint64_t unit_stream_seed(std::uint64_t master_seed, std::uint64_t unit_index,
                               SampleMode mode, const std::optional<Intervention>& intervention);

// Ancestral sampling over the topological order; every variable draws from
// its scorer-restricted distribution given its parents' phrases.
Unit sample_observational(const SdScm& scm, RngStream& rng, Provenance provenance = {});

// Identical to observational sampling except the intervened variable is fixed
// and records no distribution.
Unit sample_interventional(const SdScm& scm, const Intervention& intervention, RngStream& rng,
                           Provenance provenance = {});

// Counterfactual of `factual` under the intervention: exogenous values and
// all non-descendants of the intervened variable are copied verbatim, the
// intervened variable is set, and each descendant is resampled against the
// partially counterfactual assignment.
Unit sample_counterfactual(const SdScm& scm, const Unit& factual, const Intervention& intervention,
                           RngStream& rng);

// Seed-derived entry points: (seed, unit index) fully determines the unit.
Unit observational_unit(const SdScm& scm, std::uint64_t seed, std::uint64_t unit_index);
Unit interventional_unit(const SdScm& scm, const Intervention& intervention, std::uint64_t seed,
                         std::uint64_t unit_index);
// Derives its stream from the factual unit's provenance and the intervention.
Unit counterfactual_unit(const SdScm& scm, const Unit& factual, const Intervention& intervention);

// ---------------------------------------------------------------------------
// Exact enumeration oracles

// Dense probability table over the full joint state space, variables in
// topological order. Row-major: the last variable in the order varies
// fastest.
class JointTable {
 public:
  JointTable(std::vector<std::string> order, std::vector<std::size_t> sizes);

  const std::vector<std::string>& order() const { return order_; }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t cell_count() const { return cells_.size(); }

  double& at(const std::vector<std::size_t>& assignment);
  double at(const std::vector<std::size_t>& assignment) const;

  double total_mass() const;

  // Marginal over a subset of variables (kept in this table's order).
  JointTable marginal(const std::vector<std::string>& keep) const;

  // Odometer over assignments; returns false after the last one.
  static bool next_assignment(std::vector<std::size_t>& assignment,
                              const std::vector<std::size_t>& sizes);

 private:
  std::size_t flat_index(const std::vector<std::size_t>& assignment) const;

  std::vector<std::string> order_;
  std::vector<std::size_t> sizes_;
  std::vector<double> cells_;
};

// Enumerates the full joint by multiplying restricted distributions along the
// topological order. Throws SamplingError when the state space exceeds
// `cell_cap`.
JointTable exact_joint(const SdScm& scm, std::size_t cell_cap = 1'000'000);

// As exact_joint with the intervened factor replaced by a point mass.
JointTable exact_interventional(const SdScm& scm, const Intervention& intervention,
                                std::size_t cell_cap = 1'000'000);

}  // namespace seqscm
