#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "seqscm/scm.hpp"

namespace seqscm {

// One variable entry of a spec document: a value space plus one or more
// phrasing templates for it.
struct SpecVariable {
  std::string name;
  VariableKind kind = VariableKind::Endogenous;
  std::vector<std::string> fill_values;
  std::vector<std::string> phrasings;  // templates, each with one "{x}"
};

// The on-disk model description (.scm.json): variables with multiple
// phrasings, edges, and the designated treatment/outcome pair. A concrete
// model is produced by choosing one phrasing per variable
// (instantiate_variation).
struct ScmSpecDocument {
  std::string name;
  std::vector<SpecVariable> variables;
  std::vector<Edge> edges;
  std::string treatment;
  std::string outcome;
  std::string notes;  // optional free text

  const SpecVariable& variable(const std::string& name) const;  // throws SpecError
  bool has_variable(const std::string& name) const;

  // Product of phrasing counts, saturating at 2^63-1.
  std::uint64_t variation_count() const;
};

// Parses and fully validates a spec document. Throws SpecError with a
// position for syntax errors, a field path for schema violations, and a
// description for semantic violations.
ScmSpecDocument parse_spec(const std::string& text);
ScmSpecDocument load_spec_file(const std::filesystem::path& path);

// Canonical form: fixed field order, 2-space indentation, trailing newline.
// parse_spec(serialize_spec(s)) is structurally equal to s.
std::string serialize_spec(const ScmSpecDocument& spec);

bool specs_equal(const ScmSpecDocument& a, const ScmSpecDocument& b);

// Non-fatal advice, e.g. the outcome not being a sink in a benchmark-shaped
// document, or phrases that do not end in sentence punctuation as prose
// concatenation expects.
std::vector<std::string> lint_spec(const ScmSpecDocument& spec);

// Builds the concrete model for one phrasing choice per variable. Pure in
// (spec, variation, master_seed); the scorer is carried along by reference.
// Throws SpecError on out-of-range indices and propagates validation failures.
SdScm instantiate_variation(const ScmSpecDocument& spec, const VariationId& variation,
                            ScorerPtr scorer, std::uint64_t master_seed);

// Draws `count` distinct variations uniformly without replacement,
// reproducibly from `seed`. Throws SpecError when count exceeds the number of
// possible variations.
std::vector<VariationId> sample_variations(const ScmSpecDocument& spec, std::size_t count,
                                           std::uint64_t seed);

}  // namespace seqscm
