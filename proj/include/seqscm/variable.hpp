#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "seqscm/error.hpp"

namespace seqscm {

enum class VariableKind { Exogenous, Endogenous };

std::string to_string(VariableKind kind);
VariableKind variable_kind_from_string(const std::string& text);  // throws SpecError

// Substitutes `fill` for the single "{x}" placeholder. Throws SpecError when
// the template does not contain the placeholder exactly once.
std::string render_template(const std::string& template_text, const std::string& fill);

std::size_t placeholder_count(std::string_view template_text);

// A random variable whose sample space is a finite set of phrases, rendered
// from one template. Value index k always refers to fill_values[k]; the order
// is part of the model.
struct SequenceVariable {
  std::string name;
  VariableKind kind = VariableKind::Endogenous;
  std::string template_text;
  std::vector<std::string> fill_values;
  std::vector<std::string> rendered;  // template with each fill substituted

  static constexpr std::string_view kPlaceholder = "{x}";

  static SequenceVariable make(std::string name, VariableKind kind, std::string template_text,
                               std::vector<std::string> fill_values);

  std::size_t cardinality() const { return fill_values.size(); }

  // Invariant violations as human-readable strings; empty means valid.
  std::vector<std::string> violations() const;
};

}  // namespace seqscm
