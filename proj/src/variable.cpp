#include "seqscm/variable.hpp"

#include <set>

namespace seqscm {

std::string to_string(VariableKind kind) {
  return kind == VariableKind::Exogenous ? "exogenous" : "endogenous";
}

VariableKind variable_kind_from_string(const std::string& text) {
  if (text == "exogenous") return VariableKind::Exogenous;
  if (text == "endogenous") return VariableKind::Endogenous;
  throw SpecError("unknown variable kind: '" + text + "' (expected exogenous|endogenous)");
}

std::size_t placeholder_count(std::string_view template_text) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = template_text.find(SequenceVariable::kPlaceholder, pos)) !=
         std::string_view::npos) {
    ++count;
    pos += SequenceVariable::kPlaceholder.size();
  }
  return count;
}

std::string render_template(const std::string& template_text, const std::string& fill) {
  if (placeholder_count(template_text) != 1) {
    throw SpecError("template must contain the placeholder '" +
                    std::string(SequenceVariable::kPlaceholder) + "' exactly once: \"" +
                    template_text + "\"");
  }
  const std::size_t pos = template_text.find(SequenceVariable::kPlaceholder);
  std::string out;
  out.reserve(template_text.size() - SequenceVariable::kPlaceholder.size() + fill.size());
  out.append(template_text, 0, pos);
  out.append(fill);
  out.append(template_text, pos + SequenceVariable::kPlaceholder.size(), std::string::npos);
  return out;
}

SequenceVariable SequenceVariable::make(std::string name, VariableKind kind,
                                        std::string template_text,
                                        std::vector<std::string> fill_values) {
  SequenceVariable v;
  v.name = std::move(name);
  v.kind = kind;
  v.template_text = std::move(template_text);
  v.fill_values = std::move(fill_values);
  v.rendered.reserve(v.fill_values.size());
  for (const std::string& fill : v.fill_values) {
    v.rendered.push_back(render_template(v.template_text, fill));
  }
  return v;
}

std::vector<std::string> SequenceVariable::violations() const {
  std::vector<std::string> out;
  const std::string prefix = "variable '" + name + "': ";
  if (fill_values.empty()) {
    out.push_back(prefix + "needs at least one fill value");
  }
  if (placeholder_count(template_text) != 1) {
    out.push_back(prefix + "template must contain '" + std::string(kPlaceholder) +
                  "' exactly once");
  }
  {
    std::set<std::string> seen(fill_values.begin(), fill_values.end());
    if (seen.size() != fill_values.size()) {
      out.push_back(prefix + "fill values must be distinct");
    }
  }
  {
    std::set<std::string> seen(rendered.begin(), rendered.end());
    if (seen.size() != rendered.size()) {
      out.push_back(prefix + "rendered phrases must be distinct");
    }
  }
  if (rendered.size() != fill_values.size()) {
    out.push_back(prefix + "rendered phrases out of sync with fill values");
  }
  if (placeholder_count(template_text) == 1) {
    for (std::size_t k = 0; k < rendered.size() && k < fill_values.size(); ++k) {
      if (rendered[k] != render_template(template_text, fill_values[k])) {
        out.push_back(prefix + "rendered phrase " + std::to_string(k) +
                      " does not match its template");
        break;
      }
    }
  }
  return out;
}

}  // namespace seqscm
