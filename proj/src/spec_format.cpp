#include "seqscm/spec_format.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "seqscm/rng.hpp"

namespace seqscm {

namespace {

constexpr std::size_t kMaxPhrasings = 1000;
constexpr std::size_t kMaxFillValues = 1000;

bool ends_in_sentence_punctuation(const std::string& text) {
  if (text.empty()) {
    return false;
  }
  const char last = text.back();
  return last == '.' || last == '!' || last == '?';
}

std::string json_type_name(const nlohmann::json& j) { return j.type_name(); }

const nlohmann::json& require_field(const nlohmann::json& object, const std::string& field,
                                    const std::string& path) {
  if (!object.contains(field)) {
    throw SpecError("schema violation at " + path + ": missing field '" + field + "'");
  }
  return object.at(field);
}

std::string require_string(const nlohmann::json& value, const std::string& path) {
  if (!value.is_string()) {
    throw SpecError("schema violation at " + path + ": expected string, got " +
                    json_type_name(value));
  }
  return value.get<std::string>();
}

std::vector<std::string> require_string_array(const nlohmann::json& value,
                                              const std::string& path) {
  if (!value.is_array()) {
    throw SpecError("schema violation at " + path + ": expected array, got " +
                    json_type_name(value));
  }
  std::vector<std::string> out;
  out.reserve(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) {
    out.push_back(require_string(value[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void check_semantics(const ScmSpecDocument& spec) {
  if (spec.name.empty()) {
    throw SpecError("semantic violation: spec name must be nonempty");
  }
  if (spec.variables.empty()) {
    throw SpecError("semantic violation: spec declares no variables");
  }
  std::set<std::string> names;
  for (const SpecVariable& v : spec.variables) {
    if (!names.insert(v.name).second) {
      throw SpecError("semantic violation: duplicate variable '" + v.name + "'");
    }
    if (v.fill_values.empty() || v.fill_values.size() > kMaxFillValues) {
      throw SpecError("semantic violation: variable '" + v.name + "' needs 1.." +
                      std::to_string(kMaxFillValues) + " fill values");
    }
    if (v.phrasings.empty() || v.phrasings.size() > kMaxPhrasings) {
      throw SpecError("semantic violation: variable '" + v.name + "' needs 1.." +
                      std::to_string(kMaxPhrasings) + " phrasings");
    }
    if (std::set<std::string>(v.fill_values.begin(), v.fill_values.end()).size() !=
        v.fill_values.size()) {
      throw SpecError("semantic violation: variable '" + v.name + "' has duplicate fill values");
    }
    for (std::size_t p = 0; p < v.phrasings.size(); ++p) {
      const std::string where = "variable '" + v.name + "' phrasing " + std::to_string(p);
      if (placeholder_count(v.phrasings[p]) != 1) {
        throw SpecError("semantic violation: " + where + " must contain '" +
                        std::string(SequenceVariable::kPlaceholder) + "' exactly once");
      }
      if (!ends_in_sentence_punctuation(v.phrasings[p])) {
        // Concatenated parent phrases must read as prose; a later phrase
        // gets appended after this one with a single space.
        throw SpecError("semantic violation: " + where + " must end in sentence punctuation");
      }
    }
  }
  for (const Edge& e : spec.edges) {
    if (!names.count(e.parent)) {
      throw SpecError("semantic violation: edge parent '" + e.parent + "' is not declared");
    }
    if (!names.count(e.child)) {
      throw SpecError("semantic violation: edge child '" + e.child + "' is not declared");
    }
  }
  for (const std::string& role : {spec.treatment, spec.outcome}) {
    if (!names.count(role)) {
      throw SpecError("semantic violation: designated variable '" + role + "' is not declared");
    }
    if (spec.variable(role).kind != VariableKind::Endogenous) {
      throw SpecError("semantic violation: designated variable '" + role +
                      "' must be endogenous");
    }
  }
  if (spec.treatment == spec.outcome) {
    throw SpecError("semantic violation: treatment and outcome must be distinct variables");
  }
}

}  // namespace

const SpecVariable& ScmSpecDocument::variable(const std::string& name) const {
  for (const SpecVariable& v : variables) {
    if (v.name == name) {
      return v;
    }
  }
  throw SpecError("unknown variable: " + name);
}

bool ScmSpecDocument::has_variable(const std::string& name) const {
  return std::any_of(variables.begin(), variables.end(),
                     [&](const SpecVariable& v) { return v.name == name; });
}

std::uint64_t ScmSpecDocument::variation_count() const {
  const std::uint64_t cap = std::numeric_limits<std::int64_t>::max();
  std::uint64_t product = 1;
  for (const SpecVariable& v : variables) {
    const std::uint64_t count = v.phrasings.size();
    if (count == 0) {
      return 0;
    }
    if (product > cap / count) {
      return cap;
    }
    product *= count;
  }
  return product;
}

ScmSpecDocument parse_spec(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError(std::string("syntax error: ") + e.what());
  }
  if (!doc.is_object()) {
    throw SpecError("schema violation at $: top level must be an object");
  }

  ScmSpecDocument spec;
  spec.name = require_string(require_field(doc, "name", "$"), "$.name");

  const auto& variables = require_field(doc, "variables", "$");
  if (!variables.is_array()) {
    throw SpecError("schema violation at $.variables: expected array");
  }
  for (std::size_t i = 0; i < variables.size(); ++i) {
    const std::string path = "$.variables[" + std::to_string(i) + "]";
    const auto& entry = variables[i];
    if (!entry.is_object()) {
      throw SpecError("schema violation at " + path + ": expected object");
    }
    SpecVariable v;
    v.name = require_string(require_field(entry, "name", path), path + ".name");
    v.kind = variable_kind_from_string(
        require_string(require_field(entry, "kind", path), path + ".kind"));
    v.fill_values =
        require_string_array(require_field(entry, "fill_values", path), path + ".fill_values");
    v.phrasings =
        require_string_array(require_field(entry, "phrasings", path), path + ".phrasings");
    spec.variables.push_back(std::move(v));
  }

  const auto& edges = require_field(doc, "edges", "$");
  if (!edges.is_array()) {
    throw SpecError("schema violation at $.edges: expected array");
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string path = "$.edges[" + std::to_string(i) + "]";
    const auto& entry = edges[i];
    if (!entry.is_array() || entry.size() != 2) {
      throw SpecError("schema violation at " + path + ": expected [parent, child]");
    }
    spec.edges.push_back(
        {require_string(entry[0], path + "[0]"), require_string(entry[1], path + "[1]")});
  }

  spec.treatment = require_string(require_field(doc, "treatment", "$"), "$.treatment");
  spec.outcome = require_string(require_field(doc, "outcome", "$"), "$.outcome");
  if (doc.contains("notes")) {
    spec.notes = require_string(doc["notes"], "$.notes");
  }

  check_semantics(spec);
  return spec;
}

ScmSpecDocument load_spec_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw SpecError("cannot open spec file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_spec(buffer.str());
  } catch (const SpecError& e) {
    throw SpecError(path.string() + ": " + e.what());
  }
}

std::string serialize_spec(const ScmSpecDocument& spec) {
  nlohmann::ordered_json doc;
  doc["name"] = spec.name;
  auto variables = nlohmann::ordered_json::array();
  for (const SpecVariable& v : spec.variables) {
    nlohmann::ordered_json entry;
    entry["name"] = v.name;
    entry["kind"] = to_string(v.kind);
    entry["fill_values"] = v.fill_values;
    entry["phrasings"] = v.phrasings;
    variables.push_back(std::move(entry));
  }
  doc["variables"] = std::move(variables);
  auto edges = nlohmann::ordered_json::array();
  for (const Edge& e : spec.edges) {
    edges.push_back(nlohmann::ordered_json::array({e.parent, e.child}));
  }
  doc["edges"] = std::move(edges);
  doc["treatment"] = spec.treatment;
  doc["outcome"] = spec.outcome;
  if (!spec.notes.empty()) {
    doc["notes"] = spec.notes;
  }
  return doc.dump(2) + "\n";
}

bool specs_equal(const ScmSpecDocument& a, const ScmSpecDocument& b) {
  if (a.name != b.name || a.treatment != b.treatment || a.outcome != b.outcome ||
      a.notes != b.notes || a.edges != b.edges || a.variables.size() != b.variables.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.variables.size(); ++i) {
    const SpecVariable& va = a.variables[i];
    const SpecVariable& vb = b.variables[i];
    if (va.name != vb.name || va.kind != vb.kind || va.fill_values != vb.fill_values ||
        va.phrasings != vb.phrasings) {
      return false;
    }
  }
  return true;
}

std::vector<std::string> lint_spec(const ScmSpecDocument& spec) {
  std::vector<std::string> warnings;
  // Benchmark-shaped documents want the outcome downstream of everything.
  for (const Edge& e : spec.edges) {
    if (e.parent == spec.outcome) {
      warnings.push_back("outcome '" + spec.outcome + "' is not a sink (edge into '" + e.child +
                         "')");
      break;
    }
  }
  bool treatment_feeds_outcome = false;
  for (const Edge& e : spec.edges) {
    if (e.parent == spec.treatment && e.child == spec.outcome) {
      treatment_feeds_outcome = true;
      break;
    }
  }
  if (!treatment_feeds_outcome) {
    warnings.push_back("no direct edge from treatment '" + spec.treatment + "' to outcome '" +
                       spec.outcome + "'");
  }
  return warnings;
}

SdScm instantiate_variation(const ScmSpecDocument& spec, const VariationId& variation,
                            ScorerPtr scorer, std::uint64_t master_seed) {
  if (variation.indices.size() != spec.variables.size()) {
    throw SpecError("variation id has " + std::to_string(variation.indices.size()) +
                    " indices for " + std::to_string(spec.variables.size()) + " variables");
  }
  std::vector<std::string> node_names;
  std::vector<SequenceVariable> variables;
  node_names.reserve(spec.variables.size());
  variables.reserve(spec.variables.size());
  for (std::size_t i = 0; i < spec.variables.size(); ++i) {
    const SpecVariable& v = spec.variables[i];
    const std::size_t phrasing = variation.indices[i];
    if (phrasing >= v.phrasings.size()) {
      throw SpecError("variation index " + std::to_string(phrasing) + " out of range for '" +
                      v.name + "' (" + std::to_string(v.phrasings.size()) + " phrasings)");
    }
    node_names.push_back(v.name);
    variables.push_back(
        SequenceVariable::make(v.name, v.kind, v.phrasings[phrasing], v.fill_values));
  }

  SdScm scm(CausalGraph(std::move(node_names), spec.edges), std::move(variables),
            std::move(scorer), variation, master_seed);
  const ValidationReport report = validate(scm);
  if (!report.ok()) {
    throw SpecError("instantiated model is invalid:\n" + report.to_string());
  }
  return scm;
}

std::vector<VariationId> sample_variations(const ScmSpecDocument& spec, std::size_t count,
                                           std::uint64_t seed) {
  if (count == 0) {
    throw SpecError("sample_variations: count must be >= 1");
  }
  if (count > spec.variation_count()) {
    throw SpecError("insufficient distinct variations: requested " + std::to_string(count) +
                    " but the spec admits " + std::to_string(spec.variation_count()));
  }
  RngStream rng(derive_seed({seed, fnv1a64("variations")}));
  std::set<std::vector<std::size_t>> seen;
  std::vector<VariationId> out;
  out.reserve(count);
  while (out.size() < count) {
    std::vector<std::size_t> indices;
    indices.reserve(spec.variables.size());
    for (const SpecVariable& v : spec.variables) {
      indices.push_back(static_cast<std::size_t>(rng.uniform_below(v.phrasings.size())));
    }
    if (seen.insert(indices).second) {
      out.push_back(VariationId{std::move(indices)});
    }
  }
  return out;
}

}  // namespace seqscm
