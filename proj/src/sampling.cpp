#include "seqscm/sampling.hpp"

#include <algorithm>
#include <set>

namespace seqscm {

namespace {

void check_intervention(const SdScm& scm, const Intervention& intervention) {
  if (!scm.has_variable(intervention.variable)) {
    throw SamplingError("intervention on unknown variable '" + intervention.variable + "'");
  }
  const SequenceVariable& v = scm.variable(intervention.variable);
  if (v.kind != VariableKind::Endogenous) {
    throw SamplingError("intervention target '" + intervention.variable +
                        "' must be endogenous");
  }
  if (intervention.value >= v.cardinality()) {
    throw SamplingError("intervention value " + std::to_string(intervention.value) +
                        " out of range for '" + intervention.variable + "' (" +
                        std::to_string(v.cardinality()) + " values)");
  }
}

// Draws one variable given the partial assignment, recording the value,
// phrase, and distribution onto the unit.
void sample_one(const SdScm& scm, std::size_t position, PartialUnit& partial, Unit& unit,
                RngStream& rng) {
  const SequenceVariable& v = scm.variable_at(position);
  const std::string context = parent_context(scm, partial, v.name);
  try {
    auto [index, dist] = sample_restricted(*scm.scorer(), context, v.rendered, rng);
    unit.values[position] = index;
    unit.phrases[position] = v.rendered[index];
    unit.distributions[position] = std::move(dist);
  } catch (const ScorerError& e) {
    throw ScorerError(e.kind(), "while sampling variable '" + v.name + "': " + e.what());
  }
  partial.values[position] = unit.values[position];
  partial.phrases[position] = unit.phrases[position];
}

void place_fixed(std::size_t position, std::size_t value, const SequenceVariable& v,
                 PartialUnit& partial, Unit& unit) {
  unit.values[position] = value;
  unit.phrases[position] = v.rendered[value];
  partial.values[position] = value;
  partial.phrases[position] = unit.phrases[position];
}

Unit make_blank_unit(const SdScm& scm, Provenance provenance) {
  Unit unit;
  const std::size_t n = scm.variable_count();
  unit.values.assign(n, 0);
  unit.phrases.assign(n, std::string());
  unit.distributions.assign(n, std::nullopt);
  unit.provenance = std::move(provenance);
  return unit;
}

}  // namespace

std::string to_string(SampleMode mode) {
  switch (mode) {
    case SampleMode::Observational: return "observational";
    case SampleMode::Interventional: return "interventional";
    case SampleMode::Counterfactual: return "counterfactual";
  }
  return "unknown";
}

SampleMode sample_mode_from_string(const std::string& text) {
  if (text == "observational") return SampleMode::Observational;
  if (text == "interventional") return SampleMode::Interventional;
  if (text == "counterfactual") return SampleMode::Counterfactual;
  throw SamplingError("unknown sample mode: " + text);
}

PartialUnit PartialUnit::empty(std::size_t variable_count) {
  PartialUnit partial;
  partial.values.assign(variable_count, std::nullopt);
  partial.phrases.assign(variable_count, std::string());
  return partial;
}

std::string parent_context(const SdScm& scm, const PartialUnit& partial,
                           const std::string& variable) {
  const std::size_t position = scm.order_index(variable);
  const std::vector<std::size_t>& parents = scm.parent_positions(position);
  std::size_t total = 0;
  for (std::size_t p : parents) {
    if (!partial.values[p].has_value()) {
      throw SamplingError("parent '" + scm.order()[p] + "' of '" + variable +
                          "' is not assigned yet");
    }
    total += partial.phrases[p].size() + 1;
  }
  std::string context;
  context.reserve(total);
  for (std::size_t p : parents) {
    if (!context.empty()) {
      context.push_back(' ');
    }
    context.append(partial.phrases[p]);
  }
  return context;
}

std::uint64_t unit_stream_seed(std::uint64_t master_seed, std::uint64_t unit_index,
                               SampleMode mode, const std::optional<Intervention>& intervention) {
  std::uint64_t iv_name = 0;
  std::uint64_t iv_value = 0;
  if (intervention) {
    iv_name = fnv1a64(intervention->variable);
    iv_value = intervention->value + 1;
  }
  return derive_seed({master_seed, unit_index, fnv1a64(to_string(mode)), iv_name, iv_value});
}

Unit sample_observational(const SdScm& scm, RngStream& rng, Provenance provenance) {
  provenance.mode = SampleMode::Observational;
  provenance.intervention.reset();
  Unit unit = make_blank_unit(scm, std::move(provenance));
  PartialUnit partial = PartialUnit::empty(scm.variable_count());
  for (std::size_t position = 0; position < scm.variable_count(); ++position) {
    sample_one(scm, position, partial, unit, rng);
  }
  return unit;
}

Unit sample_interventional(const SdScm& scm, const Intervention& intervention, RngStream& rng,
                           Provenance provenance) {
  check_intervention(scm, intervention);
  provenance.mode = SampleMode::Interventional;
  provenance.intervention = intervention;
  Unit unit = make_blank_unit(scm, std::move(provenance));
  PartialUnit partial = PartialUnit::empty(scm.variable_count());
  const std::size_t intervened = scm.order_index(intervention.variable);
  for (std::size_t position = 0; position < scm.variable_count(); ++position) {
    if (position == intervened) {
      place_fixed(position, intervention.value, scm.variable_at(position), partial, unit);
    } else {
      sample_one(scm, position, partial, unit, rng);
    }
  }
  return unit;
}

Unit sample_counterfactual(const SdScm& scm, const Unit& factual,
                           const Intervention& intervention, RngStream& rng) {
  check_intervention(scm, intervention);
  if (factual.provenance.variation != scm.variation()) {
    throw SamplingError("counterfactual: factual unit comes from a different model variation");
  }
  if (factual.values.size() != scm.variable_count()) {
    throw SamplingError("counterfactual: factual unit has wrong variable count");
  }

  Provenance provenance = factual.provenance;
  provenance.mode = SampleMode::Counterfactual;
  provenance.intervention = intervention;
  Unit unit = make_blank_unit(scm, std::move(provenance));
  PartialUnit partial = PartialUnit::empty(scm.variable_count());

  const std::size_t intervened = scm.order_index(intervention.variable);
  const std::vector<std::string> nd = non_descendants(scm.graph(), intervention.variable);
  std::vector<bool> copy_from_factual(scm.variable_count(), false);
  for (const std::string& name : nd) {
    copy_from_factual[scm.order_index(name)] = true;
  }

  for (std::size_t position = 0; position < scm.variable_count(); ++position) {
    const SequenceVariable& v = scm.variable_at(position);
    if (position == intervened) {
      place_fixed(position, intervention.value, v, partial, unit);
    } else if (copy_from_factual[position]) {
      // Abduction by bookkeeping: exogenous values and all non-descendants
      // of the intervened variable are replayed verbatim.
      const std::size_t value = factual.values[position];
      if (value >= v.cardinality()) {
        throw SamplingError("counterfactual: factual value out of range for '" + v.name + "'");
      }
      place_fixed(position, value, v, partial, unit);
    } else {
      sample_one(scm, position, partial, unit, rng);
    }
  }
  return unit;
}

Unit observational_unit(const SdScm& scm, std::uint64_t seed, std::uint64_t unit_index) {
  RngStream rng(unit_stream_seed(seed, unit_index, SampleMode::Observational, std::nullopt));
  Provenance provenance;
  provenance.variation = scm.variation();
  provenance.master_seed = seed;
  provenance.unit_index = unit_index;
  return sample_observational(scm, rng, std::move(provenance));
}

Unit interventional_unit(const SdScm& scm, const Intervention& intervention, std::uint64_t seed,
                         std::uint64_t unit_index) {
  RngStream rng(unit_stream_seed(seed, unit_index, SampleMode::Interventional, intervention));
  Provenance provenance;
  provenance.variation = scm.variation();
  provenance.master_seed = seed;
  provenance.unit_index = unit_index;
  return sample_interventional(scm, intervention, rng, std::move(provenance));
}

Unit counterfactual_unit(const SdScm& scm, const Unit& factual, const Intervention& intervention) {
  RngStream rng(unit_stream_seed(factual.provenance.master_seed, factual.provenance.unit_index,
                                 SampleMode::Counterfactual, intervention));
  return sample_counterfactual(scm, factual, intervention, rng);
}

// ---------------------------------------------------------------------------
// JointTable

JointTable::JointTable(std::vector<std::string> order, std::vector<std::size_t> sizes)
    : order_(std::move(order)), sizes_(std::move(sizes)) {
  std::size_t cells = 1;
  for (std::size_t s : sizes_) {
    cells *= s;
  }
  cells_.assign(cells, 0.0);
}

std::size_t JointTable::flat_index(const std::vector<std::size_t>& assignment) const {
  std::size_t index = 0;
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    index = index * sizes_[i] + assignment[i];
  }
  return index;
}

double& JointTable::at(const std::vector<std::size_t>& assignment) {
  return cells_[flat_index(assignment)];
}

double JointTable::at(const std::vector<std::size_t>& assignment) const {
  return cells_[flat_index(assignment)];
}

double JointTable::total_mass() const {
  double sum = 0.0;
  for (double c : cells_) {
    sum += c;
  }
  return sum;
}

bool JointTable::next_assignment(std::vector<std::size_t>& assignment,
                                 const std::vector<std::size_t>& sizes) {
  for (std::size_t i = sizes.size(); i-- > 0;) {
    if (++assignment[i] < sizes[i]) {
      return true;
    }
    assignment[i] = 0;
  }
  return false;
}

JointTable JointTable::marginal(const std::vector<std::string>& keep) const {
  std::set<std::string> keep_set(keep.begin(), keep.end());
  std::vector<std::string> kept_order;
  std::vector<std::size_t> kept_sizes;
  std::vector<std::size_t> kept_positions;
  for (std::size_t i = 0; i < order_.size(); ++i) {
    if (keep_set.count(order_[i])) {
      kept_order.push_back(order_[i]);
      kept_sizes.push_back(sizes_[i]);
      kept_positions.push_back(i);
    }
  }
  if (kept_order.size() != keep_set.size()) {
    throw SamplingError("marginal: some requested variables are not in the table");
  }

  JointTable out(kept_order, kept_sizes);
  std::vector<std::size_t> assignment(order_.size(), 0);
  std::vector<std::size_t> sub(kept_positions.size(), 0);
  if (cells_.empty()) {
    return out;
  }
  do {
    for (std::size_t i = 0; i < kept_positions.size(); ++i) {
      sub[i] = assignment[kept_positions[i]];
    }
    out.at(sub) += at(assignment);
  } while (next_assignment(assignment, sizes_));
  return out;
}

// ---------------------------------------------------------------------------
// Exact enumeration

namespace {

struct Enumerator {
  const SdScm& scm;
  JointTable& table;
  // The intervened position, or npos for the plain joint.
  std::size_t intervened = static_cast<std::size_t>(-1);
  std::size_t intervened_value = 0;

  PartialUnit partial;
  std::vector<std::size_t> assignment;

  void run() {
    partial = PartialUnit::empty(scm.variable_count());
    assignment.assign(scm.variable_count(), 0);
    recurse(0, 1.0);
  }

  void recurse(std::size_t position, double mass) {
    if (position == scm.variable_count()) {
      table.at(assignment) += mass;
      return;
    }
    const SequenceVariable& v = scm.variable_at(position);
    if (position == intervened) {
      place(position, intervened_value, v);
      recurse(position + 1, mass);
      clear(position);
      return;
    }
    const std::string context = parent_context(scm, partial, v.name);
    const RestrictedDistribution dist =
        restricted_distribution(*scm.scorer(), context, v.rendered);
    for (std::size_t k = 0; k < v.cardinality(); ++k) {
      if (dist.probabilities[k] == 0.0) {
        // Zero-probability branches still get cells (value 0), but there is
        // no need to walk them.
        continue;
      }
      place(position, k, v);
      recurse(position + 1, mass * dist.probabilities[k]);
      clear(position);
    }
  }

  void place(std::size_t position, std::size_t value, const SequenceVariable& v) {
    assignment[position] = value;
    partial.values[position] = value;
    partial.phrases[position] = v.rendered[value];
  }

  void clear(std::size_t position) {
    assignment[position] = 0;
    partial.values[position] = std::nullopt;
    partial.phrases[position].clear();
  }
};

JointTable enumerate(const SdScm& scm, std::size_t cell_cap,
                     const Intervention* intervention) {
  std::vector<std::size_t> sizes;
  sizes.reserve(scm.variable_count());
  std::size_t cells = 1;
  for (std::size_t i = 0; i < scm.variable_count(); ++i) {
    const std::size_t cardinality = scm.variable_at(i).cardinality();
    sizes.push_back(cardinality);
    if (cells > cell_cap / cardinality) {
      throw SamplingError("state space too large for exact enumeration (cap " +
                          std::to_string(cell_cap) + " cells)");
    }
    cells *= cardinality;
  }

  JointTable table(scm.order(), sizes);
  Enumerator enumerator{scm, table};
  if (intervention) {
    check_intervention(scm, *intervention);
    enumerator.intervened = scm.order_index(intervention->variable);
    enumerator.intervened_value = intervention->value;
  }
  enumerator.run();
  return table;
}

}  // namespace

JointTable exact_joint(const SdScm& scm, std::size_t cell_cap) {
  return enumerate(scm, cell_cap, nullptr);
}

JointTable exact_interventional(const SdScm& scm, const Intervention& intervention,
                                std::size_t cell_cap) {
  return enumerate(scm, cell_cap, &intervention);
}

}  // namespace seqscm
