// Regenerates the score-table fixtures bundled under specs/fixtures/. Each
// table is keyed on the exact context strings the paired spec renders, so the
// tables are derived from the spec files rather than written by hand.
//
// Usage: seqscm_make_fixtures [specs_dir]

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "seqscm/benchmark.hpp"
#include "seqscm/scorer.hpp"
#include "seqscm/spec_format.hpp"

using namespace seqscm;

namespace {

// Signal strength per value index, centered: {-1, -0.5, 0, 0.5, 1} for five
// values, {-1, 1} for two, and so on.
double signal(std::size_t index, std::size_t cardinality) {
  const double center = static_cast<double>(cardinality - 1) / 2.0;
  return (static_cast<double>(index) - center) / center;
}

// All rendered phrases of a variable under a given phrasing.
std::vector<std::string> rendered(const SpecVariable& v, std::size_t phrasing) {
  std::vector<std::string> out;
  out.reserve(v.fill_values.size());
  for (const std::string& fill : v.fill_values) {
    out.push_back(render_template(v.phrasings[phrasing], fill));
  }
  return out;
}

void add_binary(TabularScoreTable& table, const std::string& context,
                const std::vector<std::string>& candidates, double p_one) {
  table.add(context, candidates[0], 1.0 - p_one);
  table.add(context, candidates[1], p_one);
}

void write_table(const TabularScoreTable& table, const std::filesystem::path& path) {
  write_file_atomic(path, table.to_json());
  std::printf("wrote %s (%zu entries)\n", path.string().c_str(), table.size());
}

// ---------------------------------------------------------------------------
// marathon_g1 + marathon_confounder: the weather drives both the activity
// choice and the marathon outlook; the name variables add idiosyncratic
// variation so the within-stratum correlation is well defined.

TabularScoreTable confounder_table(const ScmSpecDocument& spec) {
  const auto u1 = rendered(spec.variable("u1"), 0);
  const auto u2 = rendered(spec.variable("u2"), 0);
  const auto w = rendered(spec.variable("w"), 0);
  const auto g = rendered(spec.variable("g"), 0);
  const auto m = rendered(spec.variable("m"), 0);

  TabularScoreTable table(1.0);  // roots stay uniform
  for (std::size_t k1 = 0; k1 < u1.size(); ++k1) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double p = 0.5 + 0.35 * signal(j, w.size()) + 0.10 * signal(k1, u1.size());
      add_binary(table, u1[k1] + " " + w[j], g, p);
    }
  }
  for (std::size_t k2 = 0; k2 < u2.size(); ++k2) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double p = 0.5 + 0.35 * signal(j, w.size()) + 0.10 * signal(k2, u2.size());
      add_binary(table, u2[k2] + " " + w[j], m, p);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// marathon_g2 + marathon_collider: the names drive activity and outlook
// independently; the weather is an agreement detector between them.

TabularScoreTable collider_table(const ScmSpecDocument& spec) {
  const auto u1 = rendered(spec.variable("u1"), 0);
  const auto u2 = rendered(spec.variable("u2"), 0);
  const auto w = rendered(spec.variable("w"), 0);
  const auto g = rendered(spec.variable("g"), 0);
  const auto m = rendered(spec.variable("m"), 0);

  TabularScoreTable table(1.0);
  for (std::size_t k1 = 0; k1 < u1.size(); ++k1) {
    add_binary(table, u1[k1], g, 0.5 + 0.4 * signal(k1, u1.size()));
  }
  for (std::size_t k2 = 0; k2 < u2.size(); ++k2) {
    add_binary(table, u2[k2], m, 0.5 + 0.4 * signal(k2, u2.size()));
  }
  for (std::size_t gi = 0; gi < g.size(); ++gi) {
    for (std::size_t mi = 0; mi < m.size(); ++mi) {
      const std::string context = g[gi] + " " + m[mi];
      const bool agree = gi == mi;
      table.add(context, w[0], agree ? 24.0 : 2.0);
      table.add(context, w[1], agree ? 2.0 : 24.0);
      table.add(context, w[2], 1e-9);
      table.add(context, w[3], 1e-9);
      table.add(context, w[4], 1e-9);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// causal_binary tables. These cover every phrasing combination, so they stay
// valid for any sampled variation of the spec.

using OutcomeRule = double (*)(std::size_t u, std::size_t t);

TabularScoreTable causal_binary_table(const ScmSpecDocument& spec, bool confounded_propensity,
                                      OutcomeRule p_good) {
  const SpecVariable& u = spec.variable("u");
  const SpecVariable& t = spec.variable("t");
  const SpecVariable& y = spec.variable("y");

  TabularScoreTable table(1.0);
  for (std::size_t up = 0; up < u.phrasings.size(); ++up) {
    const auto u_phrases = rendered(u, up);
    for (std::size_t tp = 0; tp < t.phrasings.size(); ++tp) {
      const auto t_phrases = rendered(t, tp);
      if (confounded_propensity) {
        for (std::size_t ui = 0; ui < u_phrases.size(); ++ui) {
          add_binary(table, u_phrases[ui], t_phrases, ui == 1 ? 0.9 : 0.1);
        }
      }
      for (std::size_t yp = 0; yp < y.phrasings.size(); ++yp) {
        const auto y_phrases = rendered(y, yp);
        for (std::size_t ui = 0; ui < u_phrases.size(); ++ui) {
          for (std::size_t ti = 0; ti < t_phrases.size(); ++ti) {
            add_binary(table, u_phrases[ui] + " " + t_phrases[ti], y_phrases, p_good(ui, ti));
          }
        }
      }
    }
  }
  return table;
}

// Observational and interventional contrasts flip sign: the confounder pulls
// the outcome down exactly where it pushes the treatment up.
double signflip_outcome(std::size_t u, std::size_t t) {
  return (u == 1 ? 0.20 : 0.60) + 0.10 * static_cast<double>(t);
}

// Effect +0.1 on average (+0.08 at u=0, +0.12 at u=1), uniform propensity.
double audit_up_outcome(std::size_t u, std::size_t t) {
  return 0.45 + (0.08 + 0.04 * static_cast<double>(u)) * static_cast<double>(t);
}

// Mirror image of audit_up: effect -0.1 on average.
double audit_down_outcome(std::size_t u, std::size_t t) {
  return 0.55 - (0.08 + 0.04 * static_cast<double>(u)) * static_cast<double>(t);
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path specs_dir = argc > 1 ? argv[1] : "specs";
  const std::filesystem::path fixtures_dir = specs_dir / "fixtures";
  try {
    std::filesystem::create_directories(fixtures_dir);

    const ScmSpecDocument g1 = load_spec_file(specs_dir / "marathon_g1.scm.json");
    const ScmSpecDocument g2 = load_spec_file(specs_dir / "marathon_g2.scm.json");
    const ScmSpecDocument binary = load_spec_file(fixtures_dir / "causal_binary.scm.json");

    write_table(confounder_table(g1), fixtures_dir / "marathon_confounder.table.json");
    write_table(collider_table(g2), fixtures_dir / "marathon_collider.table.json");
    write_table(causal_binary_table(binary, true, signflip_outcome),
                fixtures_dir / "signflip.table.json");
    write_table(causal_binary_table(binary, false, audit_up_outcome),
                fixtures_dir / "audit_up.table.json");
    write_table(causal_binary_table(binary, false, audit_down_outcome),
                fixtures_dir / "audit_down.table.json");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
