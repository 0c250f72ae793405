#include "eprsim.h"

#include <cmath>
#include <cstring>
#include <new>
#include <numbers>
#include <string>

#include <json.hpp>

#include "eprsim/algebra.hpp"
#include "eprsim/ensemble.hpp"
#include "eprsim/model.hpp"
#include "eprsim/rng.hpp"
#include "eprsim/serialize.hpp"

using nlohmann::json;

struct eprsim_model {
  eprsim::ContextualModel model;
};

namespace {

thread_local std::string g_last_error;

eprsim_status map_code(eprsim::ErrorCode code) {
  switch (code) {
    case eprsim::ErrorCode::Domain: return EPRSIM_ERR_DOMAIN;
    case eprsim::ErrorCode::SingularContext: return EPRSIM_ERR_SINGULAR_CONTEXT;
    case eprsim::ErrorCode::InadmissiblePhases: return EPRSIM_ERR_INADMISSIBLE_PHASES;
    case eprsim::ErrorCode::EmptyContext: return EPRSIM_ERR_EMPTY_CONTEXT;
    case eprsim::ErrorCode::InfeasibleHiddenAllocation:
      return EPRSIM_ERR_INFEASIBLE_HIDDEN_ALLOCATION;
    case eprsim::ErrorCode::Parse: return EPRSIM_ERR_PARSE;
  }
  return EPRSIM_ERR_INTERNAL;
}

// runs the body, translating C++ errors into status codes + last_error
template <typename Fn>
eprsim_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return EPRSIM_OK;
  } catch (const eprsim::Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EPRSIM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return EPRSIM_ERR_INTERNAL;
  }
}

eprsim_status invalid_argument(const char* what) {
  g_last_error = what;
  return EPRSIM_ERR_INVALID_ARGUMENT;
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void write_grid(const eprsim::Grid2x2& g, double out[4]) {
  for (int n = 0; n < 4; ++n) out[n] = g.v[static_cast<std::size_t>(n)];
}

json grid_json(const eprsim::Grid2x2& g) {
  return json::array({g.v[0], g.v[1], g.v[2], g.v[3]});
}

json verdict_json(const eprsim::Verdict& v) {
  if (v.kind == eprsim::Verdict::Kind::Stabilizes)
    return json{{"kind", "Stabilizes"}, {"limit", v.limit}};
  return json{{"kind", "Fluctuates"}, {"band_min", v.band_min}, {"band_max", v.band_max}};
}

eprsim::ProbabilityTable table_from_json(const json& a, const std::string& where) {
  if (!a.is_array() || a.size() != 2 || !a[0].is_array() || a[0].size() != 2 ||
      !a[1].is_array() || a[1].size() != 2)
    throw eprsim::ParseError(where + " must be a 2x2 array");
  eprsim::Grid2x2 g;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      if (!a[r][c].is_number()) throw eprsim::ParseError(where + " entries must be numbers");
      g(r + 1, c + 1) = a[r][c].get<double>();
    }
  try {
    return eprsim::ProbabilityTable::checked(g);
  } catch (const eprsim::DomainError& e) {
    throw eprsim::ParseError(where + ": " + e.what());
  }
}

eprsim::QuadrupleSchedulePair pair_from_json(const char* pair_json) {
  if (pair_json == nullptr) return eprsim::QuadrupleSchedulePair::default_pair();
  json doc = json::parse(pair_json, nullptr, false);
  if (doc.is_discarded()) throw eprsim::ParseError("schedule pair is not valid JSON");
  if (!doc.contains("qa") || !doc.contains("qb"))
    throw eprsim::ParseError("schedule pair needs 'qa' and 'qb' objects");
  auto ctx_table = [&](const char* which, const char* ctx) {
    const json& side = doc[which];
    if (!side.is_object() || !side.contains(ctx))
      throw eprsim::ParseError(std::string("schedule pair '") + which + "' needs context '" +
                               ctx + "'");
    return table_from_json(side[ctx], std::string(which) + "." + ctx);
  };
  eprsim::QuadrupleSchedulePair pair{
      eprsim::SettingDistribution::symmetric(), ctx_table("qa", "12"), ctx_table("qa", "21"),
      ctx_table("qb", "12"),                    ctx_table("qb", "21"), eprsim::OutcomePair(1, 1),
      eprsim::SettingPair(1, 2)};
  if (doc.contains("target")) {
    const json& t = doc["target"];
    auto index_pair = [&](const char* key) {
      if (!t.contains(key) || !t[key].is_array() || t[key].size() != 2 ||
          !t[key][0].is_number_integer() || !t[key][1].is_number_integer())
        throw eprsim::ParseError("schedule target needs integer pairs 'b' and 'a'");
      return std::pair<int, int>(t[key][0].get<int>(), t[key][1].get<int>());
    };
    try {
      const auto [bi, bj] = index_pair("b");
      const auto [ak, al] = index_pair("a");
      pair.target_b = eprsim::OutcomePair(bi, bj);
      pair.target_a = eprsim::SettingPair(ak, al);
    } catch (const eprsim::DomainError& e) {
      throw eprsim::ParseError(std::string("schedule target: ") + e.what());
    }
  }
  return pair;
}

}  // namespace

extern "C" {

const char* eprsim_version(void) { return "0.1.0"; }

const char* eprsim_status_name(eprsim_status status) {
  switch (status) {
    case EPRSIM_OK: return "ok";
    case EPRSIM_ERR_INVALID_ARGUMENT: return "invalid argument";
    case EPRSIM_ERR_DOMAIN: return "domain error";
    case EPRSIM_ERR_SINGULAR_CONTEXT: return "singular context";
    case EPRSIM_ERR_INADMISSIBLE_PHASES: return "inadmissible phases";
    case EPRSIM_ERR_EMPTY_CONTEXT: return "empty context";
    case EPRSIM_ERR_INFEASIBLE_HIDDEN_ALLOCATION: return "infeasible hidden allocation";
    case EPRSIM_ERR_PARSE: return "parse error";
    case EPRSIM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* eprsim_last_error(void) { return g_last_error.c_str(); }

eprsim_status eprsim_model_epr(double gamma, double gamma_prime, eprsim_model** out) {
  if (out == nullptr) return invalid_argument("null output handle");
  *out = nullptr;
  return guarded([&] {
    *out = new eprsim_model{eprsim::epr_model(eprsim::EPRScenario(gamma, gamma_prime))};
  });
}

eprsim_status eprsim_model_from_json(const char* json_text, eprsim_model** out) {
  if (json_text == nullptr || out == nullptr) return invalid_argument("null argument");
  *out = nullptr;
  return guarded([&] { *out = new eprsim_model{eprsim::model_from_json_text(json_text)}; });
}

eprsim_status eprsim_model_to_json(const eprsim_model* model, char** json_out) {
  if (model == nullptr || json_out == nullptr) return invalid_argument("null argument");
  return guarded([&] { *json_out = copy_string(eprsim::model_to_json(model->model).dump(2)); });
}

void eprsim_model_free(eprsim_model* model) { delete model; }

void eprsim_string_free(char* text) { delete[] text; }

eprsim_status eprsim_model_validate(const eprsim_model* model, char** report_json_out,
                                    int* all_pass, int* epr_admissible) {
  if (model == nullptr) return invalid_argument("null model");
  return guarded([&] {
    const eprsim::ValidationReport report = eprsim::validate_model(model->model);
    if (report_json_out != nullptr)
      *report_json_out = copy_string(eprsim::validation_report_to_json(report).dump(2));
    if (all_pass != nullptr) *all_pass = report.all_pass ? 1 : 0;
    if (epr_admissible != nullptr) *epr_admissible = report.epr_admissible ? 1 : 0;
  });
}

eprsim_status eprsim_epr_table(double gamma, double gamma_prime, double table_out[4]) {
  if (table_out == nullptr) return invalid_argument("null output table");
  return guarded([&] {
    write_grid(eprsim::epr_probabilities(eprsim::EPRScenario(gamma, gamma_prime)).grid(),
               table_out);
  });
}

eprsim_status eprsim_model_table(const eprsim_model* model, double table_out[4]) {
  if (model == nullptr || table_out == nullptr) return invalid_argument("null argument");
  return guarded([&] { write_grid(eprsim::apply_phases(model->model).grid(), table_out); });
}

eprsim_status eprsim_model_disturbance(const eprsim_model* model, double delta_out[4],
                                       double lambda_out[4]) {
  if (model == nullptr) return invalid_argument("null model");
  return guarded([&] {
    const eprsim::DisturbanceReport report = eprsim::disturbance_report(model->model);
    if (delta_out != nullptr) write_grid(report.delta_bar, delta_out);
    if (lambda_out != nullptr) write_grid(report.lambda, lambda_out);
  });
}

eprsim_status eprsim_correlation(const double table[4], double* correlation_out) {
  if (table == nullptr || correlation_out == nullptr) return invalid_argument("null argument");
  return guarded([&] {
    eprsim::Grid2x2 g;
    for (int n = 0; n < 4; ++n) g.v[static_cast<std::size_t>(n)] = table[n];
    *correlation_out = eprsim::correlation(eprsim::ProbabilityTable::checked(g));
  });
}

eprsim_status eprsim_chsh(double gamma1, double gamma2, double gamma1_prime, double gamma2_prime,
                          double* s_out) {
  if (s_out == nullptr) return invalid_argument("null output");
  return guarded([&] { *s_out = eprsim::chsh(gamma1, gamma2, gamma1_prime, gamma2_prime); });
}

eprsim_status eprsim_lambda_scan_row(double scale, char** row_json_out) {
  if (row_json_out == nullptr) return invalid_argument("null output");
  if (!(scale >= 0.0)) return invalid_argument("scale must be nonnegative");
  return guarded([&] {
    using namespace eprsim;
    const Grid2x2 pattern = Grid2x2::of(-1.0, 1.0, 1.0, -1.0);
    Grid2x2 lambda;
    for (auto [i, j] : kIndexPairs) lambda(i, j) = scale * pattern(i, j);
    const Regime regime = reconstruct_phases(lambda).regime();

    const SettingDistribution settings = SettingDistribution::symmetric();
    // E column angle pair: delta = pi/4 with both half-angles interior
    const double e_gamma = std::numbers::pi / 4.0;
    const double e_gamma_prime = std::numbers::pi / 2.0;

    // algebraic continuation: correlation of mixture + s * interference,
    // meaningful as a probability table only while admissible
    auto scaled_corr = [&](double g, double gp) {
      const TransitionMatrix t = TransitionMatrix::from_angles(g / 2.0, g / 2.0);
      const TransitionMatrix tp = TransitionMatrix::from_angles(gp / 2.0, gp / 2.0);
      Grid2x2 table;
      for (auto [i, j] : kIndexPairs) {
        const double mixture =
            settings(1, 2) * (t(i, 1) * tp(j, 2)) + settings(2, 1) * (t(i, 2) * tp(j, 1));
        const double root = std::sqrt(settings(1, 2) * settings(2, 1) * t(i, 1) * t(i, 2) *
                                      tp(j, 1) * tp(j, 2));
        table(i, j) = mixture + 2.0 * lambda(i, j) * root;
      }
      return (table(1, 1) + table(2, 2)) - (table(1, 2) + table(2, 1));
    };

    bool admissible = true;
    try {
      apply_phases(settings, TransitionMatrix::from_angles(e_gamma / 2.0, e_gamma / 2.0),
                   TransitionMatrix::from_angles(e_gamma_prime / 2.0, e_gamma_prime / 2.0),
                   reconstruct_phases(lambda));
    } catch (const InadmissiblePhases&) {
      admissible = false;
    }

    const double e = scaled_corr(e_gamma, e_gamma_prime);
    const double pi = std::numbers::pi;
    const double s_opt = scaled_corr(0.0, pi / 4.0) - scaled_corr(0.0, 3.0 * pi / 4.0) +
                         scaled_corr(pi / 2.0, pi / 4.0) + scaled_corr(pi / 2.0, 3.0 * pi / 4.0);

    json row{{"s", scale},
             {"regime", regime_name(regime)},
             {"admissible", admissible},
             {"E", e},
             {"S_opt", s_opt}};
    *row_json_out = copy_string(row.dump());
  });
}

uint64_t eprsim_derive_seed(uint64_t seed, uint64_t stream_id) {
  return eprsim::derive_seed(seed, stream_id);
}

eprsim_status eprsim_mc_epr_table(double gamma, double gamma_prime, uint64_t samples,
                                  uint64_t seed, double table_out[4]) {
  if (table_out == nullptr) return invalid_argument("null output table");
  return guarded([&] {
    const eprsim::ContextualModel m =
        eprsim::epr_model(eprsim::EPRScenario(gamma, gamma_prime));
    const eprsim::SampledEnsemble src = eprsim::sample_source(m, samples, seed);
    write_grid(eprsim::frequency_table(src, eprsim::WhichOutcome::Hidden).grid(), table_out);
  });
}

eprsim_status eprsim_simulate(const eprsim_model* model, uint64_t samples, uint64_t seed,
                              char** result_json_out) {
  if (model == nullptr || result_json_out == nullptr) return invalid_argument("null argument");
  return guarded([&] {
    using namespace eprsim;
    const ContextualModel& m = model->model;
    const SampledEnsemble src = sample_source(m, samples, seed);

    json doc;
    doc["schema_version"] = 1;
    doc["samples"] = samples;
    doc["seed"] = seed;
    doc["hidden_table"] = grid_json(frequency_table(src, WhichOutcome::Hidden).grid());

    json contexts = json::array();
    for (auto [k, l] : kIndexPairs) {
      std::uint64_t count = 0;
      for (const CompositeSystem& w : src.elements)
        count += w.a_val == k && w.a_prime_val == l;
      if (count == 0) continue;
      const auto [hidden, selected] = select_context(src, SettingPair(k, l), m, seed);
      contexts.push_back(
          {{"context", std::to_string(k) + std::to_string(l)},
           {"nu_a", static_cast<double>(count) / static_cast<double>(samples)},
           {"hidden_table", grid_json(frequency_table(hidden, WhichOutcome::Hidden).grid())},
           {"selected_table", grid_json(frequency_table(selected, WhichOutcome::Selected).grid())}});
    }
    doc["contexts"] = contexts;

    if (m.settings.is_anticorrelated() && samples >= 64) {
      try {
        const EmpiricalDisturbance emp = empirical_disturbance(m, samples, seed);
        doc["delta"] = grid_json(emp.delta_final);
        doc["lambda_hat"] = grid_json(emp.lambda_hat);
      } catch (const Error& e) {
        doc["lambda_error"] = e.what();
      }
    }
    *result_json_out = copy_string(doc.dump(2));
  });
}

eprsim_status eprsim_empirical_lambda(const eprsim_model* model, uint64_t samples, uint64_t seed,
                                      double delta_out[4], double lambda_out[4]) {
  if (model == nullptr) return invalid_argument("null model");
  return guarded([&] {
    const eprsim::EmpiricalDisturbance emp =
        eprsim::empirical_disturbance(model->model, samples, seed);
    if (delta_out != nullptr) write_grid(emp.delta_final, delta_out);
    if (lambda_out != nullptr) write_grid(emp.lambda_hat, lambda_out);
  });
}

eprsim_status eprsim_ensemble_csv(const eprsim_model* model, uint64_t samples, uint64_t seed,
                                  char** csv_out) {
  if (model == nullptr || csv_out == nullptr) return invalid_argument("null argument");
  return guarded([&] {
    using namespace eprsim;
    const ContextualModel& m = model->model;
    SampledEnsemble merged = sample_source(m, samples, seed);
    // merge per-context selection re-draws back into source order
    for (auto [k, l] : kIndexPairs) {
      std::uint64_t count = 0;
      for (const CompositeSystem& w : merged.elements)
        count += w.a_val == k && w.a_prime_val == l;
      if (count == 0) continue;
      const auto [hidden, selected] = select_context(merged, SettingPair(k, l), m, seed);
      for (const CompositeSystem& w : selected.elements)
        merged.elements[w.source_index].selected_b = w.selected_b;
    }
    *csv_out = copy_string(ensemble_csv(merged));
  });
}

eprsim_status eprsim_fluctuation_demo(const char* pair_json, uint64_t samples, uint64_t seed,
                                      double epsilon, int window, char** result_json_out) {
  if (result_json_out == nullptr) return invalid_argument("null output");
  return guarded([&] {
    using namespace eprsim;
    const QuadrupleSchedulePair pair = pair_from_json(pair_json);
    const FluctuationDemo demo = run_fluctuation_demo(pair, samples, seed, epsilon, window);

    json traces = json::array();
    for (const NamedTrace& t : demo.traces) {
      json points = json::array();
      for (const TracePoint& p : t.trace.points) points.push_back(json::array({p.M, p.value}));
      traces.push_back({{"target", t.trace.target},
                        {"kind", t.quadruple ? "quadruple" : "observable"},
                        {"points", points},
                        {"verdict", verdict_json(t.verdict)}});
    }
    json doc{{"schema_version", 1}, {"samples", samples},       {"seed", seed},
             {"epsilon", epsilon},  {"window", window},         {"traces", traces}};
    *result_json_out = copy_string(doc.dump(2));
  });
}

}  // extern "C"
