#include "eprsim/serialize.hpp"

#include <cmath>

namespace eprsim {

using nlohmann::json;

namespace {

json grid_to_json(const Grid2x2& g) {
  return json::array({json::array({g(1, 1), g(1, 2)}), json::array({g(2, 1), g(2, 2)})});
}

Grid2x2 grid_from_json(const json& a, const std::string& where) {
  if (!a.is_array() || a.size() != 2 || !a[0].is_array() || a[0].size() != 2 ||
      !a[1].is_array() || a[1].size() != 2)
    throw ParseError(where + " must be a 2x2 array");
  Grid2x2 g;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      const json& cell = a[r][c];
      if (!cell.is_number()) throw ParseError(where + " entries must be numbers");
      g(r + 1, c + 1) = cell.get<double>();
    }
  return g;
}

double number_at(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number())
    throw ParseError(where + " needs numeric field '" + key + "'");
  return obj[key].get<double>();
}

json phase_to_json(const PhaseEntry& e) {
  json out;
  if (e.kind() == PhaseEntry::Kind::Trig) {
    out["kind"] = "trig";
  } else {
    out["kind"] = "hyp";
    out["sign"] = e.sign();
  }
  out["theta"] = e.theta();
  return out;
}

PhaseEntry phase_from_json(const json& obj, const std::string& where) {
  if (!obj.is_object() || !obj.contains("kind") || !obj["kind"].is_string())
    throw ParseError(where + " must be an object with a 'kind' field");
  const std::string kind = obj["kind"].get<std::string>();
  const double theta = number_at(obj, "theta", where);
  try {
    if (kind == "trig") return PhaseEntry::trig(theta);
    if (kind == "hyp") {
      if (!obj.contains("sign") || !obj["sign"].is_number_integer())
        throw ParseError(where + " hyperbolic entry needs integer 'sign'");
      return PhaseEntry::hyp(obj["sign"].get<int>(), theta);
    }
  } catch (const DomainError& e) {
    throw ParseError(where + ": " + e.what());
  }
  throw ParseError(where + " kind must be 'trig' or 'hyp'");
}

TransitionMatrix transition_from_json(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + " must be an object");
  std::optional<TransitionMatrix> from_angles;
  if (obj.contains("xi1") || obj.contains("xi2") || obj.contains("alpha")) {
    double xi1, xi2;
    if (obj.contains("alpha")) {
      xi1 = xi2 = number_at(obj, "alpha", where);
    } else {
      xi1 = number_at(obj, "xi1", where);
      xi2 = number_at(obj, "xi2", where);
    }
    try {
      from_angles = TransitionMatrix::from_angles(xi1, xi2);
    } catch (const DomainError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  if (obj.contains("p")) {
    const Grid2x2 p = grid_from_json(obj["p"], where + ".p");
    if (from_angles) {
      for (auto [i, k] : kIndexPairs)
        if (std::abs(p(i, k) - (*from_angles)(i, k)) > kAlgebraTol)
          throw ParseError(where + ": probabilities disagree with the given angles");
      return *from_angles;
    }
    return TransitionMatrix::from_probabilities_unchecked(p);
  }
  if (from_angles) return *from_angles;
  throw ParseError(where + " needs either angles or probabilities");
}

}  // namespace

json model_to_json(const ContextualModel& m) {
  json doc;
  doc["schema_version"] = 1;
  doc["settings"] = {{"p", grid_to_json(m.settings.grid())}};

  auto transition_json = [](const TransitionMatrix& t) {
    json out;
    out["p"] = grid_to_json(t.grid());
    if (t.angles()) {
      out["xi1"] = t.angles()->first;
      out["xi2"] = t.angles()->second;
    }
    return out;
  };
  doc["transition"] = transition_json(m.transition);
  doc["transition_prime"] = transition_json(m.transition_prime);

  json phases = json::array();
  for (auto [i, j] : kIndexPairs) phases.push_back(phase_to_json(m.phases.entry(i, j)));
  doc["phases"] = phases;

  if (m.scenario)
    doc["scenario"] = {{"gamma", m.scenario->gamma}, {"gamma_prime", m.scenario->gamma_prime}};
  return doc;
}

ContextualModel model_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("model document must be a JSON object");
  if (!doc.contains("settings") || !doc["settings"].is_object() || !doc["settings"].contains("p"))
    throw ParseError("model document needs settings.p");
  Grid2x2 sp = grid_from_json(doc["settings"]["p"], "settings.p");
  // ingestion tolerance for the exact-zero anticorrelation cells
  if (std::abs(sp(1, 1)) <= kAlgebraTol) sp(1, 1) = 0.0;
  if (std::abs(sp(2, 2)) <= kAlgebraTol) sp(2, 2) = 0.0;
  SettingDistribution settings = SettingDistribution::from_probabilities_unchecked(sp);

  if (!doc.contains("transition") || !doc.contains("transition_prime"))
    throw ParseError("model document needs transition and transition_prime");
  TransitionMatrix t = transition_from_json(doc["transition"], "transition");
  TransitionMatrix tp = transition_from_json(doc["transition_prime"], "transition_prime");

  if (!doc.contains("phases") || !doc["phases"].is_array() || doc["phases"].size() != 4)
    throw ParseError("model document needs a 4-entry phases array (11,12,21,22 order)");
  PhaseMatrix phases(phase_from_json(doc["phases"][0], "phases[0]"),
                     phase_from_json(doc["phases"][1], "phases[1]"),
                     phase_from_json(doc["phases"][2], "phases[2]"),
                     phase_from_json(doc["phases"][3], "phases[3]"));

  std::optional<EPRScenario> scenario;
  if (doc.contains("scenario")) {
    const json& s = doc["scenario"];
    scenario = EPRScenario(number_at(s, "gamma", "scenario"),
                           number_at(s, "gamma_prime", "scenario"));
  }

  bool outcome_independent = true;
  if (doc.contains("outcome_independent")) {
    if (!doc["outcome_independent"].is_boolean())
      throw ParseError("outcome_independent must be a boolean");
    outcome_independent = doc["outcome_independent"].get<bool>();
  }

  return ContextualModel{std::move(settings), std::move(t), std::move(tp), std::move(phases),
                         outcome_independent, scenario};
}

ContextualModel model_from_json_text(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ParseError("model document is not valid JSON");
  return model_from_json(doc);
}

json validation_report_to_json(const ValidationReport& report) {
  json checks = json::array();
  for (const auto& c : report.checks)
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"residual", c.residual}});
  return json{{"schema_version", 1},
              {"checks", checks},
              {"all_pass", report.all_pass},
              {"epr_admissible", report.epr_admissible}};
}

}  // namespace eprsim
