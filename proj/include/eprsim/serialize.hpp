#pragma once

#include <string>

#include <json.hpp>

#include "eprsim/model.hpp"

namespace eprsim {

// Model document layout (schema_version 1):
//   settings.p            2x2 array, row k / column l
//   transition{,_prime}   either {"xi1","xi2"} or {"p": 2x2 array (row i, col k)}
//                         or both (checked for agreement)
//   phases                array of 4 entries in (11,12,21,22) order,
//                         {"kind":"trig","theta":..} or {"kind":"hyp","sign":+-1,"theta":..}
//   scenario              optional {"gamma","gamma_prime"}
// Doubles survive a round trip bit-exactly.
nlohmann::json model_to_json(const ContextualModel& m);
ContextualModel model_from_json(const nlohmann::json& doc);
ContextualModel model_from_json_text(const std::string& text);

nlohmann::json validation_report_to_json(const ValidationReport& report);

}  // namespace eprsim
