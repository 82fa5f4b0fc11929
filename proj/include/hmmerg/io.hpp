#pragma once

// JSON model and measure files, and JSON/CSV renderings of reports.
//
// Model file:
//   {"states": {"ids": [...], "lambda": [...]},   optional; counting if absent
//    "obs":    {"ids": [...], "tau": [...]},      optional with "partition"
//    one of
//      "m": [[[m(s,t,a) for a] for t] for s]
//      "p": [[...]], "q": [[q(t,a)]]
//      "p": [[...]], "partition": [[state ids or 1-based indices], ...]}
//
// Measure file: {"lambda": [...]?, "atoms": [{"weight": w, "point": [...]}]}
// with points given as densities w.r.t. lambda.

#include <string>

#include <json.hpp>

#include "hmmerg/contraction.hpp"
#include "hmmerg/coupling.hpp"
#include "hmmerg/filter.hpp"
#include "hmmerg/lab.hpp"
#include "hmmerg/measures.hpp"
#include "hmmerg/model.hpp"

namespace hmmerg {

using Json = nlohmann::json;

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

HmmModel model_from_json(const Json& j);
Json model_to_json(const HmmModel& model);
HmmModel load_model(const std::string& path);

// lambda is taken from the file when present and must then match `lambda`
// if that is given too.
PointMassMeasure measure_from_json(const Json& j, const Vector* lambda, Vector* lambda_out = nullptr);
Json measure_to_json(const PointMassMeasure& mu);

Json vector_json(const Vector& v);
Vector vector_from_json(const Json& j, const char* what);
Json subset_json(const Subset& s, const CellSpace& space);
Subset subset_from_json(const Json& j, const CellSpace& space);

Json to_json(const ErgodicityReport& r);
Json to_json(const ConditionAResult& r, const CellSpace& obs);
Json to_json(const KrReport& r, const CellSpace& obs);
Json to_json(const PCertificate& c, const HmmModel& model);
Json to_json(const PViolation& v, const HmmModel& model);
Json to_json(const E1Result& r, const HmmModel& model);
Json to_json(const HopfCheck& h);
Json to_json(const EConditionReport& r);
Json to_json(const KantorovichResult& r);
Json to_json(const NearestBarycenterResult& r);
Json to_json(const WeakContractionReport& r);
Json to_json(const OscDecayReport& r);
Json to_json(const BarycenterIdentityReport& r);
Json to_json(const TightnessReport& r);
Json to_json(const LipschitzProbeReport& r);
Json to_json(const CouplingInequalityCheck& c);
Json to_json(const RateFit& f);

// CSV from an array of flat objects; columns follow the first row.
std::string to_csv(const Json& rows);

}  // namespace hmmerg
