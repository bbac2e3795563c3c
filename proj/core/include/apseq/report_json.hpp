#pragma once

#include <nlohmann/json.hpp>

#include "apseq/ap_analysis.hpp"
#include "apseq/first_order_solver.hpp"
#include "apseq/operator_model.hpp"

namespace apseq {

nlohmann::json to_json(const Window& w);
nlohmann::json to_json(const APReport& r);
nlohmann::json to_json(const BesicovitchReport& r);
nlohmann::json to_json(const RacCertificate& r);
/// Per-k arrays are emitted in window order; absent tails become null.
nlohmann::json to_json(const SolveReport& r);

}  // namespace apseq
