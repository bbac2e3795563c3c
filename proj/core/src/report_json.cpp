#include "apseq/report_json.hpp"

#include <cmath>

namespace apseq {

namespace {

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

nlohmann::json to_json(const Window& w) { return nlohmann::json::array({w.lo, w.hi}); }

nlohmann::json to_json(const APReport& r) {
  nlohmann::json j;
  j["epsilon"] = number(r.epsilon);
  j["seminorm"] = r.seminorm_label;
  j["verdict"] = r.verdict;
  j["witness_L"] = r.witness_L ? nlohmann::json(*r.witness_L) : nlohmann::json(nullptr);
  j["translation_numbers"] = r.translation_numbers;
  j["max_defect"] = number(r.max_defect);
  return j;
}

nlohmann::json to_json(const BesicovitchReport& r) {
  nlohmann::json j;
  j["p"] = r.p;
  auto& values = j["values_by_l"] = nlohmann::json::array();
  for (const auto& [l, v] : r.values_by_l) values.push_back({{"l", l}, {"value", number(v)}});
  j["limsup_estimate"] = number(r.limsup_estimate);
  return j;
}

nlohmann::json to_json(const RacCertificate& r) {
  nlohmann::json j;
  j["seminorm"] = r.seminorm_label;
  j["k"] = r.k;
  j["depth"] = r.depth();
  j["partial_sum"] = r.partial_sums.empty() ? nlohmann::json(nullptr) : number(r.partial_sums.back().second);
  j["tail_bound"] = r.tail_bound ? number(*r.tail_bound) : nlohmann::json(nullptr);
  j["converged"] = r.converged;
  return j;
}

nlohmann::json to_json(const SolveReport& r) {
  nlohmann::json j;
  j["window"] = to_json(r.window);
  j["truncation_V"] = r.truncation_V;
  auto& tails = j["tail_bound"] = nlohmann::json::object();
  for (const auto& [label, values] : r.tail_bound) {
    auto& arr = tails[label] = nlohmann::json::array();
    for (const auto& t : values) arr.push_back(t ? number(*t) : nlohmann::json(nullptr));
  }
  auto& res = j["max_residual"] = nlohmann::json::object();
  for (const auto& [label, v] : r.max_residual) res[label] = number(v);
  j["periodicity_defect"] = r.periodicity_defect ? number(*r.periodicity_defect) : nlohmann::json(nullptr);
  j["ap_report"] = r.ap_report ? to_json(*r.ap_report) : nlohmann::json(nullptr);
  j["uniqueness"] = r.uniqueness;
  auto& fsup = j["f_sup"] = nlohmann::json::object();
  for (const auto& [label, v] : r.f_sup) fsup[label] = number(v);
  j["probe_window"] = to_json(r.probe_window);
  auto& cert = j["certificate_sup"] = nlohmann::json::object();
  for (const auto& [label, v] : r.certificate_sup) cert[label] = number(v);
  auto& diag = j["diagnostics"] = nlohmann::json::object();
  for (const auto& [key, v] : r.diagnostics) diag[key] = number(v);
  j["notes"] = r.notes;
  return j;
}

}  // namespace apseq
