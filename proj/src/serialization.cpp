#include "chisum/serialization.hpp"

#include <algorithm>
#include <cmath>

#include "chisum/errors.hpp"

namespace chisum {

std::string decimal(const BigReal& x) { return x.to_string(); }

nlohmann::json log_value(const BigReal& x) {
  if (x.sign() <= 0) return "-inf";
  return x.log_abs();
}

nlohmann::json to_json(const ExpPolySum& f) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : f.terms())
    terms.push_back({{"coeff", decimal(t.coeff)}, {"rate", decimal(t.rate)}, {"power", t.power}});
  return {{"terms", terms}, {"degree_cap", f.degree_cap()}, {"precision_bits", f.precision()}};
}

ExpPolySum exp_poly_from_json(const nlohmann::json& j) {
  try {
    const auto bits = j.at("precision_bits").get<PrecisionBits>();
    ExpPolySum out(j.at("degree_cap").get<unsigned>());
    for (const auto& t : j.at("terms"))
      out.add({BigReal::parse(t.at("coeff").get<std::string>(), bits),
               BigReal::parse(t.at("rate").get<std::string>(), bits), t.at("power").get<unsigned>()});
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed exp-polynomial JSON: ") + e.what());
  }
}

nlohmann::json to_json(const CertifiedDensity& d) {
  nlohmann::json j;
  j["lower"] = to_json(d.lower);
  j["upper"] = to_json(d.upper);
  j["C"] = decimal(d.C);
  j["x_max"] = decimal(d.x_max);
  j["R_max"] = decimal(d.R_max);
  j["orders"] = d.plan.orders;
  j["slack"] = decimal(d.slack);
  j["dof"] = d.dof;
  if (d.pairing.leftover) j["leftover"] = decimal(*d.pairing.leftover);
  if (!d.jitter_bound.is_zero()) j["jitter_bound"] = decimal(d.jitter_bound);
  return j;
}

nlohmann::json to_json(const FitResult& f) {
  double worst = 0;
  for (double r : f.residuals) worst = std::max(worst, std::fabs(r));
  return {{"model", to_string(f.model)},
          {"params", f.params},
          {"std_errors", f.std_errors},
          {"residuals", f.residuals},
          {"max_abs_residual", worst},
          {"iterations", f.iterations}};
}

}  // namespace chisum
