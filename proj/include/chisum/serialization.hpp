#pragma once

// JSON forms of the algebra and of certified densities. Reals are written as
// decimal strings with enough digits to round-trip at their precision.

#include <json.hpp>

#include "chisum/certified_density.hpp"
#include "chisum/exp_poly.hpp"
#include "chisum/vacua.hpp"

namespace chisum {

nlohmann::json to_json(const ExpPolySum& f);
ExpPolySum exp_poly_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CertifiedDensity& d);

nlohmann::json to_json(const FitResult& f);

/// Decimal string; "-inf"/"inf" for infinities.
std::string decimal(const BigReal& x);
/// Natural log as a JSON number, or the string "-inf" for zero.
nlohmann::json log_value(const BigReal& x);

}  // namespace chisum
