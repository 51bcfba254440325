#pragma once

#include "polyent/convexity.hpp"
#include "polyent/rational.hpp"
#include "polyent/tensor.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace polyent {

using json = nlohmann::json;

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

// Rationals travel as "p/q" or decimal strings; plain JSON numbers are also accepted on input.
Q rational_from_json(const json& j);
json to_json(const Q& q);
QVec qvec_from_json(const json& j);
json to_json(const QVec& v);

std::vector<Term> terms_from_json(const json& j);
json terms_to_json(const PureState& psi, double tol = 1e-14);
// {"dims":[..],"terms":[..]}. When expected is given, a dims mismatch throws DimsMismatch.
PureState state_from_json(const json& j, const std::optional<Dims>& expected = std::nullopt);
json state_to_json(const PureState& psi);

// {"coeffs":[..],"offset":..} with optional "dims"
Inequality inequality_from_json(const json& j, int expected_len = -1);
json to_json(const Inequality& ineq);
json to_json(const Inequality& ineq, const Dims& dims);

json spectrum_to_json(const Spectrum& s);

HPolytope hpolytope_from_json(const json& j);
VPolytope vpolytope_from_json(const json& j);
json to_json(const HPolytope& p);
json to_json(const VPolytope& v);

Dims dims_from_json(const json& j);
json to_json(const Dims& d);

}  // namespace polyent
