#pragma once

#include "polyent/convexity.hpp"
#include "polyent/tensor.hpp"

#include <cstdint>
#include <vector>

namespace polyent {

// Most-local spectra of count random SLOCC images of psi. Sample i depends only on
// derive_seed(seed, i), so Serial and Parallel return identical results.
std::vector<std::vector<double>> sample_orbit_points(const PureState& psi, std::size_t count, std::uint64_t seed,
                                                     double max_cond, Exec exec = Exec::Serial);

std::vector<std::vector<double>> batch_most_local(const std::vector<PureState>& states, Exec exec = Exec::Serial);

// Smallest slack -(coeffs.x + offset) over the polytope's inequalities, per point.
std::vector<double> batch_min_slack(const HPolytope& p, const std::vector<std::vector<double>>& pts,
                                    Exec exec = Exec::Serial);

}  // namespace polyent
