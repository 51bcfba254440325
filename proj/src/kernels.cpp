#include "polyent/kernels.hpp"

namespace polyent {

std::vector<std::vector<double>> sample_orbit_points(const PureState& psi, std::size_t count, std::uint64_t seed,
                                                     double max_cond, Exec exec) {
  std::vector<std::vector<double>> out(count);
  const auto n = static_cast<long>(count);
#pragma omp parallel for schedule(dynamic, 4) if (exec == Exec::Parallel)
  for (long i = 0; i < n; ++i) {
    Slocc g = random_slocc(psi.dims, derive_seed(seed, static_cast<std::uint64_t>(i)), max_cond);
    out[static_cast<std::size_t>(i)] = most_local(local_spectrum(apply_slocc(g, psi)));
  }
  return out;
}

std::vector<std::vector<double>> batch_most_local(const std::vector<PureState>& states, Exec exec) {
  std::vector<std::vector<double>> out(states.size());
  const auto n = static_cast<long>(states.size());
#pragma omp parallel for schedule(dynamic, 4) if (exec == Exec::Parallel)
  for (long i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = most_local(local_spectrum(states[static_cast<std::size_t>(i)]));
  return out;
}

std::vector<double> batch_min_slack(const HPolytope& p, const std::vector<std::vector<double>>& pts, Exec exec) {
  std::vector<double> out(pts.size());
  const auto n = static_cast<long>(pts.size());
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
  for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = min_slack(p, pts[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace polyent
