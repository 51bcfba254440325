#include "doctest.h"
#include "gen.hpp"

#include "polyent/error.hpp"
#include "polyent/free_states.hpp"
#include "polyent/kernels.hpp"

#include <cmath>

using namespace polyent;
using oracle::qv;

namespace {

PureState ket_sum(const Dims& d, std::vector<Ket> kets) {
  std::vector<Term> t;
  for (auto& k : kets) t.push_back({k, {1.0, 0.0}});
  return normalize(from_terms(d, t));
}

PureState ghz() { return ket_sum({2, 2, 2}, {{0, 0, 0}, {1, 1, 1}}); }
PureState w() { return ket_sum({2, 2, 2}, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}); }
PureState w3() { return ket_sum({2, 2, 3}, {{0, 1, 0}, {1, 0, 1}, {0, 0, 2}}); }
PureState psi4() { return ket_sum({2, 3, 3}, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 2, 1}, {1, 1, 2}}); }

// Minimum of |diag marginals - 1/d|^2 over the weight simplex by Frank-Wolfe; independent of the exact solver.
double oracle_min_distance2(const Support& s, const Dims& dims) {
  const std::size_t m = s.size();
  auto value_grad = [&](const std::vector<double>& w, std::vector<double>& g) {
    std::vector<std::vector<double>> diag;
    for (int i = 0; i < dims.n(); ++i) diag.emplace_back(static_cast<std::size_t>(dims[i]), -1.0 / dims[i]);
    for (std::size_t k = 0; k < m; ++k)
      for (int i = 0; i < dims.n(); ++i) diag[static_cast<std::size_t>(i)][static_cast<std::size_t>(s[k][static_cast<std::size_t>(i)])] += w[k];
    double v = 0;
    for (const auto& r : diag)
      for (double x : r) v += x * x;
    g.assign(m, 0.0);
    for (std::size_t k = 0; k < m; ++k)
      for (int i = 0; i < dims.n(); ++i) g[k] += 2 * diag[static_cast<std::size_t>(i)][static_cast<std::size_t>(s[k][static_cast<std::size_t>(i)])];
    return v;
  };
  std::vector<double> w(m, 1.0 / static_cast<double>(m)), g;
  double v = 0;
  for (int it = 0; it < 20000; ++it) {
    v = value_grad(w, g);
    std::size_t best = static_cast<std::size_t>(std::min_element(g.begin(), g.end()) - g.begin());
    double step = 2.0 / (it + 2.0);
    for (std::size_t k = 0; k < m; ++k) w[k] *= 1 - step;
    w[best] += step;
  }
  return value_grad(w, g);
}

double exact_distance2(const QSpectrum& p, const Dims& dims) {
  Q s = 0;
  for (int i = 0; i < dims.n(); ++i)
    for (const Q& x : p[static_cast<std::size_t>(i)]) {
      Q y = x - Q(1, dims[i]);
      s += y * y;
    }
  return to_double(s);
}

}  // namespace

TEST_CASE("support and freeness") {
  CHECK(support(ghz()).size() == 2);
  CHECK(is_free(support(ghz())));
  CHECK(is_free(support(w())));
  CHECK_FALSE(is_free({{0, 0, 0}, {0, 0, 1}}));
  CHECK_THROWS_AS(solve_closest_point(ket_sum({2, 2, 2}, {{0, 0, 0}, {0, 0, 1}})), Error);
}

TEST_CASE("closest point of GHZ") {
  auto a = closest_point_matrix(support(ghz()));
  CHECK(a == std::vector<std::vector<long>>{{3, 0}, {0, 3}});
  auto sol = solve_closest_point(ghz());
  CHECK(sol.contains_origin);
  CHECK_FALSE(sol.inequality.has_value());
  CHECK(sol.weights == qv({"1/2", "1/2"}));
}

TEST_CASE("closest point of W") {
  auto a = closest_point_matrix(support(w()));
  CHECK(a == std::vector<std::vector<long>>{{3, 1, 1}, {1, 3, 1}, {1, 1, 3}});
  auto sol = solve_closest_point(w());
  CHECK(sol.weights == qv({"1/3", "1/3", "1/3"}));
  CHECK(sol.lambda == Q(5, 3));
  REQUIRE(sol.inequality);
  CHECK(*sol.inequality == at_least({1, 1, 1}, 2));
  CHECK(most_local(sol.point) == qv({"2/3", "2/3", "2/3"}));
}

TEST_CASE("closest point of W3 per ket") {
  auto sol = solve_closest_point(w3());
  // support is lexicographic: 002, 010, 101
  CHECK(sol.kets == Support{{0, 0, 2}, {0, 1, 0}, {1, 0, 1}});
  CHECK(sol.weights == qv({"1/5", "2/5", "2/5"}));
  CHECK(sol.point[0] == qv({"3/5", "2/5"}));
  CHECK(sol.point[1] == qv({"3/5", "2/5"}));
  CHECK(sol.point[2] == qv({"2/5", "2/5", "1/5"}));
  for (int i = 0; i < 3; ++i) {
    CMat rho = reduced_density_matrix(sol.state, i);
    CHECK((rho - CMat(rho.diagonal().asDiagonal())).norm() < 1e-12);
  }
}

TEST_CASE("closest point of psi4 in 2x3x3") {
  auto sol = solve_closest_point(psi4());
  CHECK(sol.kets == Support{{0, 0, 1}, {0, 1, 0}, {1, 0, 0}, {1, 1, 2}, {1, 2, 1}});
  CHECK(sol.weights == qv({"2/9", "2/9", "1/9", "2/9", "2/9"}));
  CHECK(sol.point[0] == qv({"5/9", "4/9"}));
  CHECK(sol.point[1] == qv({"4/9", "1/3", "2/9"}));
  CHECK(sol.point[2] == qv({"4/9", "1/3", "2/9"}));
  REQUIRE(sol.inequality);
  CHECK(*sol.inequality == at_least({1, 2, 1, 2, 1}, 3));
}

TEST_CASE("eigenvector defect") {
  CHECK(eigenvector_defect(w()) < 1e-12);
  CHECK(eigenvector_defect(ghz()) < 1e-12);
  CHECK(eigenvector_defect(w3()) > 1e-3);
  CHECK(eigenvector_defect(solve_closest_point(w3()).state) < 1e-12);
}

TEST_CASE("torus action reaches any positive coefficients") {
  std::vector<cplx> target{std::sqrt(1.0 / 3), std::sqrt(2.0 / 3)};
  Slocc t = torus_match(ghz(), target);
  PureState img = normalize(apply_slocc(t, ghz()));
  CHECK(std::abs(img.amp[0]) == doctest::Approx(std::sqrt(1.0 / 3)));
  CHECK(std::abs(img.amp[7]) == doctest::Approx(std::sqrt(2.0 / 3)));
  for (const auto& g : t) CHECK((g - CMat(g.diagonal().asDiagonal())).norm() == 0.0);
}

TEST_CASE("substates") {
  PureState s = substate(w(), {{0, 1, 0}, {1, 0, 0}});
  CHECK(support(s) == Support{{0, 1, 0}, {1, 0, 0}});
  CHECK(norm(s) == doctest::Approx(1.0));
  CHECK(std::abs(s.amp[2]) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("eigenvalue bound evaluator") {
  CVec e0 = CVec::Zero(2);
  e0[0] = 1;
  CHECK(eigenvalue_bound_rhs(w(), {0, 1, 2}, {e0, e0, e0}, {1, 1, 1}) == doctest::Approx(2.0));
  CHECK(eigenvalue_bound_rhs(ghz(), {0, 1, 2}, {e0, e0, e0}, {1, 1, 1}) == doctest::Approx(1.5));
}

TEST_CASE("property: marginals of free states are diagonal") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.1, 1.0), ph(0, 6.283185307179586);
  int tested = 0;
  for (int trial = 0; trial < 300 && tested < 60; ++trial) {
    Dims d = gen::random_dims(rng, 3, 3);
    if (d.n() < 2) continue;
    std::vector<Term> t;
    Support s;
    for (std::size_t k = 0; k < d.hdim(); ++k)
      if (u(rng) < 0.4) {
        Ket kk = ket_of_index(k, d);
        Support s2 = s;
        s2.push_back(kk);
        if (!is_free(s2)) continue;
        s = s2;
        t.push_back({kk, std::polar(u(rng), ph(rng))});
      }
    if (t.empty()) continue;
    ++tested;
    PureState psi = normalize(from_terms(d, t));
    for (int i = 0; i < d.n(); ++i) {
      CMat rho = reduced_density_matrix(psi, i);
      CHECK((rho - CMat(rho.diagonal().asDiagonal())).norm() < 1e-12);
    }
  }
  CHECK(tested >= 30);
}

TEST_CASE("property: exact closest point matches a Frank-Wolfe oracle and separates orbit samples") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  int solved = 0;
  for (int trial = 0; trial < 400 && solved < 25; ++trial) {
    Dims d = std::vector<Dims>{{2, 2, 2}, {2, 2, 3}, {2, 3, 3}, {2, 2, 2, 2}}[trial % 4];
    Support s;
    for (std::size_t k = 0; k < d.hdim(); ++k)
      if (u(rng) < 0.35) {
        Support s2 = s;
        s2.push_back(ket_of_index(k, d));
        if (is_free(s2)) s = s2;
      }
    if (s.size() < 2) continue;
    PureState psi = ket_sum(d, s);
    ClosestPointSolution sol;
    try {
      sol = solve_closest_point(psi);
    } catch (const Error& e) {
      CHECK(e.code() == "NoNonnegativeSolution");
      continue;
    }
    ++solved;
    CHECK(exact_distance2(sol.point, d) == doctest::Approx(oracle_min_distance2(s, d)).epsilon(1e-4));
    if (!sol.inequality) continue;
    HPolytope h{d, {*sol.inequality}};
    auto pts = sample_orbit_points(psi, 40, static_cast<std::uint64_t>(trial), 50.0);
    for (double sl : batch_min_slack(h, pts)) CHECK(sl >= -1e-8);
  }
  CHECK(solved >= 15);
}

TEST_CASE("property: the bound evaluator stays below the sum of largest eigenvalues") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    Dims d{2, 3, 2};
    PureState psi = gen::random_state(d, rng);
    std::vector<CVec> vs;
    for (int i = 0; i < d.n(); ++i) {
      CMat hu = haar_unitary(d[i], rng);
      vs.push_back(hu.col(0));
    }
    double rhs = eigenvalue_bound_rhs(psi, {0, 1, 2}, vs, {1, 1, 1});
    double lmax = 0;
    for (const auto& sp : local_spectrum(psi)) lmax += sp[0];
    CHECK(rhs <= lmax + 1e-12);
  }
}
