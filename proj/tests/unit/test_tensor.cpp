#include "doctest.h"
#include "gen.hpp"

#include "polyent/error.hpp"
#include "polyent/tensor.hpp"

#include <cmath>

using namespace polyent;

namespace {

PureState ghz3() { return normalize(from_terms(Dims{2, 2, 2}, {{{0, 0, 0}}, {{1, 1, 1}}})); }
PureState w3() { return normalize(from_terms(Dims{2, 2, 2}, {{{1, 0, 0}}, {{0, 1, 0}}, {{0, 0, 1}}})); }

// Direct summation over all index pairs, decoding kets by hand.
CMat rdm_oracle(const PureState& psi, int site) {
  const auto& d = psi.dims.d;
  const std::size_t H = psi.dims.hdim();
  auto digits = [&](std::size_t idx) {
    std::vector<int> j(d.size());
    for (std::size_t k = d.size(); k-- > 0;) {
      j[k] = static_cast<int>(idx % static_cast<std::size_t>(d[k]));
      idx /= static_cast<std::size_t>(d[k]);
    }
    return j;
  };
  CMat rho = CMat::Zero(d[static_cast<std::size_t>(site)], d[static_cast<std::size_t>(site)]);
  for (std::size_t a = 0; a < H; ++a)
    for (std::size_t b = 0; b < H; ++b) {
      auto ja = digits(a), jb = digits(b);
      bool same = true;
      for (std::size_t k = 0; k < d.size(); ++k)
        if (static_cast<int>(k) != site && ja[k] != jb[k]) same = false;
      if (!same) continue;
      rho(ja[static_cast<std::size_t>(site)], jb[static_cast<std::size_t>(site)]) +=
          psi.amp[static_cast<Eigen::Index>(a)] * std::conj(psi.amp[static_cast<Eigen::Index>(b)]);
    }
  return rho / psi.amp.squaredNorm();
}

}  // namespace

TEST_CASE("basis kets use row-major order") {
  auto a = basis_ket({0, 0, 0}, Dims{2, 2, 2});
  CHECK(a.amp.size() == 8);
  CHECK(a.amp[0] == cplx(1, 0));
  CHECK(basis_ket({1, 1}, Dims{2, 2}).amp[3] == cplx(1, 0));
  CHECK(basis_ket({0, 2}, Dims{2, 3}).amp[2] == cplx(1, 0));
  CHECK_THROWS_AS(basis_ket({0, 3}, Dims{2, 3}), Error);
  try {
    basis_ket({2, 0}, Dims{2, 3});
  } catch (const Error& e) {
    CHECK(e.code() == "IndexOutOfRange");
  }
}

TEST_CASE("normalize") {
  auto g = ghz3();
  CHECK(std::abs(g.amp[0] - cplx(1 / std::sqrt(2.0), 0)) < 1e-15);
  CHECK(std::abs(g.amp[7] - cplx(1 / std::sqrt(2.0), 0)) < 1e-15);
  PureState q{Dims{2}, CVec(2)};
  q.amp << 3, 4;
  auto n = normalize(q);
  CHECK(std::abs(n.amp[0] - 0.6) < 1e-15);
  CHECK(std::abs(n.amp[1] - 0.8) < 1e-15);
  CHECK((normalize(n).amp - n.amp).norm() < 1e-15);
  PureState z{Dims{2, 2}, CVec::Zero(4)};
  CHECK_THROWS_AS(normalize(z), Error);
}

TEST_CASE("reduced density matrices of named states") {
  CMat r = reduced_density_matrix(w3(), 0);
  CHECK(std::abs(r(0, 0) - 2.0 / 3) < 1e-14);
  CHECK(std::abs(r(1, 1) - 1.0 / 3) < 1e-14);
  CHECK(std::abs(r(0, 1)) < 1e-14);
  CMat g = reduced_density_matrix(ghz3(), 1);
  CHECK((g - CMat::Identity(2, 2) / 2.0).norm() < 1e-14);
  CMat p = reduced_density_matrix(basis_ket({0, 0, 0}, Dims{2, 2, 2}), 2);
  CHECK(std::abs(p(0, 0) - 1.0) < 1e-15);
  CHECK_THROWS_AS(reduced_density_matrix(ghz3(), 3), Error);
}

TEST_CASE("local spectra and coordinates") {
  auto s = local_spectrum(ghz3());
  for (const auto& v : s) {
    CHECK(std::abs(v[0] - 0.5) < 1e-14);
    CHECK(std::abs(v[1] - 0.5) < 1e-14);
  }
  auto x = most_local(local_spectrum(w3()));
  REQUIRE(x.size() == 3);
  for (double v : x) CHECK(std::abs(v - 2.0 / 3) < 1e-14);
  auto l = lift(std::vector<double>{1, 1, 1}, Dims{2, 2, 2});
  CHECK(l[2][1] == 0.0);
  QVec q{Q(2, 3), Q(2, 3), Q(1, 3), Q(1, 3)};
  auto ql = lift(q, Dims{2, 2, 3});
  CHECK(ql[2] == QVec{Q(1, 3), Q(1, 3), Q(1, 3)});
  CHECK_THROWS_AS(lift(QVec{Q(3, 2), Q(1), Q(1)}, Dims{2, 2, 2}), Error);
  CHECK_THROWS_AS(lift(QVec{Q(1), Q(1)}, Dims{2, 2, 2}), Error);
}

TEST_CASE("moment map and distance") {
  for (const auto& m : moment_map(ghz3())) CHECK(m.norm() < 1e-14);
  for (const auto& m : moment_map(w3())) {
    CHECK(std::abs(m(0, 0) - 1.0 / 6) < 1e-14);
    CHECK(std::abs(m(1, 1) + 1.0 / 6) < 1e-14);
  }
  Spectrum o{{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
  CHECK(std::abs(full_distance(local_spectrum(w3()), o) - std::sqrt(1.0 / 6)) < 1e-12);
  CHECK(full_distance(o, o) == 0.0);
  CHECK_THROWS_AS(full_distance(o, Spectrum{{1, 0}}), Error);
}

TEST_CASE("slocc action") {
  auto g = ghz3();
  auto same = apply_slocc(identity_tuple(g.dims), g);
  CHECK((same.amp - g.amp).norm() < 1e-15);
  // diag(1,eps) on the first factor pushes GHZ towards |000>
  Slocc t = identity_tuple(g.dims);
  t[0](1, 1) = 1e-6;
  auto img = apply_slocc(t, g);
  CHECK(std::abs(std::abs(img.amp[0]) - 1.0) < 1e-11);
  Slocc bad = identity_tuple(g.dims);
  bad[1](1, 1) = 0.0;
  CHECK_THROWS_AS(apply_slocc(bad, g), Error);
}

TEST_CASE("haar unitaries") {
  Dims dims{1, 2, 3, 5};
  auto u = random_unitary_tuple(dims, 42);
  auto v = random_unitary_tuple(dims, 42);
  for (std::size_t i = 0; i < u.size(); ++i) {
    CHECK((u[i] * u[i].adjoint() - CMat::Identity(u[i].rows(), u[i].rows())).norm() < 1e-12);
    CHECK((u[i] - v[i]).norm() == 0.0);
  }
  CHECK(std::abs(u[0](0, 0) - cplx(1, 0)) < 1e-15);
  CHECK(derive_seed(7, 0) != derive_seed(7, 1));
}

TEST_CASE("property: partial trace agrees with direct summation") {
  std::mt19937_64 rng(101);
  for (int t = 0; t < 40; ++t) {
    Dims dims = gen::random_dims(rng);
    auto psi = gen::random_state(dims, rng);
    for (int i = 0; i < dims.n(); ++i) {
      CMat r = reduced_density_matrix(psi, i);
      CHECK((r - rdm_oracle(psi, i)).norm() < 1e-12);
      CHECK(std::abs(r.trace() - cplx(1, 0)) < 1e-12);
      auto ev = eigenvalues_desc(r);
      CHECK(ev.back() >= -1e-10);
      CHECK(ev.front() >= 1.0 / dims[i] - 1e-12);
    }
  }
}

TEST_CASE("property: local unitaries preserve spectra and conjugate the moment map") {
  std::mt19937_64 rng(202);
  for (int t = 0; t < 30; ++t) {
    Dims dims = gen::random_dims(rng);
    auto psi = gen::random_state(dims, rng);
    auto u = random_unitary_tuple(dims, rng());
    auto img = apply_slocc(u, psi);
    auto a = local_spectrum(psi), b = local_spectrum(img);
    auto ma = moment_map(psi), mb = moment_map(img);
    for (int i = 0; i < dims.n(); ++i) {
      for (std::size_t j = 0; j < a[static_cast<std::size_t>(i)].size(); ++j)
        CHECK(std::abs(a[static_cast<std::size_t>(i)][j] - b[static_cast<std::size_t>(i)][j]) < 1e-10);
      const CMat& ui = u[static_cast<std::size_t>(i)];
      CHECK((mb[static_cast<std::size_t>(i)] - ui * ma[static_cast<std::size_t>(i)] * ui.adjoint()).norm() < 1e-10);
      CHECK(std::abs(mb[static_cast<std::size_t>(i)].trace()) < 1e-12);
    }
  }
}

TEST_CASE("property: bipartite marginals share spectra") {
  std::mt19937_64 rng(303);
  for (int t = 0; t < 30; ++t) {
    std::uniform_int_distribution<int> dd(1, 5);
    Dims dims{dd(rng), dd(rng)};
    auto s = local_spectrum(gen::random_state(dims, rng));
    std::size_t m = std::min(s[0].size(), s[1].size());
    for (std::size_t j = 0; j < m; ++j) CHECK(std::abs(s[0][j] - s[1][j]) < 1e-10);
  }
}

TEST_CASE("property: lift inverts most_local on rational spectra") {
  std::mt19937_64 rng(404);
  for (int t = 0; t < 50; ++t) {
    Dims dims = gen::random_dims(rng, 4, 5);
    QSpectrum s;
    for (int i = 0; i < dims.n(); ++i) {
      std::vector<long> w(static_cast<std::size_t>(dims[i]));
      long tot = 0;
      for (auto& x : w) tot += (x = static_cast<long>(rng() % 7));
      if (tot == 0) {
        w[0] = 1;
        tot = 1;
      }
      std::sort(w.rbegin(), w.rend());
      QVec v;
      for (long x : w) v.emplace_back(Q(x, tot));
      for (auto& q : v) q.canonicalize();
      s.push_back(v);
    }
    CHECK(lift(most_local(s), dims) == s);
  }
}
