#pragma once

#include "polyent/convexity.hpp"
#include "polyent/tensor.hpp"

#include <algorithm>
#include <random>

namespace gen {

using namespace polyent;

inline PureState random_state(const Dims& dims, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  PureState psi{dims, CVec(static_cast<Eigen::Index>(dims.hdim()))};
  for (Eigen::Index k = 0; k < psi.amp.size(); ++k) psi.amp[k] = cplx(nd(rng), nd(rng));
  return normalize(psi);
}

inline Dims random_dims(std::mt19937_64& rng, int max_n = 3, int max_d = 4) {
  std::uniform_int_distribution<int> nn(1, max_n), dd(1, max_d);
  std::vector<int> d(static_cast<std::size_t>(nn(rng)));
  for (auto& x : d) x = dd(rng);
  return Dims(d);
}

// Box [0,s]^D cut by a few random integer halfspaces that keep an interior point.
inline HPolytope random_polytope(std::mt19937_64& rng, int D, int cuts) {
  std::vector<int> ds(static_cast<std::size_t>(D), 2);
  HPolytope p{Dims(ds), {}};
  std::uniform_int_distribution<long> c(-3, 3), s(1, 4);
  for (int i = 0; i < D; ++i) {
    std::vector<long> lo(static_cast<std::size_t>(D), 0), hi(static_cast<std::size_t>(D), 0);
    lo[static_cast<std::size_t>(i)] = -1;
    hi[static_cast<std::size_t>(i)] = 1;
    p.ineqs.push_back(make_inequality(lo, 0));
    p.ineqs.push_back(make_inequality(hi, -s(rng)));
  }
  for (int k = 0; k < cuts; ++k) {
    std::vector<long> a(static_cast<std::size_t>(D));
    bool nz = false;
    for (auto& x : a) {
      x = c(rng);
      nz = nz || x != 0;
    }
    if (!nz) continue;
    // keep the point (1/2,...,1/2) strictly inside: a.x + b <= 0 with b < -a.(1/2)
    long half2 = 0;
    for (long x : a) half2 += x;
    long b = -(half2 + 1) / 2 - 1 + (c(rng) > 0 ? 0 : -1);
    if (2 * b + half2 >= 0) b = -(half2 / 2) - 1;
    p.ineqs.push_back(make_inequality(a, b));
  }
  return p;
}

}  // namespace gen

namespace oracle {

using namespace polyent;

// Gauss-Jordan over Q; returns false when singular.
inline bool solve(std::vector<QVec> a, QVec b, QVec& x) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && a[p][c] == 0) ++p;
    if (p == n) return false;
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    Q inv = 1 / a[c][c];
    for (auto& v : a[c]) v *= inv;
    b[c] *= inv;
    for (std::size_t r = 0; r < n; ++r)
      if (r != c && a[r][c] != 0) {
        Q f = a[r][c];
        for (std::size_t k = 0; k < n; ++k) a[r][k] -= f * a[c][k];
        b[r] -= f * b[c];
      }
  }
  x = b;
  return true;
}

// Recursive subset enumeration of tight hyperplane systems.
inline std::vector<QVec> vertices(const HPolytope& p) {
  const std::size_t D = static_cast<std::size_t>(p.dim()), m = p.ineqs.size();
  std::vector<QVec> out;
  std::vector<std::size_t> pick;
  auto rec = [&](auto&& self, std::size_t start) -> void {
    if (pick.size() == D) {
      std::vector<QVec> a;
      QVec b;
      for (std::size_t k : pick) {
        QVec row(p.ineqs[k].coeffs.begin(), p.ineqs[k].coeffs.end());
        a.push_back(row);
        b.push_back(Q(-p.ineqs[k].offset));
      }
      QVec x;
      if (!solve(a, b, x)) return;
      for (const auto& q : p.ineqs) {
        Q s = q.offset;
        for (std::size_t i = 0; i < D; ++i) s += q.coeffs[i] * x[i];
        if (s > 0) return;
      }
      if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
      return;
    }
    for (std::size_t k = start; k < m; ++k) {
      pick.push_back(k);
      self(self, k + 1);
      pick.pop_back();
    }
  };
  rec(rec, 0);
  std::sort(out.begin(), out.end());
  return out;
}

inline QVec qv(std::initializer_list<const char*> xs) {
  QVec v;
  for (const char* s : xs) {
    Q q(s);
    q.canonicalize();
    v.push_back(q);
  }
  return v;
}

}  // namespace oracle
