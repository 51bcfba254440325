#include "polyent/free_states.hpp"

#include "polyent/error.hpp"

#include <algorithm>
#include <cmath>

namespace polyent {

Support support(const PureState& psi, double tol) {
  Support s;
  for (Eigen::Index k = 0; k < psi.amp.size(); ++k)
    if (std::abs(psi.amp[k]) > tol) s.push_back(ket_of_index(static_cast<std::size_t>(k), psi.dims));
  if (s.empty()) throw Error("ZeroState", "state has no amplitude above tolerance");
  return s;
}

bool is_free(const Support& s) {
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = a + 1; b < s.size(); ++b) {
      int diff = 0;
      for (std::size_t i = 0; i < s[a].size(); ++i) diff += s[a][i] != s[b][i];
      if (diff < 2) return false;
    }
  return true;
}

std::vector<std::vector<long>> closest_point_matrix(const Support& s) {
  std::vector<std::vector<long>> a(s.size(), std::vector<long>(s.size(), 0));
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t k = 0; k < s.size(); ++k)
      for (std::size_t l = 0; l < s[i].size(); ++l) a[i][k] += s[i][l] == s[k][l];
  return a;
}

QSpectrum free_spectrum(const Support& s, const QVec& weights, const Dims& dims) {
  if (weights.size() != s.size()) throw Error("DimsMismatch", "one weight per support ket required");
  QSpectrum out;
  for (int i = 0; i < dims.n(); ++i) {
    QVec diag(static_cast<std::size_t>(dims[i]), 0);
    for (std::size_t l = 0; l < s.size(); ++l) diag[static_cast<std::size_t>(s[l][static_cast<std::size_t>(i)])] += weights[l];
    std::sort(diag.begin(), diag.end(), [](const Q& a, const Q& b) { return a > b; });
    out.push_back(diag);
  }
  return out;
}

std::optional<Inequality> separating_inequality(const QSpectrum& p, const Dims& dims) {
  if (static_cast<int>(p.size()) != dims.n()) throw Error("DimsMismatch", "spectrum has wrong number of systems");
  Q nn = 0, tail = 0;
  QVec c;
  bool zero = true;
  for (int i = 0; i < dims.n(); ++i) {
    const QVec& v = p[static_cast<std::size_t>(i)];
    if (static_cast<int>(v.size()) != dims[i]) throw Error("DimsMismatch", "spectrum length differs from local dimension");
    QVec n;
    for (const Q& x : v) n.push_back(x - Q(1, dims[i]));
    for (const Q& x : n) {
      nn += x * x;
      zero = zero && x == 0;
    }
    for (int j = 0; j + 1 < dims[i]; ++j) c.push_back(n[static_cast<std::size_t>(j)] - n.back());
    tail += n.back();
  }
  if (zero) return std::nullopt;
  // c.x >= |n|^2 - tail, stored as -c.x + (|n|^2 - tail) <= 0
  for (auto& x : c) x = -x;
  return make_inequality(c, nn - tail);
}

namespace {

struct AffineSolution {
  QVec particular;
  std::vector<QVec> kernel;
};

// Reduced row echelon solve of M y = r; nullopt when inconsistent.
std::optional<AffineSolution> solve_affine(std::vector<QVec> m, QVec r) {
  const std::size_t rows = m.size(), cols = m.empty() ? 0 : m[0].size();
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  for (std::size_t c = 0; c < cols && row < rows; ++c) {
    std::size_t p = row;
    while (p < rows && m[p][c] == 0) ++p;
    if (p == rows) continue;
    std::swap(m[p], m[row]);
    std::swap(r[p], r[row]);
    Q inv = 1 / m[row][c];
    for (auto& x : m[row]) x *= inv;
    r[row] *= inv;
    for (std::size_t k = 0; k < rows; ++k)
      if (k != row && m[k][c] != 0) {
        Q f = m[k][c];
        for (std::size_t j = 0; j < cols; ++j) m[k][j] -= f * m[row][j];
        r[k] -= f * r[row];
      }
    pivots.push_back(c);
    ++row;
  }
  for (std::size_t k = row; k < rows; ++k)
    if (r[k] != 0) return std::nullopt;
  AffineSolution s;
  s.particular.assign(cols, 0);
  for (std::size_t k = 0; k < pivots.size(); ++k) s.particular[pivots[k]] = r[k];
  for (std::size_t f = 0; f < cols; ++f) {
    if (std::find(pivots.begin(), pivots.end(), f) != pivots.end()) continue;
    QVec v(cols, 0);
    v[f] = 1;
    for (std::size_t k = 0; k < pivots.size(); ++k) v[pivots[k]] = -m[k][f];
    s.kernel.push_back(v);
  }
  return s;
}

}  // namespace

ClosestPointSolution solve_closest_point(const PureState& psi, double tol) {
  ClosestPointSolution out;
  out.kets = support(psi, tol);
  if (!is_free(out.kets)) throw Error("NotFree", "support kets must pairwise differ in at least two slots");
  const std::size_t m = out.kets.size();
  auto a = closest_point_matrix(out.kets);

  std::vector<QVec> sys(m + 1, QVec(m + 1, 0));
  QVec rhs(m + 1, 0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < m; ++k) sys[i][k] = a[i][k];
    sys[i][m] = -1;
    sys[m][i] = 1;
  }
  rhs[m] = 1;
  auto sol = solve_affine(sys, rhs);
  if (!sol) throw Error("NoNonnegativeSolution", "closest-point system is inconsistent");

  QVec w(sol->particular.begin(), sol->particular.begin() + static_cast<long>(m));
  if (sol->kernel.empty()) {
    for (const auto& x : w)
      if (x < 0) throw Error("NoNonnegativeSolution", "closest-point weights are not all nonnegative");
  } else {
    // weights a0 + N t >= 0; centroid of the vertices of that polytope in t
    const std::size_t k = sol->kernel.size();
    HPolytope poly{Dims(std::vector<int>(k, 2)), {}};
    for (std::size_t i = 0; i < m; ++i) {
      QVec c;
      bool nz = false;
      for (std::size_t j = 0; j < k; ++j) {
        c.push_back(-sol->kernel[j][i]);
        nz = nz || sol->kernel[j][i] != 0;
      }
      if (!nz) {
        if (w[i] < 0) throw Error("NoNonnegativeSolution", "closest-point weights are not all nonnegative");
        continue;
      }
      poly.ineqs.push_back(make_inequality(c, -w[i]));
    }
    VPolytope v;
    try {
      v = enumerate_vertices(poly);
    } catch (const Error& e) {
      if (e.code() == "Empty") throw Error("NoNonnegativeSolution", "closest-point weights are not all nonnegative");
      throw;
    }
    QVec t(k, 0);
    for (const auto& p : v.verts)
      for (std::size_t j = 0; j < k; ++j) t[j] += p[j];
    for (auto& x : t) x /= static_cast<long>(v.verts.size());
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < m; ++i) w[i] += t[j] * sol->kernel[j][i];
    out.weights_unique = false;
  }
  out.weights = w;
  Q lam = 0;
  for (std::size_t k = 0; k < m; ++k) lam += Q(a[0][k]) * w[k];
  out.lambda = lam;

  out.state = PureState{psi.dims, CVec::Zero(static_cast<Eigen::Index>(psi.dims.hdim()))};
  for (std::size_t l = 0; l < m; ++l)
    out.state.amp[static_cast<Eigen::Index>(ket_index(out.kets[l], psi.dims))] = std::sqrt(w[l].get_d());
  out.point = free_spectrum(out.kets, w, psi.dims);
  out.inequality = separating_inequality(out.point, psi.dims);
  out.contains_origin = !out.inequality.has_value();
  return out;
}

double eigenvector_defect(const PureState& psi) {
  PureState n = normalize(psi);
  CVec x = CVec::Zero(n.amp.size());
  for (int i = 0; i < n.dims.n(); ++i) {
    CVec t = n.amp;
    apply_local(reduced_density_matrix(n, i), i, n.dims, t);
    x += t;
  }
  cplx mean = n.amp.dot(x);
  return (x - mean * n.amp).norm();
}

Slocc torus_match(const PureState& source, const std::vector<cplx>& target, double tol) {
  Support s = support(source, tol);
  if (target.size() != s.size()) throw Error("DimsMismatch", "one target coefficient per support ket required");
  const Dims& dims = source.dims;
  const int nvar = dims.full() + 1;
  const Eigen::Index m = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, nvar);
  Eigen::VectorXd mag(m), ph(m);
  for (Eigen::Index l = 0; l < m; ++l) {
    const Ket& k = s[static_cast<std::size_t>(l)];
    int off = 0;
    for (int i = 0; i < dims.n(); ++i) {
      a(l, off + k[static_cast<std::size_t>(i)]) = 1;
      off += dims[i];
    }
    a(l, nvar - 1) = -1;
    cplx c = source.amp[static_cast<Eigen::Index>(ket_index(k, dims))];
    cplx t = target[static_cast<std::size_t>(l)];
    if (std::abs(t) <= 0) throw Error("UnderdeterminedOrInconsistent", "target coefficients must be nonzero on the support");
    mag(l) = std::log(std::abs(t)) - std::log(std::abs(c));
    ph(l) = std::arg(t / c);
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  Eigen::VectorXd th = cod.solve(mag), phi = cod.solve(ph);
  Slocc g = identity_tuple(dims);
  int off = 0;
  for (int i = 0; i < dims.n(); ++i) {
    for (int j = 0; j < dims[i]; ++j)
      g[static_cast<std::size_t>(i)](j, j) = std::exp(cplx(th(off + j), phi(off + j)));
    off += dims[i];
  }
  PureState img = apply_slocc(g, source);
  CVec want = CVec::Zero(img.amp.size());
  for (Eigen::Index l = 0; l < m; ++l)
    want[static_cast<Eigen::Index>(ket_index(s[static_cast<std::size_t>(l)], dims))] = target[static_cast<std::size_t>(l)];
  want.normalize();
  cplx overlap = want.dot(img.amp);
  if ((img.amp - overlap / std::abs(overlap) * want).norm() > 1e-9 || std::abs(overlap) < 0.5)
    throw Error("UnderdeterminedOrInconsistent", "no diagonal tuple maps the source onto the target");
  return g;
}

PureState substate(const PureState& psi, const Support& keep, double tol) {
  Support s = support(psi, tol);
  PureState out{psi.dims, CVec::Zero(psi.amp.size())};
  for (const auto& k : keep) {
    if (std::find(s.begin(), s.end(), k) == s.end()) throw Error("NotSubset", "kept ket is not in the support");
    auto idx = static_cast<Eigen::Index>(ket_index(k, psi.dims));
    out.amp[idx] = psi.amp[idx];
  }
  return normalize(out);
}

double eigenvalue_bound_rhs(const PureState& psi, const std::vector<int>& sites, const std::vector<CVec>& vectors,
                            const std::vector<double>& weights) {
  if (sites.size() != vectors.size() || sites.size() != weights.size())
    throw Error("DimsMismatch", "sites, vectors and weights must have equal length");
  double total = 0;
  for (std::size_t j = 0; j < sites.size(); ++j) {
    CMat rho = reduced_density_matrix(psi, sites[j]);
    const CVec& v = vectors[j];
    if (v.size() != rho.rows()) throw Error("DimsMismatch", "vector length differs from local dimension");
    if (std::abs(v.norm() - 1.0) > 1e-9) throw Error("BadVectorNorm", "projector vectors must be unit norm");
    total += weights[j] * std::real(v.dot(rho * v));
  }
  return total;
}

}  // namespace polyent
