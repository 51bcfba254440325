#include "polyent/tensor.hpp"

#include "polyent/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace polyent {

Dims::Dims(std::vector<int> local) : d(std::move(local)) {
  if (d.empty()) throw Error("InvalidDims", "dims must be non-empty");
  std::size_t h = 1;
  for (int x : d) {
    if (x < 1) throw Error("InvalidDims", "local dimensions must be positive");
    h *= static_cast<std::size_t>(x);
    if (h > 65536) throw Error("InvalidDims", "Hilbert space dimension exceeds 65536");
  }
}

int Dims::full() const { return std::accumulate(d.begin(), d.end(), 0); }
int Dims::most() const { return full() - n(); }

std::size_t Dims::hdim() const {
  std::size_t h = 1;
  for (int x : d) h *= static_cast<std::size_t>(x);
  return h;
}

std::string Dims::label() const {
  std::string s;
  for (std::size_t i = 0; i < d.size(); ++i) s += (i ? "x" : "") + std::to_string(d[i]);
  return s;
}

std::string Dims::compact() const {
  std::string s;
  for (int x : d) s += std::to_string(x);
  return s;
}

Dims parse_dims(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) throw Error("InvalidDims", "empty entry in dims '" + s + "'");
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &pos);
    } catch (const std::exception&) {
      throw Error("InvalidDims", "bad dims '" + s + "'");
    }
    if (pos != tok.size()) throw Error("InvalidDims", "bad dims '" + s + "'");
    out.push_back(v);
  }
  return Dims(out);
}

std::size_t ket_index(const Ket& j, const Dims& dims) {
  if (static_cast<int>(j.size()) != dims.n()) throw Error("IndexOutOfRange", "ket length differs from number of systems");
  std::size_t idx = 0;
  for (int i = 0; i < dims.n(); ++i) {
    if (j[i] < 0 || j[i] >= dims[i]) throw Error("IndexOutOfRange", "ket index out of range");
    idx = idx * static_cast<std::size_t>(dims[i]) + static_cast<std::size_t>(j[i]);
  }
  return idx;
}

Ket ket_of_index(std::size_t idx, const Dims& dims) {
  Ket j(dims.d.size());
  for (int i = dims.n() - 1; i >= 0; --i) {
    j[i] = static_cast<int>(idx % static_cast<std::size_t>(dims[i]));
    idx /= static_cast<std::size_t>(dims[i]);
  }
  return j;
}

PureState basis_ket(const Ket& j, const Dims& dims) {
  PureState psi{dims, CVec::Zero(static_cast<Eigen::Index>(dims.hdim()))};
  psi.amp[static_cast<Eigen::Index>(ket_index(j, dims))] = 1.0;
  return psi;
}

PureState from_terms(const Dims& dims, const std::vector<Term>& terms) {
  PureState psi{dims, CVec::Zero(static_cast<Eigen::Index>(dims.hdim()))};
  for (const auto& t : terms) psi.amp[static_cast<Eigen::Index>(ket_index(t.ket, dims))] += t.c;
  return psi;
}

double norm(const PureState& psi) { return psi.amp.norm(); }

PureState normalize(const PureState& psi) {
  double nrm = psi.amp.norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) throw Error("ZeroState", "state has zero or non-finite norm");
  return PureState{psi.dims, psi.amp / nrm};
}

namespace {

struct Split {
  std::size_t left, mid, right;
};

Split split_at(const Dims& dims, int i) {
  std::size_t l = 1, r = 1;
  for (int k = 0; k < i; ++k) l *= static_cast<std::size_t>(dims[k]);
  for (int k = i + 1; k < dims.n(); ++k) r *= static_cast<std::size_t>(dims[k]);
  return {l, static_cast<std::size_t>(dims[i]), r};
}

}  // namespace

CMat reduced_density_matrix(const PureState& psi, int i) {
  if (i < 0 || i >= psi.dims.n()) throw Error("IndexOutOfRange", "system index out of range");
  double n2 = psi.amp.squaredNorm();
  if (!(n2 > 0.0)) throw Error("ZeroState", "state is zero");
  auto [L, M, R] = split_at(psi.dims, i);
  CMat rho = CMat::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M));
  const cplx* a = psi.amp.data();
  for (std::size_t l = 0; l < L; ++l) {
    const cplx* blk = a + l * M * R;
    for (std::size_t x = 0; x < M; ++x)
      for (std::size_t y = x; y < M; ++y) {
        cplx s = 0;
        const cplx* px = blk + x * R;
        const cplx* py = blk + y * R;
        for (std::size_t r = 0; r < R; ++r) s += px[r] * std::conj(py[r]);
        rho(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) += s;
      }
  }
  for (Eigen::Index x = 0; x < rho.rows(); ++x)
    for (Eigen::Index y = 0; y < x; ++y) rho(x, y) = std::conj(rho(y, x));
  return rho / n2;
}

std::vector<CMat> marginals(const PureState& psi) {
  std::vector<CMat> out;
  for (int i = 0; i < psi.dims.n(); ++i) out.push_back(reduced_density_matrix(psi, i));
  return out;
}

std::vector<double> eigenvalues_desc(const CMat& h) {
  CMat sym = (h + h.adjoint()) * 0.5;
  Eigen::SelfAdjointEigenSolver<CMat> es(sym, Eigen::EigenvaluesOnly);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::stable_sort(ev.begin(), ev.end(), std::greater<double>());
  return ev;
}

Spectrum local_spectrum(const PureState& psi) {
  Spectrum s;
  for (int i = 0; i < psi.dims.n(); ++i) s.push_back(eigenvalues_desc(reduced_density_matrix(psi, i)));
  return s;
}

std::vector<double> most_local(const Spectrum& s) {
  std::vector<double> x;
  for (const auto& v : s)
    for (std::size_t j = 0; j + 1 < v.size(); ++j) x.push_back(v[j]);
  return x;
}

QVec most_local(const QSpectrum& s) {
  QVec x;
  for (const auto& v : s)
    for (std::size_t j = 0; j + 1 < v.size(); ++j) x.push_back(v[j]);
  return x;
}

Spectrum lift(const std::vector<double>& x, const Dims& dims) {
  if (static_cast<int>(x.size()) != dims.most()) throw Error("DimsMismatch", "point length differs from D_most");
  Spectrum s;
  std::size_t p = 0;
  for (int i = 0; i < dims.n(); ++i) {
    std::vector<double> v;
    double sum = 0;
    for (int j = 0; j + 1 < dims[i]; ++j) {
      v.push_back(x[p]);
      sum += x[p++];
    }
    double last = 1.0 - sum;
    if (last < -1e-12 || last > 1.0 + 1e-12) throw Error("InvalidPoint", "reconstructed entry leaves [0,1]");
    v.push_back(last);
    s.push_back(std::move(v));
  }
  return s;
}

QSpectrum lift(const QVec& x, const Dims& dims) {
  if (static_cast<int>(x.size()) != dims.most()) throw Error("DimsMismatch", "point length differs from D_most");
  QSpectrum s;
  std::size_t p = 0;
  for (int i = 0; i < dims.n(); ++i) {
    QVec v;
    Q sum = 0;
    for (int j = 0; j + 1 < dims[i]; ++j) {
      v.push_back(x[p]);
      sum += x[p++];
    }
    Q last = 1 - sum;
    if (last < 0 || last > 1) throw Error("InvalidPoint", "reconstructed entry leaves [0,1]");
    v.push_back(last);
    s.push_back(std::move(v));
  }
  return s;
}

std::vector<double> flatten(const Spectrum& s) {
  std::vector<double> out;
  for (const auto& v : s) out.insert(out.end(), v.begin(), v.end());
  return out;
}

QSpectrum origin_spectrum(const Dims& dims) {
  QSpectrum s;
  for (int i = 0; i < dims.n(); ++i) s.push_back(QVec(static_cast<std::size_t>(dims[i]), Q(1, dims[i])));
  return s;
}

void apply_local(const CMat& g, int i, const Dims& dims, CVec& amp) {
  auto [L, M, R] = split_at(dims, i);
  std::vector<cplx> tmp(M);
  cplx* a = amp.data();
  for (std::size_t l = 0; l < L; ++l) {
    cplx* blk = a + l * M * R;
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t x = 0; x < M; ++x) {
        cplx s = 0;
        for (std::size_t y = 0; y < M; ++y)
          s += g(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) * blk[y * R + r];
        tmp[x] = s;
      }
      for (std::size_t x = 0; x < M; ++x) blk[x * R + r] = tmp[x];
    }
  }
}

PureState apply_slocc(const Slocc& g, const PureState& psi) {
  if (static_cast<int>(g.size()) != psi.dims.n()) throw Error("DimsMismatch", "operator tuple length differs from N");
  PureState out = psi;
  for (int i = 0; i < psi.dims.n(); ++i) {
    const CMat& gi = g[static_cast<std::size_t>(i)];
    if (gi.rows() != psi.dims[i] || gi.cols() != psi.dims[i]) throw Error("DimsMismatch", "factor size differs from local dimension");
    Eigen::JacobiSVD<CMat> svd(gi);
    const auto& sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > 0.0) || !std::isfinite(sv(0) / sv(sv.size() - 1)))
      throw Error("SingularOperator", "factor is not invertible");
    apply_local(gi, i, psi.dims, out.amp);
  }
  return normalize(out);
}

std::vector<CMat> moment_map(const PureState& psi) {
  std::vector<CMat> out;
  for (int i = 0; i < psi.dims.n(); ++i) {
    CMat rho = reduced_density_matrix(psi, i);
    rho -= CMat::Identity(rho.rows(), rho.cols()) / static_cast<double>(psi.dims[i]);
    out.push_back(rho);
  }
  return out;
}

double full_distance(const Spectrum& a, const Spectrum& b) {
  if (a.size() != b.size()) throw Error("DimsMismatch", "spectra have different number of systems");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) throw Error("DimsMismatch", "spectra have different local dimensions");
    for (std::size_t j = 0; j < a[i].size(); ++j) s += (a[i][j] - b[i][j]) * (a[i][j] - b[i][j]);
  }
  return std::sqrt(s);
}

CMat haar_unitary(int d, std::mt19937_64& rng) {
  if (d == 1) return CMat::Identity(1, 1);
  std::normal_distribution<double> nd(0.0, 1.0);
  CMat z(d, d);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r < d; ++r) z(r, c) = cplx(nd(rng), nd(rng)) / std::sqrt(2.0);
  Eigen::HouseholderQR<CMat> qr(z);
  CMat q = qr.householderQ() * CMat::Identity(d, d);
  CMat rr = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < d; ++k) {
    cplx rkk = rr(k, k);
    double a = std::abs(rkk);
    cplx ph = a > 0 ? rkk / a : cplx(1.0, 0.0);
    q.col(k) *= ph;
  }
  return q;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t idx) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (idx + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Slocc random_unitary_tuple(const Dims& dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Slocc u;
  for (int i = 0; i < dims.n(); ++i) u.push_back(haar_unitary(dims[i], rng));
  return u;
}

Slocc random_slocc(const Dims& dims, std::uint64_t seed, double max_cond) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  double lc = std::log(std::max(1.0, max_cond));
  Slocc g;
  for (int i = 0; i < dims.n(); ++i) {
    int d = dims[i];
    CMat u = haar_unitary(d, rng);
    CMat v = haar_unitary(d, rng);
    Eigen::VectorXd s(d);
    for (int k = 0; k < d; ++k) s(k) = std::exp(lc * ud(rng));
    g.push_back(u * s.cast<cplx>().asDiagonal() * v);
  }
  return g;
}

Slocc identity_tuple(const Dims& dims) {
  Slocc g;
  for (int i = 0; i < dims.n(); ++i) g.push_back(CMat::Identity(dims[i], dims[i]));
  return g;
}

}  // namespace polyent
