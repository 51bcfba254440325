#pragma once

#include "polyent/rational.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace polyent {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

struct Dims {
  std::vector<int> d;

  Dims() = default;
  explicit Dims(std::vector<int> local);
  Dims(std::initializer_list<int> local) : Dims(std::vector<int>(local)) {}

  int n() const { return static_cast<int>(d.size()); }
  int operator[](int i) const { return d[static_cast<std::size_t>(i)]; }
  int full() const;
  int most() const;
  std::size_t hdim() const;
  // "2x2x3"
  std::string label() const;
  // "223", used as catalog directory names
  std::string compact() const;
  bool operator==(const Dims& o) const { return d == o.d; }
  bool operator!=(const Dims& o) const { return d != o.d; }
};

Dims parse_dims(const std::string& s);

using Ket = std::vector<int>;

std::size_t ket_index(const Ket& j, const Dims& dims);
Ket ket_of_index(std::size_t idx, const Dims& dims);

struct PureState {
  Dims dims;
  CVec amp;
};

struct Term {
  Ket ket;
  cplx c{1.0, 0.0};
};

PureState basis_ket(const Ket& j, const Dims& dims);
// Densifies a term list; repeated kets add up. Not normalized.
PureState from_terms(const Dims& dims, const std::vector<Term>& terms);
PureState normalize(const PureState& psi);
double norm(const PureState& psi);

// i is 0-based here; user-facing layers translate from 1-based.
CMat reduced_density_matrix(const PureState& psi, int i);
std::vector<CMat> marginals(const PureState& psi);

using Spectrum = std::vector<std::vector<double>>;
using QSpectrum = std::vector<QVec>;

std::vector<double> eigenvalues_desc(const CMat& hermitian);
Spectrum local_spectrum(const PureState& psi);

std::vector<double> most_local(const Spectrum& s);
QVec most_local(const QSpectrum& s);
Spectrum lift(const std::vector<double>& x, const Dims& dims);
QSpectrum lift(const QVec& x, const Dims& dims);
std::vector<double> flatten(const Spectrum& s);
QSpectrum origin_spectrum(const Dims& dims);

using Slocc = std::vector<CMat>;

// Applies g_i to tensor factor i in place, without normalizing.
void apply_local(const CMat& g, int i, const Dims& dims, CVec& amp);
PureState apply_slocc(const Slocc& g, const PureState& psi);
std::vector<CMat> moment_map(const PureState& psi);
double full_distance(const Spectrum& a, const Spectrum& b);

CMat haar_unitary(int d, std::mt19937_64& rng);
Slocc random_unitary_tuple(const Dims& dims, std::uint64_t seed);
// Random invertible factors U diag(s) V with condition number at most max_cond.
Slocc random_slocc(const Dims& dims, std::uint64_t seed, double max_cond);
Slocc identity_tuple(const Dims& dims);

// Independent deterministic stream seed for sample idx of a batch.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t idx);

}  // namespace polyent
