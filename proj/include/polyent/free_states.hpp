#pragma once

#include "polyent/convexity.hpp"
#include "polyent/rational.hpp"
#include "polyent/tensor.hpp"

#include <optional>
#include <vector>

namespace polyent {

using Support = std::vector<Ket>;

// Kets with |amplitude| > tol, in lexicographic order.
Support support(const PureState& psi, double tol = 1e-9);
bool is_free(const Support& s);
// a_ik = number of slots where kets i and k agree.
std::vector<std::vector<long>> closest_point_matrix(const Support& s);

// Sorted local spectra of the free state with squared amplitudes `weights` on `s`.
QSpectrum free_spectrum(const Support& s, const QVec& weights, const Dims& dims);

// The halfspace through p with normal p - origin, in most-local coordinates.
// Empty when p is the origin.
std::optional<Inequality> separating_inequality(const QSpectrum& p, const Dims& dims);

struct ClosestPointSolution {
  Support kets;
  QVec weights;
  Q lambda;
  PureState state;
  QSpectrum point;
  bool contains_origin = false;
  std::optional<Inequality> inequality;
  // more than one weight vector solves the system; weights is their centroid
  bool weights_unique = true;
};

ClosestPointSolution solve_closest_point(const PureState& psi, double tol = 1e-9);

// || X psi - <X> psi || for the normalized state, X = sum_i rho_i acting on site i.
double eigenvector_defect(const PureState& psi);

// Positive diagonal tuple t with t.source proportional to the target coefficients on the support.
Slocc torus_match(const PureState& source, const std::vector<cplx>& target, double tol = 1e-9);

PureState substate(const PureState& psi, const Support& keep, double tol = 1e-9);

// <psi| sum_j a_j P_j |psi> where P_j projects site sites[j] onto vectors[j]. Sites are 0-based.
double eigenvalue_bound_rhs(const PureState& psi, const std::vector<int>& sites, const std::vector<CVec>& vectors,
                            const std::vector<double>& weights);

}  // namespace polyent
