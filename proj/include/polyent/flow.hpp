#pragma once

#include "polyent/convexity.hpp"
#include "polyent/io.hpp"
#include "polyent/rational.hpp"
#include "polyent/tensor.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace polyent {

// Box counts per system; every row sums to k.
struct YoungTuple {
  std::vector<std::vector<long>> lambdas;
  long k = 0;
};

YoungTuple convert_to_lambdas(const QSpectrum& target, const Dims& dims);
YoungTuple convert_to_lambdas(const QVec& most_local_target, const Dims& dims);
// Doubles are accepted only when they are rationals with small denominators.
YoungTuple convert_to_lambdas(const std::vector<double>& most_local_target, const Dims& dims);

// Per factor: w0(-lambda_i) + k/d_i.
QSpectrum lambda_star(const YoungTuple& lam);
QSpectrum target_spectrum(const YoungTuple& lam);

// xi_i = k (rho_i - 1/d_i) + U_i diag(lamstar_i) U_i^dagger
std::vector<CMat> extended_moment(const PureState& psi, const Slocc& u, const QSpectrum& lamstar, long k);
double tuple_norm(const std::vector<CMat>& xi);

struct FlowOptions {
  std::optional<long> max_steps;  // empty = unbounded
  double min_progress = 1e-6;
  double min_step = 1e-6;
  double initial_step = 1.0;
  int max_restarts = 5;
  double target_precision = 1e-2;
  std::uint64_t seed = 0;
  int max_rejects = 50;

  static FlowOptions preset(const std::string& name);
};

enum class ExitReason { Reached, StepTooSmall, MaxStepsExceeded, RestartsExhausted };
std::string to_string(ExitReason r);

struct FlowStep {
  long trial = 0;
  double h = 0;
  double xi_before = 0;
  double xi_after = 0;
  bool accepted = false;
  double distance = 0;
};

struct ExtractedInequality {
  // coeffs..., offset with coeffs.x + offset <= 0 on the polytope side, unit full-coordinate normal
  std::vector<double> raw;
  std::string pretty;
  // empty when no small integer rationalization exists
  std::optional<Inequality> suggested;
};

struct FlowOutcome {
  bool reached = false;
  ExitReason exit = ExitReason::Reached;
  PureState final_state;
  Spectrum final_spectrum;
  double final_distance = 0;
  std::vector<std::vector<double>> trajectory;
  std::vector<FlowStep> steps;
  std::optional<ExtractedInequality> inequality;
  long steps_taken = 0;
  int restarts_used = 0;
  Slocc final_u;
  // Accumulated local operator; apply_slocc(accumulated_g, psi0) is the final state up to phase.
  Slocc accumulated_g;
};

using FlowSink = std::function<void(const FlowStep&)>;

FlowOutcome flow(const PureState& psi, const Slocc& u0, const YoungTuple& lam, const FlowOptions& opts,
                 const FlowSink& sink = {});
// u0 drawn with random_unitary_tuple(dims, opts.seed).
FlowOutcome flow(const PureState& psi, const YoungTuple& lam, const FlowOptions& opts, const FlowSink& sink = {});

ExtractedInequality extract_inequality(const Spectrum& p, const Spectrum& target, double tol = 0.05,
                                       int max_mult = 60);
std::optional<std::vector<long>> suggest_integer(const std::vector<double>& raw, double tol = 0.05,
                                                 int max_mult = 60);
// "x1,1 + x2,1 + x3,1 >= 2" from a raw vector
std::string pretty_raw(const std::vector<double>& raw, const Dims& dims);

// One flow step of size h from (psi, u) along -xi, both factors re-normalized.
struct FlowPoint {
  PureState psi;
  Slocc u;
};
FlowPoint flow_step(const FlowPoint& at, const std::vector<CMat>& xi, double h);

struct DescentCheck {
  double forward = 0;
  double backward = 0;
  double central = 0;
  bool descending() const { return central < 0; }
  double relative_gap() const;
};
// Finite differences of ||xi||^2 along the step direction at (psi, u).
DescentCheck descent_check(const PureState& psi, const Slocc& u, const YoungTuple& lam, double h = 1e-6);

json to_json(const FlowOptions& o);
// Missing fields keep their defaults; "preset" selects the base.
FlowOptions flow_options_from_json(const json& j);
json to_json(const ExtractedInequality& e, const Dims& dims);
json to_json(const FlowOutcome& o, bool with_trajectory = true);

// Hermitian exponential via eigendecomposition.
CMat expm_hermitian(const CMat& a, double t);
// Q factor with R's diagonal made real positive.
CMat qr_unitary(const CMat& a);

}  // namespace polyent
