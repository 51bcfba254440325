#include "polyent/flow.hpp"

#include "polyent/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace polyent {

namespace {

void check_chamber(const QSpectrum& s, const Dims& dims) {
  if (static_cast<int>(s.size()) != dims.n()) throw Error("DimsMismatch", "target has wrong number of systems");
  for (int i = 0; i < dims.n(); ++i) {
    const QVec& v = s[static_cast<std::size_t>(i)];
    if (static_cast<int>(v.size()) != dims[i]) throw Error("DimsMismatch", "target length differs from local dimension");
    Q sum = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < 0) throw Error("NotInChamber", "negative eigenvalue in target");
      if (j > 0 && v[j] > v[j - 1]) throw Error("NotInChamber", "target spectrum is not non-increasing");
      sum += v[j];
    }
    if (sum != 1) throw Error("NotInChamber", "target spectrum does not sum to one");
  }
}

}  // namespace

YoungTuple convert_to_lambdas(const QSpectrum& target, const Dims& dims) {
  check_chamber(target, dims);
  QVec all;
  for (const auto& v : target) all.insert(all.end(), v.begin(), v.end());
  Z k = lcm_of_denominators(all);
  YoungTuple out;
  out.k = k.get_si();
  for (const auto& v : target) {
    std::vector<long> row;
    for (const Q& x : v) {
      Q y = x * k;
      row.push_back(Z(y).get_si());
    }
    out.lambdas.push_back(row);
  }
  return out;
}

YoungTuple convert_to_lambdas(const QVec& most_local_target, const Dims& dims) {
  if (static_cast<int>(most_local_target.size()) != dims.most())
    throw Error("DimsMismatch", "target length differs from D_most");
  return convert_to_lambdas(lift(most_local_target, dims), dims);
}

YoungTuple convert_to_lambdas(const std::vector<double>& most_local_target, const Dims& dims) {
  QVec q;
  for (double x : most_local_target) {
    if (!std::isfinite(x)) throw Error("IrrationalTarget", "non-finite target coordinate");
    Q r = rationalize(x, 1000);
    if (std::abs(to_double(r) - x) > 1e-12) throw Error("IrrationalTarget", "target coordinate is not a small rational");
    q.push_back(r);
  }
  return convert_to_lambdas(q, dims);
}

QSpectrum lambda_star(const YoungTuple& lam) {
  QSpectrum out;
  for (const auto& row : lam.lambdas) {
    const long d = static_cast<long>(row.size());
    QVec v;
    for (long j = d - 1; j >= 0; --j) v.push_back(Q(-row[static_cast<std::size_t>(j)]) + Q(lam.k, d));
    out.push_back(v);
  }
  return out;
}

QSpectrum target_spectrum(const YoungTuple& lam) {
  QSpectrum out;
  for (const auto& row : lam.lambdas) {
    QVec v;
    for (long x : row) v.push_back(Q(x, lam.k));
    out.push_back(v);
  }
  return out;
}

std::vector<CMat> extended_moment(const PureState& psi, const Slocc& u, const QSpectrum& lamstar, long k) {
  std::vector<CMat> xi;
  const double kd = static_cast<double>(k);
  for (int i = 0; i < psi.dims.n(); ++i) {
    const int d = psi.dims[i];
    const auto si = static_cast<std::size_t>(i);
    CMat rho = reduced_density_matrix(psi, i);
    Eigen::VectorXd ls(d);
    for (int j = 0; j < d; ++j) ls(j) = to_double(lamstar[si][static_cast<std::size_t>(j)]);
    CMat x = kd * (rho - CMat::Identity(d, d) / static_cast<double>(d));
    x += u[si] * ls.cast<cplx>().asDiagonal() * u[si].adjoint();
    xi.push_back(0.5 * (x + x.adjoint()));
  }
  return xi;
}

double tuple_norm(const std::vector<CMat>& xi) {
  double s = 0;
  for (const auto& x : xi) s += x.squaredNorm();
  return std::sqrt(s);
}

FlowOptions FlowOptions::preset(const std::string& name) {
  FlowOptions o;
  if (name == "default") return o;
  if (name == "highdim") {
    o.min_progress = 1e-10;
    return o;
  }
  throw Error("BadParams", "unknown preset: " + name);
}

std::string to_string(ExitReason r) {
  switch (r) {
    case ExitReason::Reached: return "Reached";
    case ExitReason::StepTooSmall: return "StepTooSmall";
    case ExitReason::MaxStepsExceeded: return "MaxStepsExceeded";
    case ExitReason::RestartsExhausted: return "RestartsExhausted";
  }
  return "Unknown";
}

CMat expm_hermitian(const CMat& a, double t) {
  Eigen::SelfAdjointEigenSolver<CMat> es(a);
  Eigen::VectorXd e = (es.eigenvalues() * t).array().exp();
  return es.eigenvectors() * e.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

CMat qr_unitary(const CMat& a) {
  Eigen::HouseholderQR<CMat> qr(a);
  const auto n = a.rows();
  CMat q = qr.householderQ() * CMat::Identity(n, a.cols());
  CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    cplx rjj = r(j, j);
    double m = std::abs(rjj);
    if (m > 0) q.col(j) *= rjj / m;
  }
  return q;
}

FlowPoint flow_step(const FlowPoint& at, const std::vector<CMat>& xi, double h) {
  FlowPoint out;
  out.psi = at.psi;
  for (int i = 0; i < at.psi.dims.n(); ++i) {
    const auto si = static_cast<std::size_t>(i);
    CMat e = expm_hermitian(xi[si], -h);
    apply_local(e, i, out.psi.dims, out.psi.amp);
    out.u.push_back(qr_unitary(e * at.u[si]));
  }
  out.psi = normalize(out.psi);
  return out;
}

FlowOutcome flow(const PureState& psi0, const YoungTuple& lam, const FlowOptions& opts, const FlowSink& sink) {
  return flow(psi0, random_unitary_tuple(psi0.dims, opts.seed), lam, opts, sink);
}

FlowOutcome flow(const PureState& psi0, const Slocc& u0, const YoungTuple& lam, const FlowOptions& opts,
                 const FlowSink& sink) {
  const Dims& dims = psi0.dims;
  if (static_cast<int>(lam.lambdas.size()) != dims.n()) throw Error("DimsMismatch", "target and state differ in systems");
  if (static_cast<int>(u0.size()) != dims.n()) throw Error("DimsMismatch", "initial unitary tuple has wrong length");
  if (!(opts.initial_step > 0) || !(opts.min_step > 0)) throw Error("BadParams", "step sizes must be positive");
  if (opts.max_restarts < 0) throw Error("BadParams", "max_restarts must be non-negative");

  const QSpectrum ls = lambda_star(lam);
  const QSpectrum tq = target_spectrum(lam);
  Spectrum target;
  for (const auto& v : tq) {
    std::vector<double> r;
    for (const Q& x : v) r.push_back(to_double(x));
    target.push_back(r);
  }

  FlowOutcome out;
  FlowPoint cur{normalize(psi0), u0};
  out.accumulated_g = identity_tuple(dims);
  std::vector<CMat> xi = extended_moment(cur.psi, cur.u, ls, lam.k);
  double nrm = tuple_norm(xi);
  Spectrum spec = local_spectrum(cur.psi);
  double dist = full_distance(spec, target);
  out.trajectory.push_back(most_local(spec));

  auto finish = [&](ExitReason why) {
    out.exit = why;
    out.reached = why == ExitReason::Reached;
    out.final_state = cur.psi;
    out.final_spectrum = spec;
    out.final_distance = dist;
    out.final_u = cur.u;
    if (!out.reached) {
      try {
        out.inequality = extract_inequality(spec, target);
      } catch (const Error&) {
        out.inequality.reset();
      }
    }
    return out;
  };

  if (dist < opts.target_precision) return finish(ExitReason::Reached);

  double h = opts.initial_step;
  int rejects = 0;
  long trial = 0;
  while (true) {
    if (opts.max_steps && trial >= *opts.max_steps) return finish(ExitReason::MaxStepsExceeded);
    ++trial;
    ++out.steps_taken;
    FlowPoint next = flow_step(cur, xi, h);
    std::vector<CMat> xi_next = extended_moment(next.psi, next.u, ls, lam.k);
    double nrm_next = tuple_norm(xi_next);
    FlowStep st;
    st.trial = trial;
    st.h = h;
    st.xi_before = nrm;
    st.xi_after = nrm_next;
    st.accepted = nrm_next - nrm < -opts.min_progress;
    if (st.accepted) {
      for (int i = 0; i < dims.n(); ++i) {
        const auto si = static_cast<std::size_t>(i);
        CMat g = expm_hermitian(xi[si], -h) * out.accumulated_g[si];
        out.accumulated_g[si] = g / g.norm();
      }
      cur = std::move(next);
      xi = std::move(xi_next);
      nrm = nrm_next;
      spec = local_spectrum(cur.psi);
      dist = full_distance(spec, target);
      out.trajectory.push_back(most_local(spec));
      h *= 1.1;
      rejects = 0;
    } else {
      h /= 2;
      ++rejects;
    }
    st.distance = dist;
    out.steps.push_back(st);
    if (sink) sink(st);
    if (st.accepted && dist < opts.target_precision) return finish(ExitReason::Reached);
    if (h < opts.min_step || rejects >= opts.max_rejects) {
      if (out.restarts_used >= opts.max_restarts)
        return finish(opts.max_restarts == 0 ? ExitReason::StepTooSmall : ExitReason::RestartsExhausted);
      ++out.restarts_used;
      h = opts.initial_step;
      rejects = 0;
    }
  }
}

std::optional<std::vector<long>> suggest_integer(const std::vector<double>& raw, double tol, int max_mult) {
  if (raw.size() < 2) return std::nullopt;
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < raw.size(); ++i) {
    double a = std::abs(raw[i]);
    if (a > 1e-9 && a < smallest) smallest = a;
  }
  if (!std::isfinite(smallest)) return std::nullopt;
  std::vector<double> s;
  for (double x : raw) s.push_back(x / smallest);
  for (int m = 1; m <= max_mult; ++m) {
    std::vector<long> r;
    bool ok = true;
    for (double x : s) {
      double y = x * m;
      double ry = std::round(y);
      if (std::abs(y - ry) > tol || std::abs(ry) > 1e9) {
        ok = false;
        break;
      }
      r.push_back(static_cast<long>(ry));
    }
    if (!ok) continue;
    long g = 0;
    for (long x : r) g = std::gcd(g, std::abs(x));
    if (g == 0) return std::nullopt;
    for (long& x : r) x /= g;
    return r;
  }
  return std::nullopt;
}

std::string pretty_raw(const std::vector<double>& raw, const Dims& dims) {
  if (static_cast<int>(raw.size()) != dims.most() + 1) throw Error("DimsMismatch", "raw inequality length differs from D_most + 1");
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < raw.size(); ++i) {
    double a = std::abs(raw[i]);
    if (a > 1e-9 && a < smallest) smallest = a;
  }
  if (!std::isfinite(smallest)) smallest = 1;
  auto num = [](double x) {
    std::ostringstream os;
    os << std::setprecision(6) << x;
    return os.str();
  };
  std::string s;
  std::size_t k = 0;
  for (int i = 0; i < dims.n(); ++i)
    for (int j = 1; j < dims[i]; ++j, ++k) {
      double c = -raw[k] / smallest;
      if (std::abs(c) < 1e-9) continue;
      double a = std::abs(c);
      if (s.empty())
        s += c < 0 ? "-" : "";
      else
        s += c < 0 ? " - " : " + ";
      if (std::abs(a - 1) > 1e-9) s += num(a);
      s += "x" + std::to_string(i + 1) + "," + std::to_string(j);
    }
  if (s.empty()) s = "0";
  return s + " >= " + num(raw.back() / smallest);
}

ExtractedInequality extract_inequality(const Spectrum& p, const Spectrum& target, double tol, int max_mult) {
  if (p.size() != target.size()) throw Error("DimsMismatch", "spectra differ in systems");
  std::vector<int> d;
  double nn = 0, rhs = 0;
  std::vector<double> c;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].size() != target[i].size()) throw Error("DimsMismatch", "spectra differ in local dimension");
    d.push_back(static_cast<int>(p[i].size()));
    std::vector<double> n;
    for (std::size_t j = 0; j < p[i].size(); ++j) {
      n.push_back(p[i][j] - target[i][j]);
      nn += n.back() * n.back();
      rhs += p[i][j] * n.back();
    }
    for (std::size_t j = 0; j + 1 < n.size(); ++j) c.push_back(n[j] - n.back());
    rhs -= n.back();
  }
  const double len = std::sqrt(nn);
  if (len < 1e-12) throw Error("DegenerateDirection", "final point coincides with the target");
  ExtractedInequality out;
  for (double x : c) out.raw.push_back(-x / len);
  out.raw.push_back(rhs / len);
  Dims dims(d);
  out.pretty = pretty_raw(out.raw, dims);
  if (auto z = suggest_integer(out.raw, tol, max_mult)) {
    Inequality q;
    for (std::size_t i = 0; i + 1 < z->size(); ++i) q.coeffs.push_back(Z((*z)[i]));
    q.offset = Z(z->back());
    bool any = false;
    for (const auto& x : q.coeffs) any = any || x != 0;
    if (any) out.suggested = q;
  }
  return out;
}

json to_json(const FlowOptions& o) {
  json j = {{"min_progress", o.min_progress}, {"min_step", o.min_step},     {"initial_step", o.initial_step},
            {"max_restarts", o.max_restarts}, {"target_precision", o.target_precision}, {"seed", o.seed},
            {"max_rejects", o.max_rejects}};
  j["max_steps"] = o.max_steps ? json(*o.max_steps) : json(nullptr);
  return j;
}

FlowOptions flow_options_from_json(const json& j) {
  if (j.is_null()) return {};
  if (!j.is_object()) throw Error("MalformedInput", "flow options must be an object");
  try {
    FlowOptions o = FlowOptions::preset(j.value("preset", std::string("default")));
    if (j.contains("max_steps") && !j["max_steps"].is_null()) o.max_steps = j["max_steps"].get<long>();
    o.min_progress = j.value("min_progress", o.min_progress);
    o.min_step = j.value("min_step", o.min_step);
    o.initial_step = j.value("initial_step", o.initial_step);
    o.max_restarts = j.value("max_restarts", o.max_restarts);
    o.target_precision = j.value("target_precision", o.target_precision);
    o.seed = j.value("seed", o.seed);
    o.max_rejects = j.value("max_rejects", o.max_rejects);
    if (!(o.initial_step > 0) || !(o.min_step > 0) || o.max_restarts < 0 || o.max_rejects < 1)
      throw Error("MalformedInput", "flow options out of range");
    return o;
  } catch (const json::exception& e) {
    throw Error("MalformedInput", std::string("flow options: ") + e.what());
  }
}

json to_json(const ExtractedInequality& e, const Dims& dims) {
  json j = {{"raw", e.raw}, {"pretty", e.pretty}};
  if (e.suggested)
    j["suggested"] = to_json(*e.suggested, dims);
  else
    j["suggested"] = "Unrated";
  return j;
}

json to_json(const FlowOutcome& o, bool with_trajectory) {
  const Dims& dims = o.final_state.dims;
  json j = {{"reached", o.reached},
            {"exit", to_string(o.exit)},
            {"final_distance", o.final_distance},
            {"final_point", most_local(o.final_spectrum)},
            {"final_spectrum", spectrum_to_json(o.final_spectrum)},
            {"steps_taken", o.steps_taken},
            {"restarts_used", o.restarts_used}};
  j["inequality"] = o.inequality ? to_json(*o.inequality, dims) : json(nullptr);
  if (with_trajectory) {
    j["trajectory"] = o.trajectory;
    json xs = json::array();
    for (const auto& s : o.steps)
      if (s.accepted) xs.push_back({{"trial", s.trial}, {"xi", s.xi_after}, {"distance", s.distance}, {"h", s.h}});
    j["telemetry"] = xs;
  }
  return j;
}

double DescentCheck::relative_gap() const {
  double scale = std::max(std::abs(central), 1e-300);
  return std::abs(forward - backward) / scale;
}

DescentCheck descent_check(const PureState& psi, const Slocc& u, const YoungTuple& lam, double h) {
  const QSpectrum ls = lambda_star(lam);
  FlowPoint at{normalize(psi), u};
  std::vector<CMat> xi = extended_moment(at.psi, at.u, ls, lam.k);
  auto f = [&](double t) {
    FlowPoint p = flow_step(at, xi, t);
    double n = tuple_norm(extended_moment(p.psi, p.u, ls, lam.k));
    return n * n;
  };
  const double f0 = f(0), fp = f(h), fm = f(-h);
  DescentCheck out;
  out.forward = (fp - f0) / h;
  out.backward = (f0 - fm) / h;
  out.central = (fp - fm) / (2 * h);
  return out;
}

}  // namespace polyent
