#include "polyent/io.hpp"

#include "polyent/error.hpp"

#include <fstream>
#include <sstream>

namespace polyent {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error("MalformedInput", what); }

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) malformed(std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("FileNotFound", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    malformed(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("FileNotWritable", "cannot write " + path);
  out << j.dump(2) << '\n';
}

Q rational_from_json(const json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Q(j.get<long>());
  if (j.is_number()) {
    std::ostringstream os;
    os.precision(17);
    os << j.get<double>();
    return parse_rational(os.str());
  }
  malformed("expected a rational, got " + j.dump());
}

json to_json(const Q& q) { return to_string(q); }

QVec qvec_from_json(const json& j) {
  if (!j.is_array()) malformed("expected an array of rationals");
  QVec v;
  for (const auto& x : j) v.push_back(rational_from_json(x));
  return v;
}

json to_json(const QVec& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(to_string(x));
  return a;
}

Dims dims_from_json(const json& j) {
  if (!j.is_array() || j.empty()) malformed("dims must be a nonempty array");
  std::vector<int> d;
  for (const auto& x : j) {
    if (!x.is_number_integer() || x.get<int>() < 1) malformed("dims entries must be positive integers");
    d.push_back(x.get<int>());
  }
  return Dims(d);
}

json to_json(const Dims& d) { return d.d; }

std::vector<Term> terms_from_json(const json& j) {
  if (!j.is_array()) malformed("terms must be an array");
  std::vector<Term> out;
  for (const auto& t : j) {
    Term term;
    const json& k = field(t, "ket");
    if (!k.is_array()) malformed("ket must be an array");
    for (const auto& x : k) {
      if (!x.is_number_integer()) malformed("ket entries must be integers");
      term.ket.push_back(x.get<int>());
    }
    double re = t.contains("re") ? t.at("re").get<double>() : 0.0;
    double im = t.contains("im") ? t.at("im").get<double>() : 0.0;
    if (!t.contains("re") && !t.contains("im")) re = 1.0;
    term.c = cplx(re, im);
    out.push_back(term);
  }
  return out;
}

json terms_to_json(const PureState& psi, double tol) {
  json a = json::array();
  for (Eigen::Index k = 0; k < psi.amp.size(); ++k) {
    if (std::abs(psi.amp[k]) <= tol) continue;
    a.push_back({{"ket", ket_of_index(static_cast<std::size_t>(k), psi.dims)},
                 {"re", psi.amp[k].real()},
                 {"im", psi.amp[k].imag()}});
  }
  return a;
}

PureState state_from_json(const json& j, const std::optional<Dims>& expected) {
  Dims dims = dims_from_json(field(j, "dims"));
  if (expected && *expected != dims)
    throw Error("DimsMismatch", "state file has dims " + dims.label() + " but " + expected->label() + " was given");
  try {
    return from_terms(dims, terms_from_json(field(j, "terms")));
  } catch (const json::exception& e) {
    malformed(e.what());
  }
}

json state_to_json(const PureState& psi) { return {{"dims", psi.dims.d}, {"terms", terms_to_json(psi)}}; }

Inequality inequality_from_json(const json& j, int expected_len) {
  QVec c = qvec_from_json(field(j, "coeffs"));
  Q off = rational_from_json(field(j, "offset"));
  if (j.contains("dims")) {
    Dims d = dims_from_json(j.at("dims"));
    if (static_cast<int>(c.size()) != d.most()) throw Error("DimsMismatch", "coefficient count differs from dims");
  }
  if (expected_len >= 0 && static_cast<int>(c.size()) != expected_len)
    throw Error("DimsMismatch", "inequality has " + std::to_string(c.size()) + " coefficients, expected " +
                                    std::to_string(expected_len));
  bool nz = false;
  for (const auto& x : c) nz = nz || x != 0;
  if (!nz) malformed("inequality coefficients are all zero");
  return make_inequality(c, off);
}

json to_json(const Inequality& ineq) {
  json c = json::array();
  for (const auto& x : ineq.coeffs) c.push_back(to_string(x));
  return {{"coeffs", c}, {"offset", to_string(ineq.offset)}};
}

json to_json(const Inequality& ineq, const Dims& dims) {
  json j = to_json(ineq);
  j["dims"] = dims.d;
  return j;
}

json spectrum_to_json(const Spectrum& s) { return s; }

HPolytope hpolytope_from_json(const json& j) {
  HPolytope p{dims_from_json(field(j, "dims")), {}};
  const json& a = field(j, "ineqs");
  if (!a.is_array()) malformed("ineqs must be an array");
  for (const auto& x : a) p.ineqs.push_back(inequality_from_json(x, p.dims.most()));
  return p;
}

VPolytope vpolytope_from_json(const json& j) {
  VPolytope v{dims_from_json(field(j, "dims")), {}};
  const json& a = field(j, "verts");
  if (!a.is_array()) malformed("verts must be an array");
  for (const auto& x : a) {
    QVec p = qvec_from_json(x);
    if (static_cast<int>(p.size()) != v.dims.most()) throw Error("DimsMismatch", "vertex length differs from dims");
    v.verts.push_back(p);
  }
  return v;
}

json to_json(const HPolytope& p) {
  json a = json::array();
  for (const auto& i : p.ineqs) a.push_back(to_json(i));
  return {{"dims", p.dims.d}, {"ineqs", a}};
}

json to_json(const VPolytope& v) {
  json a = json::array();
  for (const auto& p : v.verts) a.push_back(to_json(p));
  return {{"dims", v.dims.d}, {"verts", a}};
}

}  // namespace polyent
