#include "polyent/rational.hpp"

#include "polyent/error.hpp"

#include <cctype>
#include <cmath>

namespace polyent {

namespace {

bool all_digits(const std::string& s, std::size_t from, std::size_t to) {
  if (from >= to) return false;
  for (std::size_t i = from; i < to; ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

Z parse_integer(const std::string& s) {
  std::size_t start = (!s.empty() && (s[0] == '-' || s[0] == '+')) ? 1 : 0;
  if (!all_digits(s, start, s.size())) throw Error("MalformedNumber", "not an integer: '" + s + "'");
  Z z(s[0] == '+' ? s.substr(1) : s, 10);
  return z;
}

}  // namespace

Q parse_rational(const std::string& raw) {
  std::string s;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw Error("MalformedNumber", "empty number");

  if (auto slash = s.find('/'); slash != std::string::npos) {
    Z num = parse_integer(s.substr(0, slash));
    Z den = parse_integer(s.substr(slash + 1));
    if (den == 0) throw Error("MalformedNumber", "zero denominator in '" + raw + "'");
    Q q(num, den);
    q.canonicalize();
    return q;
  }

  std::string mant = s;
  long exp10 = 0;
  if (auto e = s.find_first_of("eE"); e != std::string::npos) {
    mant = s.substr(0, e);
    std::string es = s.substr(e + 1);
    exp10 = parse_integer(es).get_si();
    if (std::labs(exp10) > 300) throw Error("MalformedNumber", "exponent out of range in '" + raw + "'");
  }
  bool neg = false;
  if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) {
    neg = mant[0] == '-';
    mant = mant.substr(1);
  }
  std::string digits = mant;
  if (auto dot = mant.find('.'); dot != std::string::npos) {
    std::string frac = mant.substr(dot + 1);
    digits = mant.substr(0, dot) + frac;
    exp10 -= static_cast<long>(frac.size());
  }
  if (!all_digits(digits, 0, digits.size())) throw Error("MalformedNumber", "not a number: '" + raw + "'");
  Z num(digits, 10);
  Z pow10;
  mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exp10)));
  Q q = exp10 >= 0 ? Q(num * pow10) : Q(num, pow10);
  q.canonicalize();
  return neg ? Q(-q) : q;
}

std::string to_string(const Q& q) { return q.get_str(10); }
std::string to_string(const Z& z) { return z.get_str(10); }
double to_double(const Q& q) { return q.get_d(); }

Z gcd_of(const ZVec& v) {
  Z g = 0;
  for (const auto& z : v) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), z.get_mpz_t());
  return g;
}

Z lcm_of_denominators(const QVec& v) {
  Z l = 1;
  for (const auto& q : v) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den_mpz_t());
  return l;
}

ZVec primitive_integer(const QVec& v) {
  Z l = lcm_of_denominators(v);
  ZVec out;
  out.reserve(v.size());
  for (const auto& q : v) {
    Q s = q * l;
    out.push_back(s.get_num());
  }
  Z g = gcd_of(out);
  if (g > 1)
    for (auto& z : out) mpz_divexact(z.get_mpz_t(), z.get_mpz_t(), g.get_mpz_t());
  return out;
}

Q rationalize(double x, long max_den) {
  if (!std::isfinite(x)) throw Error("MalformedNumber", "non-finite value");
  long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int iter = 0; iter < 64; ++iter) {
    double a = std::floor(r);
    long ai = static_cast<long>(a);
    long h2 = ai * h1 + h0, k2 = ai * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1; h1 = h2; k0 = k1; k1 = k2;
    double frac = r - a;
    if (frac < 1e-12) break;
    r = 1.0 / frac;
  }
  Q q(h1, k1);
  q.canonicalize();
  return q;
}

}  // namespace polyent
