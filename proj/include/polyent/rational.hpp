#pragma once

#include <gmpxx.h>

#include <string>
#include <vector>

namespace polyent {

using Q = mpq_class;
using Z = mpz_class;
using QVec = std::vector<Q>;
using ZVec = std::vector<Z>;

// Accepts "p", "p/q", "-1.25", "3e-2".
Q parse_rational(const std::string& s);
std::string to_string(const Q& q);
std::string to_string(const Z& z);
double to_double(const Q& q);

// Smallest common denominator scaling followed by gcd division; the sign is kept.
ZVec primitive_integer(const QVec& v);
Z gcd_of(const ZVec& v);
Z lcm_of_denominators(const QVec& v);

// Best rational approximation with denominator at most max_den (continued fractions).
Q rationalize(double x, long max_den);

}  // namespace polyent
