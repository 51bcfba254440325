#pragma once

#include "polyent/rational.hpp"
#include "polyent/tensor.hpp"

#include <string>
#include <vector>

namespace polyent {

enum class Exec { Serial, Parallel };

// coeffs . x + offset <= 0, stored as coprime integers.
struct Inequality {
  ZVec coeffs;
  Z offset;

  bool operator==(const Inequality& o) const { return coeffs == o.coeffs && offset == o.offset; }
  bool operator<(const Inequality& o) const;
};

Inequality make_inequality(const QVec& coeffs, const Q& offset);
Inequality make_inequality(const std::vector<long>& coeffs, long offset);
// Builds lhs >= rhs, i.e. -lhs + rhs <= 0.
Inequality at_least(const std::vector<long>& lhs, long rhs);
Q evaluate(const Inequality& ineq, const QVec& x);
double evaluate(const Inequality& ineq, const std::vector<double>& x);
// "x11 + x21 + x31 >= 2"
std::string pretty(const Inequality& ineq, const Dims& dims);

struct HPolytope {
  Dims dims;
  std::vector<Inequality> ineqs;
  int dim() const { return dims.most(); }
};

struct VPolytope {
  Dims dims;
  std::vector<QVec> verts;
};

struct Cone {
  std::vector<ZVec> rays;
  std::vector<ZVec> lineality;
};

// Extreme rays and lineality of {y : A y <= 0}. Rows are processed in the given order.
Cone double_description(const std::vector<ZVec>& rows, int n, Exec exec = Exec::Serial);

// Exact rank of an integer matrix.
int exact_rank(const std::vector<ZVec>& rows, int n);

VPolytope enumerate_vertices(const HPolytope& p, Exec exec = Exec::Serial);
// Every D-subset of hyperplanes, solved and filtered; reference for small D.
std::vector<QVec> brute_force_vertices(const HPolytope& p);
HPolytope facet_hull(const VPolytope& v, Exec exec = Exec::Serial);
HPolytope remove_redundant(const HPolytope& p);

struct Containment {
  bool inside = true;
  std::vector<std::size_t> violated;
  std::vector<Q> violation;
};

Containment contains(const HPolytope& p, const QVec& x, const Q& slack = 0);
// Slack here is the tolerated positive value of coeffs.x + offset.
bool contains_approx(const HPolytope& p, const std::vector<double>& x, double slack,
                     std::vector<std::size_t>* violated = nullptr);
double min_slack(const HPolytope& p, const std::vector<double>& x);

// Weyl chamber and density operator constraints for dims, integer scaled.
HPolytope local_constraints(const Dims& dims);
// Generic 2x2xn system (n = 3 or 4) from the mixed two-qubit marginal inequalities.
HPolytope bravyi_inequalities(int n);

bool same_vertex_set(std::vector<QVec> a, std::vector<QVec> b);
void sort_points(std::vector<QVec>& pts);

}  // namespace polyent
