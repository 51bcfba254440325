#include "polyent/convexity.hpp"

#include "polyent/error.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace polyent {

bool Inequality::operator<(const Inequality& o) const {
  if (coeffs != o.coeffs) return coeffs < o.coeffs;
  return offset < o.offset;
}

Inequality make_inequality(const QVec& coeffs, const Q& offset) {
  QVec all = coeffs;
  all.push_back(offset);
  bool nonzero = false;
  for (const auto& c : coeffs) nonzero = nonzero || c != 0;
  if (!nonzero) throw Error("ZeroInequality", "inequality has all-zero coefficients");
  ZVec z = primitive_integer(all);
  Inequality out;
  out.offset = z.back();
  z.pop_back();
  out.coeffs = std::move(z);
  return out;
}

Inequality make_inequality(const std::vector<long>& coeffs, long offset) {
  QVec c;
  for (long v : coeffs) c.emplace_back(v);
  return make_inequality(c, Q(offset));
}

Inequality at_least(const std::vector<long>& lhs, long rhs) {
  std::vector<long> neg;
  for (long v : lhs) neg.push_back(-v);
  return make_inequality(neg, rhs);
}

Q evaluate(const Inequality& ineq, const QVec& x) {
  if (x.size() != ineq.coeffs.size()) throw Error("DimsMismatch", "point length differs from inequality length");
  Q s = ineq.offset;
  for (std::size_t i = 0; i < x.size(); ++i) s += ineq.coeffs[i] * x[i];
  return s;
}

double evaluate(const Inequality& ineq, const std::vector<double>& x) {
  if (x.size() != ineq.coeffs.size()) throw Error("DimsMismatch", "point length differs from inequality length");
  double s = ineq.offset.get_d();
  for (std::size_t i = 0; i < x.size(); ++i) s += ineq.coeffs[i].get_d() * x[i];
  return s;
}

std::string pretty(const Inequality& ineq, const Dims& dims) {
  std::vector<std::string> names;
  for (int i = 0; i < dims.n(); ++i)
    for (int j = 1; j < dims[i]; ++j) names.push_back("x" + std::to_string(i + 1) + "," + std::to_string(j));
  if (names.size() != ineq.coeffs.size()) throw Error("DimsMismatch", "inequality length differs from D_most");
  std::string s;
  for (std::size_t i = 0; i < names.size(); ++i) {
    Z c = -ineq.coeffs[i];
    if (c == 0) continue;
    Z a = abs(c);
    if (s.empty())
      s += c < 0 ? "-" : "";
    else
      s += c < 0 ? " - " : " + ";
    if (a != 1) s += a.get_str();
    s += names[i];
  }
  return s + " >= " + ineq.offset.get_str();
}

namespace {

using Word = std::uint64_t;

struct Bits {
  std::vector<Word> w;
  explicit Bits(std::size_t n = 0) : w((n + 63) / 64, 0) {}
  void set(std::size_t i) { w[i / 64] |= Word(1) << (i % 64); }
  bool test(std::size_t i) const { return (w[i / 64] >> (i % 64)) & 1; }
  std::size_t count() const {
    std::size_t c = 0;
    for (Word x : w) c += static_cast<std::size_t>(__builtin_popcountll(x));
    return c;
  }
};

Bits operator&(const Bits& a, const Bits& b) {
  Bits r;
  r.w.resize(a.w.size());
  for (std::size_t i = 0; i < a.w.size(); ++i) r.w[i] = a.w[i] & b.w[i];
  return r;
}

struct Ray {
  ZVec v;
  Bits zero;
};

Z dot(const ZVec& a, const ZVec& b) {
  Z s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void make_primitive(ZVec& v) {
  Z g = gcd_of(v);
  if (g > 1)
    for (auto& z : v) mpz_divexact(z.get_mpz_t(), z.get_mpz_t(), g.get_mpz_t());
}

ZVec combine(const Z& a, const ZVec& x, const Z& b, const ZVec& y) {
  ZVec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = a * x[i] + b * y[i];
  make_primitive(r);
  return r;
}

int rank_of(std::vector<ZVec> m, int n, int stop_at) {
  int rank = 0;
  std::size_t rows = m.size();
  Z prev = 1;
  for (int col = 0; col < n && static_cast<std::size_t>(rank) < rows; ++col) {
    std::size_t piv = static_cast<std::size_t>(rank);
    while (piv < rows && m[piv][static_cast<std::size_t>(col)] == 0) ++piv;
    if (piv == rows) continue;
    std::swap(m[piv], m[static_cast<std::size_t>(rank)]);
    const ZVec& p = m[static_cast<std::size_t>(rank)];
    for (std::size_t r = static_cast<std::size_t>(rank) + 1; r < rows; ++r) {
      Z f = m[r][static_cast<std::size_t>(col)];
      for (int c = col; c < n; ++c) {
        Z t = p[static_cast<std::size_t>(col)] * m[r][static_cast<std::size_t>(c)] - f * p[static_cast<std::size_t>(c)];
        mpz_divexact(t.get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
        m[r][static_cast<std::size_t>(c)] = t;
      }
    }
    prev = p[static_cast<std::size_t>(col)];
    ++rank;
    if (rank >= stop_at) return rank;
  }
  return rank;
}

bool adjacent(const Ray& p, const Ray& q, const std::vector<ZVec>& rows, std::size_t processed, int need) {
  Bits common = p.zero & q.zero;
  if (need <= 0) return true;
  if (common.count() < static_cast<std::size_t>(need)) return false;
  std::vector<ZVec> sub;
  for (std::size_t k = 0; k < processed; ++k)
    if (common.test(k)) sub.push_back(rows[k]);
  int n = static_cast<int>(rows.front().size());
  return rank_of(std::move(sub), n, need) >= need;
}

std::vector<Ray> combine_pairs_serial(const std::vector<Ray>& pos, const std::vector<Ray>& neg,
                                      const std::vector<Z>& hp, const std::vector<Z>& hn,
                                      const std::vector<ZVec>& rows, std::size_t k, int need) {
  std::vector<Ray> out;
  for (std::size_t a = 0; a < pos.size(); ++a)
    for (std::size_t b = 0; b < neg.size(); ++b) {
      if (!adjacent(pos[a], neg[b], rows, k, need)) continue;
      Ray r{combine(hp[a], neg[b].v, Z(-hn[b]), pos[a].v), pos[a].zero & neg[b].zero};
      r.zero.set(k);
      out.push_back(std::move(r));
    }
  return out;
}

std::vector<Ray> combine_pairs_parallel(const std::vector<Ray>& pos, const std::vector<Ray>& neg,
                                        const std::vector<Z>& hp, const std::vector<Z>& hn,
                                        const std::vector<ZVec>& rows, std::size_t k, int need) {
  const long total = static_cast<long>(pos.size() * neg.size());
  std::vector<std::vector<std::pair<long, Ray>>> found;
#ifdef _OPENMP
  found.resize(static_cast<std::size_t>(omp_get_max_threads()));
#pragma omp parallel for schedule(dynamic, 16)
  for (long idx = 0; idx < total; ++idx) {
    std::size_t a = static_cast<std::size_t>(idx) / neg.size();
    std::size_t b = static_cast<std::size_t>(idx) % neg.size();
    if (!adjacent(pos[a], neg[b], rows, k, need)) continue;
    Ray r{combine(hp[a], neg[b].v, Z(-hn[b]), pos[a].v), pos[a].zero & neg[b].zero};
    r.zero.set(k);
    found[static_cast<std::size_t>(omp_get_thread_num())].emplace_back(idx, std::move(r));
  }
#else
  return combine_pairs_serial(pos, neg, hp, hn, rows, k, need);
#endif
  std::vector<std::pair<long, Ray>> merged;
  for (auto& f : found)
    for (auto& e : f) merged.push_back(std::move(e));
  std::sort(merged.begin(), merged.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<Ray> out;
  out.reserve(merged.size());
  for (auto& e : merged) out.push_back(std::move(e.second));
  (void)total;
  return out;
}

}  // namespace

int exact_rank(const std::vector<ZVec>& rows, int n) {
  if (rows.empty()) return 0;
  return rank_of(rows, n, n + 1);
}

Cone double_description(const std::vector<ZVec>& rows, int n, Exec exec) {
  for (const auto& r : rows)
    if (static_cast<int>(r.size()) != n) throw Error("DimsMismatch", "row length differs from ambient dimension");
  const std::size_t m = rows.size();
  std::vector<ZVec> lin;
  for (int i = 0; i < n; ++i) {
    ZVec e(static_cast<std::size_t>(n), 0);
    e[static_cast<std::size_t>(i)] = 1;
    lin.push_back(std::move(e));
  }
  std::vector<Ray> rays;

  for (std::size_t k = 0; k < m; ++k) {
    const ZVec& h = rows[k];
    std::size_t pick = lin.size();
    for (std::size_t i = 0; i < lin.size(); ++i)
      if (dot(h, lin[i]) != 0) {
        pick = i;
        break;
      }

    if (pick < lin.size()) {
      ZVec l0 = lin[pick];
      Z h0 = dot(h, l0);
      if (h0 > 0) {
        for (auto& z : l0) z = -z;
        h0 = -h0;
      }
      std::vector<ZVec> nlin;
      for (std::size_t i = 0; i < lin.size(); ++i) {
        if (i == pick) continue;
        Z hl = dot(h, lin[i]);
        if (hl == 0)
          nlin.push_back(lin[i]);
        else
          nlin.push_back(combine(Z(-h0), lin[i], hl, l0));
      }
      for (auto& r : rays) {
        Z hr = dot(h, r.v);
        if (hr != 0) r.v = combine(Z(-h0), r.v, hr, l0);
        r.zero.set(k);
      }
      Bits z(m);
      for (std::size_t j = 0; j < k; ++j) z.set(j);
      make_primitive(l0);
      rays.push_back(Ray{std::move(l0), std::move(z)});
      lin = std::move(nlin);
      continue;
    }

    std::vector<Ray> pos, neg, keep;
    std::vector<Z> hp, hn;
    for (auto& r : rays) {
      Z v = dot(h, r.v);
      if (v > 0) {
        pos.push_back(std::move(r));
        hp.push_back(v);
      } else if (v < 0) {
        neg.push_back(r);
        hn.push_back(v);
        keep.push_back(std::move(r));
      } else {
        r.zero.set(k);
        keep.push_back(std::move(r));
      }
    }
    if (!pos.empty() && !neg.empty()) {
      int need = n - static_cast<int>(lin.size()) - 2;
      std::vector<Ray> fresh = exec == Exec::Parallel ? combine_pairs_parallel(pos, neg, hp, hn, rows, k, need)
                                                      : combine_pairs_serial(pos, neg, hp, hn, rows, k, need);
      for (auto& r : fresh) keep.push_back(std::move(r));
    }
    rays = std::move(keep);
  }

  Cone c;
  for (auto& r : rays) c.rays.push_back(std::move(r.v));
  c.lineality = std::move(lin);
  return c;
}

void sort_points(std::vector<QVec>& pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
}

bool same_vertex_set(std::vector<QVec> a, std::vector<QVec> b) {
  sort_points(a);
  sort_points(b);
  return a == b;
}

namespace {

std::vector<ZVec> homogenized_rows(const HPolytope& p) {
  const int d = p.dim();
  std::vector<ZVec> rows;
  ZVec t(static_cast<std::size_t>(d + 1), 0);
  t.back() = -1;
  rows.push_back(t);
  std::vector<ZVec> rest;
  for (const auto& q : p.ineqs) {
    if (static_cast<int>(q.coeffs.size()) != d) throw Error("DimsMismatch", "inequality length differs from D_most");
    ZVec r = q.coeffs;
    r.push_back(q.offset);
    rest.push_back(std::move(r));
  }
  std::sort(rest.begin(), rest.end());
  rest.erase(std::unique(rest.begin(), rest.end()), rest.end());
  for (auto& r : rest) rows.push_back(std::move(r));
  return rows;
}

}  // namespace

VPolytope enumerate_vertices(const HPolytope& p, Exec exec) {
  const int d = p.dim();
  Cone c = double_description(homogenized_rows(p), d + 1, exec);
  VPolytope out{p.dims, {}};
  bool recession = !c.lineality.empty();
  for (const auto& r : c.rays) {
    const Z& t = r.back();
    if (t == 0) {
      recession = true;
      continue;
    }
    QVec x;
    for (int i = 0; i < d; ++i) {
      Q q(r[static_cast<std::size_t>(i)], t);
      q.canonicalize();
      x.push_back(q);
    }
    out.verts.push_back(std::move(x));
  }
  if (out.verts.empty()) throw Error("Empty", "inequality system is infeasible");
  if (recession) throw Error("Unbounded", "inequality system has a recession direction");
  sort_points(out.verts);
  return out;
}

namespace {

// Solves the square system exactly; returns false when singular.
bool solve_square(std::vector<QVec> a, QVec b, QVec& x) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    while (piv < n && a[piv][c] == 0) ++piv;
    if (piv == n) return false;
    std::swap(a[piv], a[c]);
    std::swap(b[piv], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a[r][c] == 0) continue;
      Q f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  x.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return true;
}

}  // namespace

std::vector<QVec> brute_force_vertices(const HPolytope& p) {
  const int d = p.dim();
  const std::size_t m = p.ineqs.size();
  std::vector<QVec> out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), 0);
  if (m < static_cast<std::size_t>(d)) return out;
  while (true) {
    std::vector<QVec> a;
    QVec b;
    for (std::size_t k : idx) {
      QVec row;
      for (const auto& c : p.ineqs[k].coeffs) row.emplace_back(c);
      a.push_back(row);
      b.emplace_back(-p.ineqs[k].offset);
    }
    QVec x;
    if (solve_square(a, b, x)) {
      bool ok = true;
      for (const auto& q : p.ineqs)
        if (evaluate(q, x) > 0) {
          ok = false;
          break;
        }
      if (ok) out.push_back(x);
    }
    int i = d - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - static_cast<std::size_t>(d) + static_cast<std::size_t>(i)) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < d; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  sort_points(out);
  return out;
}

HPolytope facet_hull(const VPolytope& v, Exec exec) {
  if (v.verts.empty()) throw Error("Empty", "no points given");
  const int d = static_cast<int>(v.verts.front().size());
  std::vector<ZVec> rows;
  for (const auto& x : v.verts) {
    if (static_cast<int>(x.size()) != d) throw Error("DimsMismatch", "points have different lengths");
    QVec h = x;
    h.push_back(1);
    rows.push_back(primitive_integer(h));
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  Cone c = double_description(rows, d + 1, exec);
  HPolytope out{v.dims, {}};
  auto push = [&](const ZVec& r) {
    bool nonzero = false;
    for (int i = 0; i < d; ++i) nonzero = nonzero || r[static_cast<std::size_t>(i)] != 0;
    if (!nonzero) return;
    QVec coeffs;
    for (int i = 0; i < d; ++i) coeffs.emplace_back(r[static_cast<std::size_t>(i)]);
    out.ineqs.push_back(make_inequality(coeffs, Q(r.back())));
  };
  for (const auto& r : c.rays) push(r);
  for (const auto& l : c.lineality) {
    push(l);
    ZVec neg = l;
    for (auto& z : neg) z = -z;
    push(neg);
  }
  std::sort(out.ineqs.begin(), out.ineqs.end());
  out.ineqs.erase(std::unique(out.ineqs.begin(), out.ineqs.end()), out.ineqs.end());
  return out;
}

namespace {

int affine_rank(const std::vector<const QVec*>& pts) {
  if (pts.size() <= 1) return 0;
  std::vector<ZVec> rows;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    QVec diff;
    for (std::size_t k = 0; k < pts[i]->size(); ++k) diff.push_back((*pts[i])[k] - (*pts[0])[k]);
    bool zero = std::all_of(diff.begin(), diff.end(), [](const Q& q) { return q == 0; });
    if (!zero) rows.push_back(primitive_integer(diff));
  }
  if (rows.empty()) return 0;
  return exact_rank(rows, static_cast<int>(pts[0]->size()));
}

}  // namespace

HPolytope remove_redundant(const HPolytope& p) {
  VPolytope v = enumerate_vertices(p);
  std::vector<const QVec*> all;
  for (const auto& x : v.verts) all.push_back(&x);
  const int full = affine_rank(all);
  HPolytope out{p.dims, {}};

  if (full == p.dim()) {
    std::set<std::vector<std::size_t>> seen;
    for (const auto& q : p.ineqs) {
      std::vector<const QVec*> tight;
      std::vector<std::size_t> ids;
      for (std::size_t i = 0; i < v.verts.size(); ++i)
        if (evaluate(q, v.verts[i]) == 0) {
          tight.push_back(&v.verts[i]);
          ids.push_back(i);
        }
      if (tight.empty() || affine_rank(tight) != full - 1) continue;
      if (!seen.insert(ids).second) continue;
      out.ineqs.push_back(q);
    }
    return out;
  }

  // Lower-dimensional: greedy removal, each step certified by re-enumeration.
  std::vector<Inequality> cur;
  for (const auto& q : p.ineqs)
    if (std::find(cur.begin(), cur.end(), q) == cur.end()) cur.push_back(q);
  for (std::size_t i = cur.size(); i-- > 0;) {
    std::vector<Inequality> trial = cur;
    trial.erase(trial.begin() + static_cast<long>(i));
    try {
      VPolytope w = enumerate_vertices(HPolytope{p.dims, trial});
      if (same_vertex_set(w.verts, v.verts)) cur = std::move(trial);
    } catch (const Error&) {
    }
  }
  out.ineqs = std::move(cur);
  return out;
}

Containment contains(const HPolytope& p, const QVec& x, const Q& slack) {
  if (static_cast<int>(x.size()) != p.dim()) throw Error("DimsMismatch", "point length differs from D_most");
  Containment c;
  for (std::size_t i = 0; i < p.ineqs.size(); ++i) {
    Q val = evaluate(p.ineqs[i], x);
    if (val > slack) {
      c.inside = false;
      c.violated.push_back(i);
      c.violation.push_back(val);
    }
  }
  return c;
}

bool contains_approx(const HPolytope& p, const std::vector<double>& x, double slack,
                     std::vector<std::size_t>* violated) {
  if (static_cast<int>(x.size()) != p.dim()) throw Error("DimsMismatch", "point length differs from D_most");
  bool inside = true;
  for (std::size_t i = 0; i < p.ineqs.size(); ++i)
    if (evaluate(p.ineqs[i], x) > slack) {
      inside = false;
      if (violated) violated->push_back(i);
    }
  return inside;
}

double min_slack(const HPolytope& p, const std::vector<double>& x) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& q : p.ineqs) m = std::min(m, -evaluate(q, x));
  return m;
}

HPolytope local_constraints(const Dims& dims) {
  HPolytope p{dims, {}};
  const int D = dims.most();
  int base = 0;
  for (int i = 0; i < dims.n(); ++i) {
    const int d = dims[i];
    if (d == 1) continue;
    auto var = [&](int j) { return static_cast<std::size_t>(base + j); };
    for (int j = 0; j + 1 < d - 1; ++j) {
      std::vector<long> c(static_cast<std::size_t>(D), 0);
      c[var(j + 1)] = 1;
      c[var(j)] = -1;
      p.ineqs.push_back(make_inequality(c, 0));
    }
    {
      std::vector<long> c(static_cast<std::size_t>(D), 0);
      for (int j = 0; j < d - 1; ++j) c[var(j)] = -1;
      c[var(d - 2)] = -2;
      p.ineqs.push_back(make_inequality(c, 1));
    }
    {
      std::vector<long> c(static_cast<std::size_t>(D), 0);
      for (int j = 0; j < d - 1; ++j) c[var(j)] = 1;
      p.ineqs.push_back(make_inequality(c, -1));
    }
    base += d - 1;
  }
  return p;
}

HPolytope bravyi_inequalities(int n) {
  if (n != 3 && n != 4) throw Error("UnsupportedDim", "only 2x2x3 and 2x2x4 are supported");
  HPolytope p = local_constraints(Dims{2, 2, n});
  auto add = [&](std::vector<long> c, long off) { p.ineqs.push_back(make_inequality(c, off)); };
  if (n == 4) {
    // variables: a = x11, b = x21, l1, l2, l3; l4 = 1 - l1 - l2 - l3
    add({1, 0, -1, -1, 0}, 0);
    add({0, 1, -1, -1, 0}, 0);
    add({1, 1, -2, -1, -1}, 0);
    add({1, -1, -1, 0, 1}, 0);
    add({-1, 1, -1, 0, 1}, 0);
    add({1, -1, -1, -2, -1}, 1);
    add({-1, 1, -1, -2, -1}, 1);
  } else {
    // variables: a, b, l1, l2; l3 = 1 - l1 - l2, l4 = 0
    add({1, 0, -1, -1}, 0);
    add({0, 1, -1, -1}, 0);
    add({1, 1, -1, 0}, -1);
    add({1, -1, -2, -1}, 1);
    add({-1, 1, -2, -1}, 1);
    add({1, -1, 0, -1}, 0);
    add({-1, 1, 0, -1}, 0);
  }
  return p;
}

}  // namespace polyent
