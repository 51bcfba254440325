#pragma once

#include "polyent/convexity.hpp"
#include "polyent/io.hpp"
#include "polyent/tensor.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace polyent {

struct ClosestPointRow {
  bool not_applicable = false;
  // as printed
  Inequality ineq;
  // replacement for a printed row that verification refutes
  std::optional<Inequality> corrected;
  const Inequality& effective() const { return corrected ? *corrected : ineq; }
};

struct CatalogEntry {
  std::string id;
  Dims dims;
  std::string class_name;
  std::vector<Term> representative;
  bool generic = false;
  // additional to the generic system of the same dims, coeffs.x + offset <= 0
  std::vector<Inequality> inequalities;
  std::optional<ClosestPointRow> closest_point;
  std::string source;
  std::string notes;
  std::vector<std::string> includes_in;
  std::optional<std::vector<QVec>> expected_vertices;
  std::vector<QVec> listed_vertices;
  std::optional<int> expected_vertex_count;
  std::optional<std::vector<Term>> free_representative;
  std::map<std::string, Q> expected_weights;
  bool duplicate_suspect = false;
};

CatalogEntry entry_from_json(const json& j);
json to_json(const CatalogEntry& e);

class Catalog {
 public:
  // Reads every catalog/<dims>/<id>.json below root.
  explicit Catalog(std::string root);
  // Root from POLYENT_CATALOG, else the source tree's catalog directory.
  static Catalog open_default();
  static std::string default_root();

  const CatalogEntry& load(const std::string& id) const;
  std::vector<const CatalogEntry*> list(const std::optional<Dims>& dims = std::nullopt) const;
  const CatalogEntry* generic_for(const Dims& dims) const;
  // Local constraints, the generic system of the same dims when present, and the entry's own inequalities.
  HPolytope polytope(const CatalogEntry& e) const;
  const std::string& root() const { return root_; }

 private:
  std::string root_;
  std::map<std::string, CatalogEntry> entries_;
};

PureState representative_state(const CatalogEntry& e);
// The representative used for closest-point checks: free_representative when given.
PureState closest_point_state(const CatalogEntry& e);

PureState dicke_state(int m, int n);
// sum_i x_{i,1} >= n - m
Inequality dicke_inequality(int m, int n);

struct FamilyMember {
  Dims dims;
  std::vector<Ket> kets;
};
// Upsilon0..2, Theta0..5 and Gamma0..13 of the 2 x M x N families, for parameter m.
FamilyMember family_representative(const std::string& name, int m);

struct VerifyItem {
  std::string check;
  bool ok = true;
  std::string detail;
};

struct VerifyOptions {
  std::size_t samples = 200;
  std::uint64_t seed = 7;
  double max_cond = 100.0;
  double slack = 1e-8;
  Exec exec = Exec::Parallel;
};

struct VerifyReport {
  std::string id;
  std::vector<VerifyItem> items;
  bool ok() const;
};

VerifyReport verify_entry(const CatalogEntry& e, const Catalog& cat, const VerifyOptions& opt = {});
json to_json(const VerifyReport& r);

}  // namespace polyent
