#include "polyent/catalog.hpp"

#include "polyent/error.hpp"
#include "polyent/free_states.hpp"
#include "polyent/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#ifndef POLYENT_SOURCE_CATALOG
#define POLYENT_SOURCE_CATALOG "catalog"
#endif

namespace polyent {

namespace fs = std::filesystem;

namespace {

std::vector<QVec> points_from_json(const json& j) {
  std::vector<QVec> out;
  for (const auto& p : j) out.push_back(qvec_from_json(p));
  return out;
}

json terms_json(const std::vector<Term>& ts) {
  json a = json::array();
  for (const auto& t : ts) a.push_back({{"ket", t.ket}, {"re", t.c.real()}, {"im", t.c.imag()}});
  return a;
}

std::string ket_label(const Ket& k) {
  std::string s;
  for (int x : k) s += std::to_string(x);
  return s;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

std::string point_label(const QVec& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + to_string(v[i]);
  return s + ")";
}

}  // namespace

CatalogEntry entry_from_json(const json& j) {
  CatalogEntry e;
  try {
    e.id = j.at("id").get<std::string>();
    e.dims = dims_from_json(j.at("dims"));
    e.class_name = j.value("class_name", "");
    e.representative = terms_from_json(j.at("representative"));
    e.generic = j.value("generic", false);
    for (const auto& x : j.at("inequalities")) e.inequalities.push_back(inequality_from_json(x, e.dims.most()));
    if (j.contains("closest_point_ineq")) {
      const json& c = j.at("closest_point_ineq");
      ClosestPointRow row;
      if (c.is_string() && c.get<std::string>() == "n/a")
        row.not_applicable = true;
      else
        row.ineq = inequality_from_json(c, e.dims.most());
      if (j.contains("closest_point_corrected"))
        row.corrected = inequality_from_json(j.at("closest_point_corrected"), e.dims.most());
      e.closest_point = row;
    }
    e.source = j.value("source", "");
    e.notes = j.value("notes", "");
    if (j.contains("includes_in")) e.includes_in = j.at("includes_in").get<std::vector<std::string>>();
    if (j.contains("expected_vertices")) e.expected_vertices = points_from_json(j.at("expected_vertices"));
    if (j.contains("listed_vertices")) e.listed_vertices = points_from_json(j.at("listed_vertices"));
    if (j.contains("expected_vertex_count")) e.expected_vertex_count = j.at("expected_vertex_count").get<int>();
    if (j.contains("free_representative")) e.free_representative = terms_from_json(j.at("free_representative"));
    if (j.contains("expected_weights"))
      for (const auto& [k, v] : j.at("expected_weights").items()) e.expected_weights[k] = rational_from_json(v);
    e.duplicate_suspect = j.value("duplicate_suspect", false);
  } catch (const Error& err) {
    if (err.code() == "DimsMismatch") throw Error("MalformedFixture", "fixture " + e.id + ": " + err.what());
    throw Error("MalformedFixture", std::string("fixture ") + e.id + ": " + err.what());
  } catch (const json::exception& err) {
    throw Error("MalformedFixture", std::string("fixture ") + e.id + ": " + err.what());
  }
  for (const auto& t : e.representative)
    if (static_cast<int>(t.ket.size()) != e.dims.n()) throw Error("MalformedFixture", e.id + ": ket length");
  return e;
}

json to_json(const CatalogEntry& e) {
  json j = {{"id", e.id},
            {"dims", e.dims.d},
            {"class_name", e.class_name},
            {"representative", terms_json(e.representative)},
            {"generic", e.generic},
            {"source", e.source}};
  json ineqs = json::array();
  for (const auto& i : e.inequalities) ineqs.push_back(to_json(i));
  j["inequalities"] = ineqs;
  if (e.closest_point) {
    if (e.closest_point->not_applicable)
      j["closest_point_ineq"] = "n/a";
    else
      j["closest_point_ineq"] = to_json(e.closest_point->ineq);
    if (e.closest_point->corrected) j["closest_point_corrected"] = to_json(*e.closest_point->corrected);
  }
  if (!e.notes.empty()) j["notes"] = e.notes;
  if (!e.includes_in.empty()) j["includes_in"] = e.includes_in;
  if (e.expected_vertices) {
    json a = json::array();
    for (const auto& v : *e.expected_vertices) a.push_back(to_json(v));
    j["expected_vertices"] = a;
  }
  if (e.expected_vertex_count) j["expected_vertex_count"] = *e.expected_vertex_count;
  if (e.free_representative) j["free_representative"] = terms_json(*e.free_representative);
  if (e.duplicate_suspect) j["duplicate_suspect"] = true;
  return j;
}

Catalog::Catalog(std::string root) : root_(std::move(root)) {
  if (!fs::is_directory(root_)) throw Error("CatalogNotFound", "no catalog directory at " + root_);
  for (const auto& f : fs::recursive_directory_iterator(root_)) {
    if (!f.is_regular_file() || f.path().extension() != ".json") continue;
    CatalogEntry e = entry_from_json(read_json_file(f.path().string()));
    if (f.path().stem().string() != e.id)
      throw Error("MalformedFixture", f.path().string() + ": file name differs from id " + e.id);
    if (f.path().parent_path().filename().string() != e.dims.compact())
      throw Error("MalformedFixture", f.path().string() + ": directory differs from dims " + e.dims.compact());
    if (entries_.count(e.id)) throw Error("MalformedFixture", "duplicate id " + e.id);
    entries_.emplace(e.id, std::move(e));
  }
}

std::string Catalog::default_root() {
  if (const char* env = std::getenv("POLYENT_CATALOG")) return env;
  return POLYENT_SOURCE_CATALOG;
}

Catalog Catalog::open_default() { return Catalog(default_root()); }

const CatalogEntry& Catalog::load(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw Error("UnknownId", "no catalog entry " + id);
  return it->second;
}

std::vector<const CatalogEntry*> Catalog::list(const std::optional<Dims>& dims) const {
  std::vector<const CatalogEntry*> out;
  for (const auto& [id, e] : entries_)
    if (!dims || e.dims == *dims) out.push_back(&e);
  return out;
}

const CatalogEntry* Catalog::generic_for(const Dims& dims) const {
  for (const auto& [id, e] : entries_)
    if (e.generic && e.dims == dims) return &e;
  return nullptr;
}

HPolytope Catalog::polytope(const CatalogEntry& e) const {
  HPolytope p = local_constraints(e.dims);
  if (const CatalogEntry* g = generic_for(e.dims); g && g != &e)
    p.ineqs.insert(p.ineqs.end(), g->inequalities.begin(), g->inequalities.end());
  p.ineqs.insert(p.ineqs.end(), e.inequalities.begin(), e.inequalities.end());
  std::sort(p.ineqs.begin(), p.ineqs.end());
  p.ineqs.erase(std::unique(p.ineqs.begin(), p.ineqs.end()), p.ineqs.end());
  return p;
}

PureState representative_state(const CatalogEntry& e) { return normalize(from_terms(e.dims, e.representative)); }

PureState closest_point_state(const CatalogEntry& e) {
  return normalize(from_terms(e.dims, e.free_representative ? *e.free_representative : e.representative));
}

PureState dicke_state(int m, int n) {
  if (n < 1 || m < 0 || m > n) throw Error("BadParams", "Dicke state needs 0 <= M <= N");
  Dims dims(std::vector<int>(static_cast<std::size_t>(n), 2));
  PureState psi{dims, CVec::Zero(static_cast<Eigen::Index>(dims.hdim()))};
  for (std::size_t k = 0; k < dims.hdim(); ++k) {
    Ket j = ket_of_index(k, dims);
    if (std::count(j.begin(), j.end(), 1) == m) psi.amp[static_cast<Eigen::Index>(k)] = 1.0;
  }
  return normalize(psi);
}

Inequality dicke_inequality(int m, int n) {
  if (n < 1 || m < 0 || m > n) throw Error("BadParams", "Dicke inequality needs 0 <= M <= N");
  return at_least(std::vector<long>(static_cast<std::size_t>(n), 1), n - m);
}

FamilyMember family_representative(const std::string& name, int m) {
  if (m < 1) throw Error("BadParams", "family parameter must be positive");
  using K = std::vector<Ket>;
  auto cat = [](K a, const K& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  K y0;
  for (int i = 0; i < m; ++i) y0.push_back({0, i, i});
  for (int i = 0; i < m; ++i) y0.push_back({1, i, i + m});
  K y1 = cat({{0, m, 2 * m}}, y0);
  K y2 = cat({{0, m, 2 * m}, {1, m, m - 1}}, y0);
  const Ket ta{1, m + 1, 2 * m + 1}, tb{0, m + 1, 2 * m + 1};
  std::vector<K> th = {cat({ta}, y1),
                       cat({tb}, y1),
                       cat({ta}, y2),
                       cat({tb, {1, m + 1, 2 * m}}, y1),
                       cat({tb, {1, m + 1, 0}}, y2),
                       cat({tb, {1, m + 1, 2 * m}}, y2)};
  const Ket ga{1, m + 2, 2 * m + 2}, gb{0, m + 2, 2 * m + 2};
  std::vector<K> gm = {cat({ga}, th[0]),
                       cat({gb, ga}, th[0]),
                       cat({gb}, th[1]),
                       cat({ga}, th[2]),
                       cat({gb}, th[2]),
                       cat({ga}, th[3]),
                       cat({gb}, th[3]),
                       cat({ga}, th[4]),
                       cat({ga}, th[5]),
                       cat({ga, {0, m + 2, 2 * m + 1}}, th[2]),
                       cat({ga, {1, m + 2, 2 * m + 1}}, th[3]),
                       cat({ga, {0, m + 2, m + 1}}, th[4]),
                       cat({ga, {0, m + 2, m}}, th[5]),
                       cat({gb, {1, m + 2, 2 * m + 1}}, th[5])};

  auto index = [&](const std::string& prefix) {
    try {
      return std::stoi(name.substr(prefix.size()));
    } catch (...) {
      throw Error("BadParams", "unknown family member " + name);
    }
  };
  if (name.rfind("Upsilon", 0) == 0) {
    int i = index("Upsilon");
    if (i < 0 || i > 2) throw Error("BadParams", "unknown family member " + name);
    return {Dims{2, i == 0 ? m : m + 1, i == 0 ? 2 * m : 2 * m + 1}, i == 0 ? y0 : (i == 1 ? y1 : y2)};
  }
  if (name.rfind("Theta", 0) == 0) {
    int i = index("Theta");
    if (i < 0 || i > 5) throw Error("BadParams", "unknown family member " + name);
    return {Dims{2, m + 2, 2 * m + 2}, th[static_cast<std::size_t>(i)]};
  }
  if (name.rfind("Gamma", 0) == 0) {
    int i = index("Gamma");
    if (i < 0 || i > 13) throw Error("BadParams", "unknown family member " + name);
    return {Dims{2, m + 3, 2 * m + 3}, gm[static_cast<std::size_t>(i)]};
  }
  throw Error("BadParams", "unknown family member " + name);
}

bool VerifyReport::ok() const {
  return std::all_of(items.begin(), items.end(), [](const VerifyItem& i) { return i.ok; });
}

VerifyReport verify_entry(const CatalogEntry& e, const Catalog& cat, const VerifyOptions& opt) {
  VerifyReport r{e.id, {}};
  const HPolytope poly = cat.polytope(e);
  const PureState rep = representative_state(e);

  {
    VerifyItem it{"representative", true, ""};
    double s = min_slack(poly, most_local(local_spectrum(rep)));
    it.ok = s >= -1e-10;
    it.detail = "min slack " + std::to_string(s);
    r.items.push_back(it);
  }

  std::optional<VPolytope> verts;
  try {
    verts = enumerate_vertices(poly, opt.exec);
  } catch (const Error& err) {
    r.items.push_back({"vertices", false, err.code() + ": " + err.what()});
  }

  if (verts) {
    if (e.expected_vertices) {
      bool same = same_vertex_set(verts->verts, *e.expected_vertices);
      r.items.push_back({"vertices", same,
                         std::to_string(verts->verts.size()) + " vertices, expected " +
                             std::to_string(e.expected_vertices->size())});
    }
    if (e.expected_vertex_count) {
      bool ok = static_cast<int>(verts->verts.size()) == *e.expected_vertex_count;
      std::string missing;
      for (const auto& v : e.listed_vertices)
        if (std::find(verts->verts.begin(), verts->verts.end(), v) == verts->verts.end()) {
          ok = false;
          missing += " " + point_label(v);
        }
      r.items.push_back({"vertex_count", ok,
                         std::to_string(verts->verts.size()) + " vertices, expected " +
                             std::to_string(*e.expected_vertex_count) +
                             (missing.empty() ? "" : "; missing" + missing)});
    }
    HPolytope hull = facet_hull(*verts, opt.exec);
    VPolytope back = enumerate_vertices(hull, opt.exec);
    r.items.push_back({"roundtrip", same_vertex_set(back.verts, verts->verts),
                       std::to_string(hull.ineqs.size()) + " facets"});

    for (const auto& pid : e.includes_in) {
      VerifyItem it{"hierarchy", true, "inside " + pid};
      try {
        HPolytope parent = cat.polytope(cat.load(pid));
        for (const auto& v : verts->verts)
          if (!contains(parent, v).inside) {
            it.ok = false;
            it.detail = "vertex " + point_label(v) + " outside " + pid;
            break;
          }
      } catch (const Error& err) {
        it.ok = false;
        it.detail = err.what();
      }
      r.items.push_back(it);
    }
  }

  const std::vector<double> rep_point = most_local(local_spectrum(rep));
  const auto pts = sample_orbit_points(rep, opt.samples, derive_seed(opt.seed, fnv1a(e.id)), opt.max_cond, opt.exec);

  if (e.closest_point || !e.expected_weights.empty()) {
    VerifyItem it{"closest_point", true, ""};
    std::optional<ClosestPointSolution> sol;
    std::string failure;
    try {
      sol = solve_closest_point(closest_point_state(e));
    } catch (const Error& err) {
      failure = err.code();
    }
    auto shown = [&](const ClosestPointSolution& s) {
      return s.inequality ? pretty(*s.inequality, e.dims) : std::string("origin");
    };
    if (e.closest_point && e.closest_point->not_applicable) {
      const CatalogEntry* g = cat.generic_for(e.dims);
      if (!sol) {
        it.detail = "method not applicable (" + failure + ")";
      } else if (sol->contains_origin) {
        it.detail = "contains origin";
      } else if (g) {
        VPolytope gv = enumerate_vertices(cat.polytope(*g), opt.exec);
        HPolytope single{e.dims, {*sol->inequality}};
        it.ok = std::all_of(gv.verts.begin(), gv.verts.end(), [&](const QVec& v) { return contains(single, v).inside; });
        it.detail = "computed " + shown(*sol) + (it.ok ? ", implied by the generic system" : ", cuts the generic polytope");
      } else {
        it.detail = "unverified: table n/a, computed " + shown(*sol);
      }
    } else if (e.closest_point) {
      const ClosestPointRow& row = *e.closest_point;
      if (!sol) {
        it.ok = false;
        it.detail = failure;
      } else if (sol->inequality && *sol->inequality == row.ineq) {
        it.detail = "computed " + shown(*sol);
      } else if (sol->inequality && row.corrected && *sol->inequality == *row.corrected) {
        double worst = -evaluate(row.ineq, rep_point);
        for (const auto& p : pts) worst = std::min(worst, -evaluate(row.ineq, p));
        // the computed point is the closest one when the solved state is an exact X_rho eigenvector
        double defect = eigenvector_defect(sol->state);
        it.ok = worst < -1e-6 || defect < 1e-12;
        std::ostringstream os;
        os << "computed " << shown(*sol) << " (eigenvector defect " << defect << "); printed "
           << pretty(row.ineq, e.dims) << (worst < -1e-6 ? " is violated by the orbit, slack " : " is not refuted, slack ")
           << worst;
        it.detail = os.str();
      } else {
        it.ok = false;
        it.detail = "computed " + shown(*sol) + ", table " + pretty(row.ineq, e.dims);
      }
    }
    if (sol)
      for (const auto& [ket, w] : e.expected_weights) {
        auto pos = std::find_if(sol->kets.begin(), sol->kets.end(), [&](const Ket& k) { return ket_label(k) == ket; });
        if (pos == sol->kets.end() || sol->weights[static_cast<std::size_t>(pos - sol->kets.begin())] != w) {
          it.ok = false;
          it.detail += "; weight mismatch at " + ket;
        }
      }
    r.items.push_back(it);
  }

  {
    HPolytope checked = poly;
    if (e.closest_point && !e.closest_point->not_applicable) checked.ineqs.push_back(e.closest_point->effective());
    auto slacks = batch_min_slack(checked, pts, opt.exec);
    double worst = slacks.empty() ? 0.0 : *std::min_element(slacks.begin(), slacks.end());
    std::ostringstream os;
    os << opt.samples << " samples, worst slack " << worst;
    r.items.push_back({"sampling", worst >= -opt.slack, os.str()});
  }
  return r;
}

json to_json(const VerifyReport& r) {
  json items = json::array();
  for (const auto& i : r.items) items.push_back({{"check", i.check}, {"ok", i.ok}, {"detail", i.detail}});
  return {{"id", r.id}, {"ok", r.ok()}, {"items", items}};
}

}  // namespace polyent
