#include "doctest.h"
#include "gen.hpp"

#include "polyent/catalog.hpp"
#include "polyent/error.hpp"
#include "polyent/kernels.hpp"
#include "polyent/sic.hpp"

#include <cstdio>
#include <filesystem>

using namespace polyent;
using oracle::qv;

namespace {

const Catalog& cat() {
  static Catalog c = Catalog::open_default();
  return c;
}

PureState ket_sum(const Dims& d, std::vector<Ket> kets) {
  std::vector<Term> t;
  for (auto& k : kets) t.push_back({k, {1.0, 0.0}});
  return normalize(from_terms(d, t));
}

PureState ghz() { return ket_sum({2, 2, 2}, {{0, 0, 0}, {1, 1, 1}}); }
PureState w() { return ket_sum({2, 2, 2}, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}); }

std::string code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

SicSession with_generic(const PureState& psi, const std::string& generic, std::uint64_t seed = 1) {
  SicSession s = sic_start(psi, psi.dims, FlowOptions{}, seed);
  add_generic_inequalities(s, cat(), generic);
  return s;
}

std::vector<QVec> found_points(const SicSession& s) {
  std::vector<QVec> v;
  for (const auto& f : s.found) v.push_back(f.point);
  return v;
}

// Session invariants that must hold after every command.
void check_invariants(const SicSession& s) {
  for (const auto& f : s.found) {
    CHECK(std::find(s.expected.begin(), s.expected.end(), f.point) == s.expected.end());
    CHECK(contains(s.polytope(), f.point).inside);
  }
  CHECK(std::is_sorted(s.expected.begin(), s.expected.end()));
  for (std::size_t i = 1; i < s.events.size(); ++i) CHECK(s.events[i].seq == s.events[i - 1].seq + 1);
  if (s.status == SicStatus::AwaitingInequality) CHECK(s.pending.has_value());
}

}  // namespace

TEST_CASE("a session starts from the local box") {
  SicSession s = sic_start(w(), Dims{2, 2, 2}, FlowOptions{}, 3);
  CHECK(s.status == SicStatus::Flowing);
  CHECK(s.expected.size() == 8);
  CHECK(s.events.size() == 1);
  CHECK(s.events[0].kind == "Started");
  CHECK(s.ineqs.size() == 6);
  for (const auto& q : s.ineqs) CHECK(q.provenance == Provenance::Initial);
  CHECK_FALSE(s.id.empty());
  CHECK(new_session_id() != new_session_id());
  PureState zero{Dims{2, 2, 2}, CVec::Zero(8)};
  CHECK(code_of([&] { sic_start(zero, zero.dims, FlowOptions{}, 0); }) == "ZeroState");
  CHECK(code_of([] { sic_start(w(), Dims{2, 2, 3}, FlowOptions{}, 0); }) == "DimsMismatch");
}

TEST_CASE("generic systems shape the expected vertices") {
  PureState w3 = representative_state(cat().load("223-W3"));
  SicSession s = with_generic(w3, "223-W3");
  CHECK(s.expected.size() == 9);
  CHECK(s.ineqs.back().provenance == Provenance::Generic);
  CHECK(s.ineqs.back().source == "223-generic");
  std::vector<QVec> before = s.expected;
  long seq = s.last_seq();
  add_generic_inequalities(s, cat(), "223-generic");
  CHECK(s.expected == before);
  CHECK(s.last_seq() == seq + 1);
  CHECK(s.events.back().payload["inequalities"].empty());
  CHECK(code_of([&] { add_generic_inequalities(s, cat(), "222-generic"); }) == "DimsMismatch");
  check_invariants(s);
}

TEST_CASE("GHZ finds every generic vertex") {
  SicSession s = with_generic(ghz(), "222-generic");
  sic_run_auto(s, AutoPolicy::FailOnUnrated);
  CHECK(s.status == SicStatus::Done);
  CHECK(s.found.size() == 5);
  CHECK(same_vertex_set(found_points(s), enumerate_vertices(cat().polytope(cat().load("222-generic"))).verts));
  CHECK(s.events.back().kind == "Finished");
  CHECK(s.events.back().payload["status"] == "Done");
  check_invariants(s);
  CHECK(code_of([&] { sic_step(s); }) == "WrongStatus");
}

TEST_CASE("W adds its inequality automatically") {
  SicSession s = with_generic(w(), "222-generic");
  sic_run_auto(s, AutoPolicy::FailOnUnrated);
  CHECK(s.status == SicStatus::Done);
  std::vector<Inequality> added;
  for (const auto& q : s.ineqs)
    if (q.provenance == Provenance::Auto) added.push_back(q.ineq);
  REQUIRE(added.size() == 1);
  CHECK(added[0] == at_least({1, 1, 1}, 2));
  CHECK(same_vertex_set(found_points(s), enumerate_vertices(cat().polytope(cat().load("222-W"))).verts));
  check_invariants(s);
}

TEST_CASE("manual rounding is guarded") {
  SicSession s = with_generic(w(), "222-generic");
  SicEvent e = sic_step(s);
  REQUIRE(e.kind == "VertexNotFound");
  CHECK(*s.pending == qv({"1/2", "1/2", "1/2"}));
  CHECK(s.status == SicStatus::AwaitingInequality);
  CHECK(code_of([&] { sic_step(s); }) == "WrongStatus");
  // x1 + x2 + x3 >= 3/2 keeps the origin
  CHECK(code_of([&] { sic_add_inequality(s, make_inequality(qv({"-2", "-2", "-2"}), Q(3))); }) ==
        "DoesNotCutTarget");
  // >= 21/10 is violated by the flow's endpoint near 2/3 each
  CHECK(code_of([&] { sic_add_inequality(s, make_inequality(qv({"-10", "-10", "-10"}), Q(21))); }) ==
        "ViolatesClosestPoint");
  CHECK(code_of([&] { sic_add_inequality(s, at_least({1, 1, 1}, 2), Provenance::Operator, s.last_seq() - 1); }) ==
        "StaleSession");
  CHECK(code_of([&] { sic_add_inequality(s, at_least({1, 1}, 2)); }) == "DimsMismatch");
  CHECK(sic_check_inequality(s, at_least({1, 1, 1}, 2)).empty());
  long seq = s.last_seq();
  sic_add_inequality(s, at_least({1, 1, 1}, 2), Provenance::Operator, seq);
  CHECK(s.status == SicStatus::Flowing);
  CHECK_FALSE(s.pending);
  CHECK(s.events.back().kind == "InequalityAdded");
  CHECK(s.events.back().payload["provenance"] == "operator");
  check_invariants(s);
}

TEST_CASE("inequalities may not cut found vertices") {
  SicSession s = with_generic(ghz(), "222-generic");
  REQUIRE(sic_step(s).kind == "VertexFound");
  CHECK(code_of([&] { sic_add_inequality(s, at_least({1, 1, 1}, 2)); }) == "CutsFoundVertex");
  CHECK(s.status == SicStatus::Flowing);
}

TEST_CASE("operator can consider a vertex found") {
  SicSession s = with_generic(w(), "222-generic");
  CHECK(code_of([&] { consider_found(s); }) == "WrongStatus");
  sic_step(s);
  consider_found(s);
  CHECK(s.status == SicStatus::Flowing);
  REQUIRE(s.found.size() == 1);
  CHECK(s.found[0].operator_asserted);
  json r = sic_report(s);
  CHECK(r["audit"]["operator_asserted"].size() == 1);
  CHECK(r["audit"]["flows_run"] == 1);
  CHECK(s.events.back().kind == "ConsideredFound");
  check_invariants(s);
}

TEST_CASE("W3 under FailOnUnrated ends in a failed session") {
  const auto& e = cat().load("223-W3");
  SicSession s = with_generic(representative_state(e), "223-W3");
  std::string code = code_of([&] { sic_run_auto(s, AutoPolicy::FailOnUnrated); });
  if (s.status == SicStatus::Failed) {
    CHECK(code == "AutoRoundingFailed");
    CHECK(s.events.back().kind == "Finished");
    CHECK(s.events.back().payload["status"] == "Failed");
    CHECK_FALSE(s.events.back().payload["reason"].get<std::string>().empty());
    CHECK_FALSE(s.failure.empty());
    CHECK(code_of([&] { sic_run_auto(s, AutoPolicy::AcceptSuggested); }) == "WrongStatus");
  } else {
    // a clean finish must then agree with the fixture
    CHECK(same_vertex_set(found_points(s), enumerate_vertices(cat().polytope(e)).verts));
  }
}

TEST_CASE("summaries and reports") {
  SicSession s = with_generic(w(), "222-generic");
  sic_run_auto(s, AutoPolicy::AcceptSuggested);
  json sum = session_summary(s);
  CHECK(sum["status"] == "Done");
  CHECK(sum["counts"]["added"] == 1);
  CHECK(sum["counts"]["found"] == s.found.size());
  json r = sic_report(s);
  CHECK(r["vertices_expected"].empty());
  CHECK(r["pending"].is_null());
  CHECK(r["failure"].is_null());
  bool pretty_seen = false;
  for (const auto& q : r["inequalities"]) pretty_seen = pretty_seen || q["pretty"] == "x1,1 + x2,1 + x3,1 >= 2";
  CHECK(pretty_seen);
  CHECK(to_string(SicStatus::AwaitingInequality) == "AwaitingInequality");
  CHECK(sic_status_from_string("Failed") == SicStatus::Failed);
  CHECK(provenance_from_string("auto") == Provenance::Auto);
  CHECK(code_of([] { provenance_from_string("robot"); }) == "MalformedInput");
}

TEST_CASE("event logs replay without flows") {
  std::vector<SicEvent> seen;
  SicSession s = sic_start(w(), Dims{2, 2, 2}, FlowOptions{}, 5, "replay-test",
                           [&](const SicEvent& e) { seen.push_back(e); });
  add_generic_inequalities(s, cat(), "222-generic");
  sic_step(s);
  consider_found(s);
  sic_run_auto(s, AutoPolicy::AcceptSuggested);
  CHECK(seen.size() == s.events.size());
  auto path = (std::filesystem::temp_directory_path() / "polyent_replay_test.jsonl").string();
  write_event_log(path, s.events);
  SicSession back = sic_replay(read_event_log(path));
  CHECK(sic_report(back) == sic_report(s));
  std::remove(path.c_str());
  for (std::size_t n = 1; n < s.events.size(); ++n) {
    SicSession part = sic_replay(std::vector<SicEvent>(s.events.begin(), s.events.begin() + static_cast<long>(n)));
    CHECK(part.last_seq() == static_cast<long>(n));
    check_invariants(part);
  }
  append_event(path, s.events[0]);
  CHECK(read_event_log(path).size() == 1);
  std::remove(path.c_str());
  CHECK(event_from_json(to_json(s.events[2])).payload == s.events[2].payload);
  std::vector<SicEvent> gap = s.events;
  gap.erase(gap.begin() + 1);
  CHECK(code_of([&] { sic_replay(gap); }) == "MalformedInput");
  CHECK(code_of([&] { sic_replay(std::vector<SicEvent>(s.events.begin() + 1, s.events.end())); }) ==
        "MalformedInput");
  CHECK(code_of([] { event_from_json(json{{"seq", "x"}}); }) == "MalformedInput");
  CHECK(code_of([] { read_event_log("/nonexistent/log.jsonl"); }) == "FileNotFound");
}

TEST_CASE("property: auto sessions are sound and end at the true polytope") {
  struct Class {
    const char* id;
    PureState rep;
  };
  std::vector<Class> classes{{"222-generic", ghz()}, {"222-W", w()}};
  for (std::uint64_t trial = 0; trial < 8; ++trial) {
    const Class& c = classes[trial % 2];
    PureState psi = normalize(apply_slocc(random_slocc(Dims{2, 2, 2}, trial + 100, 8.0), c.rep));
    SicSession s = with_generic(psi, "222-generic", trial);
    std::optional<QVec> target;
    s.listener = [&](const SicEvent& e) {
      if (e.kind == "VertexNotFound") target = s.pending;
      if (e.kind != "InequalityAdded" || !target) return;
      // strict progress: the unreached vertex leaves the polytope
      CHECK_FALSE(contains(s.polytope(), *target).inside);
      target.reset();
    };
    sic_run_auto(s, AutoPolicy::FailOnUnrated);
    CAPTURE(trial);
    REQUIRE(s.status == SicStatus::Done);
    check_invariants(s);
    HPolytope truth = cat().polytope(cat().load(c.id));
    CHECK(same_vertex_set(found_points(s), enumerate_vertices(truth).verts));
    auto pts = sample_orbit_points(psi, 40, trial, 30.0);
    for (double sl : batch_min_slack(s.polytope(), pts)) CHECK(sl >= -1e-8);
  }
}
