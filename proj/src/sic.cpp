#include "polyent/sic.hpp"

#include "polyent/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

namespace polyent {

std::string to_string(SicStatus s) {
  switch (s) {
    case SicStatus::Flowing: return "Flowing";
    case SicStatus::AwaitingInequality: return "AwaitingInequality";
    case SicStatus::Done: return "Done";
    case SicStatus::Failed: return "Failed";
  }
  return "Unknown";
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Initial: return "initial";
    case Provenance::Generic: return "generic";
    case Provenance::Operator: return "operator";
    case Provenance::Auto: return "auto";
  }
  return "unknown";
}

SicStatus sic_status_from_string(const std::string& s) {
  for (auto v : {SicStatus::Flowing, SicStatus::AwaitingInequality, SicStatus::Done, SicStatus::Failed})
    if (to_string(v) == s) return v;
  throw Error("MalformedInput", "unknown session status: " + s);
}

Provenance provenance_from_string(const std::string& s) {
  for (auto v : {Provenance::Initial, Provenance::Generic, Provenance::Operator, Provenance::Auto})
    if (to_string(v) == s) return v;
  throw Error("MalformedInput", "unknown provenance: " + s);
}

HPolytope SicSession::polytope() const {
  HPolytope p{dims, {}};
  for (const auto& x : ineqs) p.ineqs.push_back(x.ineq);
  return p;
}

std::string new_session_id() {
  static std::atomic<unsigned> counter{0};
  static const std::uint64_t salt = std::random_device{}();
  std::ostringstream os;
  os << "s" << std::hex << ((salt >> 8) & 0xffffff) << "-" << std::dec << ++counter;
  return os.str();
}

namespace {

std::string now_iso() {
  using namespace std::chrono;
  auto t = system_clock::now();
  std::time_t tt = system_clock::to_time_t(t);
  auto ms = duration_cast<milliseconds>(t.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

json ineqs_to_json(const std::vector<Inequality>& v, const Dims& dims) {
  json a = json::array();
  for (const auto& x : v) a.push_back(to_json(x, dims));
  return a;
}

std::vector<Inequality> ineqs_from_json(const json& a, const Dims& dims) {
  std::vector<Inequality> out;
  for (const auto& x : a) out.push_back(inequality_from_json(x, dims.most()));
  return out;
}

// Event application; shared by live transitions and replay.
const SicEvent& record(SicSession& s, const std::string& kind, json payload, std::string ts = {}) {
  SicEvent e;
  e.seq = s.last_seq() + 1;
  e.kind = kind;
  e.timestamp = ts.empty() ? now_iso() : std::move(ts);
  e.payload = std::move(payload);
  s.events.push_back(std::move(e));
  if (s.listener) s.listener(s.events.back());
  return s.events.back();
}

bool is_found(const SicSession& s, const QVec& v) {
  return std::any_of(s.found.begin(), s.found.end(), [&](const FoundVertex& f) { return f.point == v; });
}

void recompute(SicSession& s) {
  VPolytope vp = enumerate_vertices(s.polytope());
  std::vector<QVec> verts = vp.verts;
  sort_points(verts);
  std::vector<FoundVertex> kept;
  for (const auto& f : s.found)
    if (std::binary_search(verts.begin(), verts.end(), f.point)) kept.push_back(f);
  s.found = std::move(kept);
  s.expected.clear();
  for (const auto& v : verts)
    if (!is_found(s, v)) s.expected.push_back(v);
}

bool add_unique(SicSession& s, const Inequality& q, Provenance p, const std::string& source) {
  for (const auto& x : s.ineqs)
    if (x.ineq == q) return false;
  s.ineqs.push_back({q, p, source});
  return true;
}

std::vector<Inequality> apply_inequalities(SicSession& s, const std::vector<Inequality>& v, Provenance p,
                                           const std::string& source) {
  std::vector<Inequality> added;
  for (const auto& q : v)
    if (add_unique(s, q, p, source)) added.push_back(q);
  recompute(s);
  return added;
}

void finish_if_exhausted(SicSession& s) {
  if (s.status == SicStatus::Flowing && s.expected.empty()) {
    s.status = SicStatus::Done;
    record(s, "Finished", {{"status", "Done"}, {"vertices", s.found.size()}});
  }
}

FlowSummary summarize(const QVec& target, const FlowOutcome& o) {
  FlowSummary f;
  f.target = target;
  f.reached = o.reached;
  f.exit = to_string(o.exit);
  f.final_point = most_local(o.final_spectrum);
  f.final_distance = o.final_distance;
  f.steps_taken = o.steps_taken;
  f.restarts_used = o.restarts_used;
  f.trajectory = o.trajectory;
  f.xi_norms.push_back(o.steps.empty() ? 0.0 : o.steps.front().xi_before);
  for (const auto& st : o.steps)
    if (st.accepted) f.xi_norms.push_back(st.xi_after);
  if (o.inequality) {
    f.raw = o.inequality->raw;
    f.pretty = o.inequality->pretty;
    f.suggested = o.inequality->suggested;
  }
  return f;
}

void require_status(const SicSession& s, std::initializer_list<SicStatus> ok, const char* what) {
  for (auto st : ok)
    if (s.status == st) return;
  throw Error("WrongStatus", std::string(what) + " not allowed in status " + to_string(s.status));
}

}  // namespace

json to_json(const FlowSummary& f, const Dims& dims) {
  json j = {{"target", to_json(f.target)},
            {"reached", f.reached},
            {"exit", f.exit},
            {"final_point", f.final_point},
            {"final_distance", f.final_distance},
            {"steps_taken", f.steps_taken},
            {"restarts_used", f.restarts_used},
            {"trajectory", f.trajectory},
            {"xi_norms", f.xi_norms}};
  if (!f.raw.empty()) {
    j["raw"] = f.raw;
    j["pretty"] = f.pretty;
    j["suggested"] = f.suggested ? to_json(*f.suggested, dims) : json("Unrated");
  }
  return j;
}

FlowSummary flow_summary_from_json(const json& j, const Dims& dims) {
  FlowSummary f;
  f.target = qvec_from_json(j.at("target"));
  f.reached = j.at("reached").get<bool>();
  f.exit = j.at("exit").get<std::string>();
  f.final_point = j.at("final_point").get<std::vector<double>>();
  f.final_distance = j.at("final_distance").get<double>();
  f.steps_taken = j.at("steps_taken").get<long>();
  f.restarts_used = j.at("restarts_used").get<int>();
  f.trajectory = j.at("trajectory").get<std::vector<std::vector<double>>>();
  f.xi_norms = j.at("xi_norms").get<std::vector<double>>();
  if (j.contains("raw")) {
    f.raw = j.at("raw").get<std::vector<double>>();
    f.pretty = j.at("pretty").get<std::string>();
    if (j.at("suggested").is_object()) f.suggested = inequality_from_json(j.at("suggested"), dims.most());
  }
  return f;
}

SicSession sic_start(const PureState& psi, const Dims& dims, const FlowOptions& opts, std::uint64_t seed,
                     std::string id, EventListener listener) {
  if (psi.dims != dims) throw Error("DimsMismatch", "state dims " + psi.dims.label() + " differ from " + dims.label());
  if (norm(psi) < 1e-12) throw Error("ZeroState", "initial state is zero");
  SicSession s;
  s.id = id.empty() ? new_session_id() : std::move(id);
  s.initial_state = normalize(psi);
  s.dims = dims;
  s.coadjoint_seed = seed;
  s.flow_options = opts;
  s.listener = std::move(listener);
  for (const auto& q : local_constraints(dims).ineqs) add_unique(s, q, Provenance::Initial, "local");
  recompute(s);
  record(s, "Started",
         {{"id", s.id},
          {"dims", dims.d},
          {"state", state_to_json(s.initial_state)},
          {"options", to_json(opts)},
          {"seed", seed},
          {"expected", s.expected.size()}});
  return s;
}

void add_generic_inequalities(SicSession& s, const std::vector<Inequality>& v, const std::string& source) {
  require_status(s, {SicStatus::Flowing, SicStatus::AwaitingInequality}, "adding generic inequalities");
  for (const auto& q : v)
    if (static_cast<int>(q.coeffs.size()) != s.dims.most())
      throw Error("DimsMismatch", "generic inequality length differs from D_most");
  std::vector<Inequality> added = apply_inequalities(s, v, Provenance::Generic, source);
  record(s, "InequalityAdded",
         {{"inequalities", ineqs_to_json(added, s.dims)},
          {"provenance", "generic"},
          {"source", source},
          {"expected", s.expected.size()}});
  finish_if_exhausted(s);
}

void add_generic_inequalities(SicSession& s, const Catalog& cat, const std::string& id) {
  const CatalogEntry& e = cat.load(id);
  if (e.dims != s.dims) throw Error("DimsMismatch", "catalog entry " + id + " is " + e.dims.label());
  const CatalogEntry* g = e.generic ? &e : cat.generic_for(e.dims);
  if (!g) throw Error("UnknownId", "no generic system for " + e.dims.label());
  add_generic_inequalities(s, g->inequalities, g->id);
}

SicEvent sic_step(SicSession& s, const FlowSink& sink) {
  require_status(s, {SicStatus::Flowing}, "step");
  if (s.expected.empty()) {
    s.status = SicStatus::Done;
    return record(s, "Finished", {{"status", "Done"}, {"vertices", s.found.size()}});
  }
  QVec v = s.expected.front();
  YoungTuple lam = convert_to_lambdas(v, s.dims);
  FlowOptions o = s.flow_options;
  o.seed = derive_seed(s.coadjoint_seed, static_cast<std::uint64_t>(s.flows_run));
  FlowOutcome out = flow(s.initial_state, lam, o, sink);
  FlowSummary f = summarize(v, out);
  ++s.flows_run;
  s.expected.erase(s.expected.begin());
  json payload = {{"vertex", to_json(v)}, {"outcome", to_json(f, s.dims)}};
  s.last_outcome = f;
  if (f.reached) {
    s.found.push_back({v, false, f.final_distance, s.flow_options.target_precision});
    SicEvent e = record(s, "VertexFound", payload);
    finish_if_exhausted(s);
    return e;
  }
  s.pending = v;
  s.status = SicStatus::AwaitingInequality;
  return record(s, "VertexNotFound", payload);
}

std::string sic_check_inequality(const SicSession& s, const Inequality& q) {
  if (static_cast<int>(q.coeffs.size()) != s.dims.most()) return "DimsMismatch";
  for (const auto& f : s.found)
    if (evaluate(q, f.point) > 0) return "CutsFoundVertex";
  if (s.status == SicStatus::AwaitingInequality && s.pending) {
    if (evaluate(q, *s.pending) <= 0) return "DoesNotCutTarget";
    if (s.last_outcome) {
      double n = 0;
      for (const auto& c : q.coeffs) n += c.get_d() * c.get_d();
      if (evaluate(q, s.last_outcome->final_point) / std::sqrt(n) > 1e-6) return "ViolatesClosestPoint";
    }
  }
  return {};
}

void sic_add_inequality(SicSession& s, const Inequality& q, Provenance prov, std::optional<long> expected_seq) {
  require_status(s, {SicStatus::Flowing, SicStatus::AwaitingInequality}, "adding an inequality");
  if (expected_seq && *expected_seq != s.last_seq())
    throw Error("StaleSession", "session advanced to sequence " + std::to_string(s.last_seq()));
  std::string guard = sic_check_inequality(s, q);
  if (!guard.empty()) {
    std::string msg = guard == "CutsFoundVertex"        ? "inequality excludes an already found vertex"
                      : guard == "DoesNotCutTarget"     ? "inequality does not exclude the unfound vertex"
                      : guard == "ViolatesClosestPoint" ? "inequality is violated by the flow's closest point"
                                                        : "inequality length differs from D_most";
    throw Error(guard, msg);
  }
  apply_inequalities(s, {q}, prov, to_string(prov));
  s.pending.reset();
  s.status = SicStatus::Flowing;
  record(s, "InequalityAdded",
         {{"inequalities", ineqs_to_json({q}, s.dims)},
          {"provenance", to_string(prov)},
          {"source", to_string(prov)},
          {"expected", s.expected.size()}});
  finish_if_exhausted(s);
}

void consider_found(SicSession& s) {
  require_status(s, {SicStatus::AwaitingInequality}, "consider-found");
  QVec v = *s.pending;
  s.found.push_back({v, true, s.last_outcome ? s.last_outcome->final_distance : 0.0, s.flow_options.target_precision});
  s.pending.reset();
  s.status = SicStatus::Flowing;
  record(s, "ConsideredFound", {{"vertex", to_json(v)}});
  finish_if_exhausted(s);
}

void sic_run_auto(SicSession& s, AutoPolicy policy, const FlowSink& sink) {
  require_status(s, {SicStatus::Flowing, SicStatus::AwaitingInequality}, "auto run");
  auto fail = [&](const std::string& reason, const std::string& detail) {
    s.status = SicStatus::Failed;
    s.failure = reason + ": " + detail;
    record(s, "Finished", {{"status", "Failed"}, {"reason", reason}, {"detail", detail}});
    throw Error("AutoRoundingFailed", s.failure);
  };
  while (true) {
    if (s.status == SicStatus::Done) return;
    if (s.status == SicStatus::Flowing) {
      sic_step(s, sink);
      continue;
    }
    const FlowSummary& f = *s.last_outcome;
    if (!f.suggested) {
      if (policy == AutoPolicy::AcceptSuggested) return;
      fail("Unrated", "no small-integer rounding of " + f.pretty);
    }
    Inequality q = *f.suggested;
    std::string guard = sic_check_inequality(s, q);
    if (!guard.empty()) fail(guard, "suggested " + pretty(q, s.dims) + " rejected");
    sic_add_inequality(s, q, Provenance::Auto);
  }
}

json sic_report(const SicSession& s) {
  json found = json::array(), expected = json::array(), ineqs = json::array(), asserted = json::array();
  for (const auto& f : s.found) {
    found.push_back({{"point", to_json(f.point)},
                     {"operator_asserted", f.operator_asserted},
                     {"distance", f.distance},
                     {"target_precision", f.target_precision}});
    if (f.operator_asserted) asserted.push_back(to_json(f.point));
  }
  for (const auto& v : s.expected) expected.push_back(to_json(v));
  for (const auto& q : s.ineqs) {
    json j = to_json(q.ineq, s.dims);
    j["provenance"] = to_string(q.provenance);
    j["source"] = q.source;
    j["pretty"] = pretty(q.ineq, s.dims);
    ineqs.push_back(j);
  }
  json r = {{"id", s.id},
            {"dims", s.dims.d},
            {"status", to_string(s.status)},
            {"state", state_to_json(s.initial_state)},
            {"seed", s.coadjoint_seed},
            {"options", to_json(s.flow_options)},
            {"vertices_found", found},
            {"vertices_expected", expected},
            {"inequalities", ineqs},
            {"audit", {{"operator_asserted", asserted}, {"flows_run", s.flows_run}}},
            {"last_seq", s.last_seq()}};
  r["pending"] = s.pending ? to_json(*s.pending) : json(nullptr);
  r["last_outcome"] = s.last_outcome ? to_json(*s.last_outcome, s.dims) : json(nullptr);
  r["failure"] = s.failure.empty() ? json(nullptr) : json(s.failure);
  return r;
}

json session_summary(const SicSession& s) {
  std::size_t added = 0;
  for (const auto& q : s.ineqs)
    if (q.provenance == Provenance::Operator || q.provenance == Provenance::Auto) ++added;
  return {{"id", s.id},
          {"dims", s.dims.d},
          {"status", to_string(s.status)},
          {"counts",
           {{"expected", s.expected.size()},
            {"found", s.found.size()},
            {"inequalities", s.ineqs.size()},
            {"added", added}}},
          {"last_seq", s.last_seq()}};
}

json to_json(const SicEvent& e) {
  return {{"seq", e.seq}, {"kind", e.kind}, {"timestamp", e.timestamp}, {"payload", e.payload}};
}

SicEvent event_from_json(const json& j) {
  try {
    SicEvent e;
    e.seq = j.at("seq").get<long>();
    e.kind = j.at("kind").get<std::string>();
    e.timestamp = j.at("timestamp").get<std::string>();
    e.payload = j.at("payload");
    return e;
  } catch (const json::exception& x) {
    throw Error("MalformedInput", std::string("event: ") + x.what());
  }
}

SicSession sic_replay(const std::vector<SicEvent>& events) {
  if (events.empty() || events.front().kind != "Started") throw Error("MalformedInput", "event log must begin with Started");
  SicSession s;
  try {
    for (const auto& e : events) {
      if (e.seq != s.last_seq() + 1) throw Error("MalformedInput", "event sequence has a gap at " + std::to_string(e.seq));
      const json& p = e.payload;
      if (e.kind == "Started") {
        if (!s.events.empty()) throw Error("MalformedInput", "Started repeated");
        s.id = p.at("id").get<std::string>();
        s.dims = dims_from_json(p.at("dims"));
        s.initial_state = state_from_json(p.at("state"), s.dims);
        s.flow_options = flow_options_from_json(p.at("options"));
        s.coadjoint_seed = p.at("seed").get<std::uint64_t>();
        for (const auto& q : local_constraints(s.dims).ineqs) add_unique(s, q, Provenance::Initial, "local");
        recompute(s);
      } else if (e.kind == "InequalityAdded") {
        apply_inequalities(s, ineqs_from_json(p.at("inequalities"), s.dims),
                           provenance_from_string(p.at("provenance").get<std::string>()),
                           p.at("source").get<std::string>());
        if (s.status == SicStatus::AwaitingInequality) {
          s.pending.reset();
          s.status = SicStatus::Flowing;
        }
      } else if (e.kind == "VertexFound" || e.kind == "VertexNotFound") {
        QVec v = qvec_from_json(p.at("vertex"));
        FlowSummary f = flow_summary_from_json(p.at("outcome"), s.dims);
        auto it = std::find(s.expected.begin(), s.expected.end(), v);
        if (it == s.expected.end()) throw Error("MalformedInput", "event targets a vertex that is not expected");
        s.expected.erase(it);
        ++s.flows_run;
        s.last_outcome = f;
        if (e.kind == "VertexFound") {
          s.found.push_back({v, false, f.final_distance, s.flow_options.target_precision});
        } else {
          s.pending = v;
          s.status = SicStatus::AwaitingInequality;
        }
      } else if (e.kind == "ConsideredFound") {
        QVec v = qvec_from_json(p.at("vertex"));
        if (!s.pending || *s.pending != v) throw Error("MalformedInput", "ConsideredFound without a pending vertex");
        s.found.push_back({v, true, s.last_outcome ? s.last_outcome->final_distance : 0.0, s.flow_options.target_precision});
        s.pending.reset();
        s.status = SicStatus::Flowing;
      } else if (e.kind == "Finished") {
        s.status = sic_status_from_string(p.at("status").get<std::string>());
        if (s.status == SicStatus::Failed)
          s.failure = p.at("reason").get<std::string>() + ": " + p.at("detail").get<std::string>();
      } else {
        throw Error("MalformedInput", "unknown event kind " + e.kind);
      }
      s.events.push_back(e);
    }
  } catch (const json::exception& x) {
    throw Error("MalformedInput", std::string("event payload: ") + x.what());
  }
  return s;
}

std::vector<SicEvent> read_event_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("FileNotFound", "cannot open " + path);
  std::vector<SicEvent> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(event_from_json(json::parse(line)));
    } catch (const json::parse_error& x) {
      throw Error("MalformedInput", path + ": " + x.what());
    }
  }
  return out;
}

void write_event_log(const std::string& path, const std::vector<SicEvent>& events) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("FileNotFound", "cannot write " + path);
  for (const auto& e : events) out << to_json(e).dump() << '\n';
}

void append_event(const std::string& path, const SicEvent& e) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("FileNotFound", "cannot write " + path);
  out << to_json(e).dump() << '\n';
}

}  // namespace polyent
