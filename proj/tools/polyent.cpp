#include "polyent/api.hpp"
#include "polyent/catalog.hpp"
#include "polyent/error.hpp"
#include "polyent/flow.hpp"
#include "polyent/free_states.hpp"
#include "polyent/io.hpp"
#include "polyent/sic.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace polyent;

namespace {

struct Common {
  std::string state;
  std::string dims;
  bool as_json = false;
};

PureState load_state(const Common& c) {
  Dims d = parse_dims(c.dims);
  return state_from_json(read_json_file(c.state), d);
}

void emit(const json& j) { std::cout << j.dump(2) << '\n'; }

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

std::string fmt(const std::vector<double>& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + ")";
}

std::string fmt(const QVec& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + to_string(v[i]);
  return s + ")";
}

// H-polytope from a bare polytope file, a catalog entry file, or a catalog id.
HPolytope load_hpolytope(const std::string& input, const std::string& id) {
  if (!id.empty()) {
    Catalog cat = Catalog::open_default();
    return cat.polytope(cat.load(id));
  }
  json j = read_json_file(input);
  if (j.contains("ineqs")) return hpolytope_from_json(j);
  CatalogEntry e = entry_from_json(j);
  if (e.generic) {
    HPolytope p = local_constraints(e.dims);
    for (const auto& q : e.inequalities) p.ineqs.push_back(q);
    return p;
  }
  Catalog cat = Catalog::open_default();
  HPolytope p = local_constraints(e.dims);
  if (const CatalogEntry* g = cat.generic_for(e.dims))
    for (const auto& q : g->inequalities) p.ineqs.push_back(q);
  for (const auto& q : e.inequalities) p.ineqs.push_back(q);
  return p;
}

void print_event(const SicEvent& e, const Dims& dims) {
  const json& p = e.payload;
  if (e.kind == "VertexFound") {
    std::cout << "VERTEX FOUND: " << fmt(qvec_from_json(p["vertex"])) << '\n';
  } else if (e.kind == "VertexNotFound") {
    const json& o = p["outcome"];
    std::cout << "VERTEX NOT FOUND: " << fmt(qvec_from_json(p["vertex"])) << '\n';
    std::cout << "CLOSEST POINT: " << fmt(o["final_point"].get<std::vector<double>>()) << '\n';
    if (o.contains("raw")) {
      std::cout << "RAW: " << fmt(o["raw"].get<std::vector<double>>()) << '\n';
      std::cout << "PRETTY: " << o["pretty"].get<std::string>() << '\n';
      if (o["suggested"].is_object())
        std::cout << "SUGGESTED: " << pretty(inequality_from_json(o["suggested"], dims.most()), dims) << '\n';
      else
        std::cout << "SUGGESTED: Unrated\n";
    }
  } else if (e.kind == "InequalityAdded") {
    for (const auto& q : p["inequalities"])
      std::cout << "INEQUALITY ADDED (" << p["provenance"].get<std::string>()
                << "): " << pretty(inequality_from_json(q, dims.most()), dims) << '\n';
  } else if (e.kind == "ConsideredFound") {
    std::cout << "CONSIDERED FOUND: " << fmt(qvec_from_json(p["vertex"])) << '\n';
  } else if (e.kind == "Finished") {
    if (p["status"] == "Done")
      std::cout << "NO MORE VERTICES EXPECTED\n";
    else
      std::cout << "FAILED: " << p.value("reason", "") << " " << p.value("detail", "") << '\n';
  }
}

void print_report(const SicSession& s) {
  std::cout << "STATUS: " << to_string(s.status) << '\n';
  std::cout << "VERTICES (" << s.found.size() << "):\n";
  for (const auto& f : s.found) std::cout << "  " << fmt(f.point) << (f.operator_asserted ? "  [asserted]" : "") << '\n';
  std::cout << "INEQUALITIES:\n";
  for (const auto& q : s.ineqs)
    if (q.provenance != Provenance::Initial)
      std::cout << "  " << pretty(q.ineq, s.dims) << "  [" << to_string(q.provenance) << "]\n";
}

// Operator loop on stdin while the session waits for an inequality.
bool interactive_round(SicSession& s) {
  std::cout << "enter coefficients and offset of c.x + o <= 0, 's' for the suggestion, 'f' to consider found, 'q' to stop\n> "
            << std::flush;
  std::string line;
  while (std::getline(std::cin, line)) {
    try {
      if (line == "q") return false;
      if (line == "f") {
        consider_found(s);
        return true;
      }
      Inequality q;
      if (line == "s") {
        if (!s.last_outcome || !s.last_outcome->suggested) throw Error("Unrated", "no suggestion available");
        q = *s.last_outcome->suggested;
      } else {
        std::istringstream in(line);
        QVec v;
        std::string tok;
        while (in >> tok) v.push_back(parse_rational(tok));
        if (static_cast<int>(v.size()) != s.dims.most() + 1)
          throw Error("MalformedInput", "expected " + std::to_string(s.dims.most() + 1) + " numbers");
        Q off = v.back();
        v.pop_back();
        q = make_inequality(v, off);
      }
      sic_add_inequality(s, q);
      return true;
    } catch (const Error& e) {
      std::cout << e.code() << ": " << e.what() << "\n> " << std::flush;
    }
  }
  return false;
}

ApiServer* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}

int serve(SessionManager& mgr, const std::string& host, int port) {
  ApiServer srv(mgr);
  int bound = srv.bind(host, port);
  if (bound < 0) throw Error("BindFailed", "cannot bind " + host + ":" + std::to_string(port));
  g_server = &srv;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  srv.listen();
  g_server = nullptr;
  mgr.shutdown();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entanglement polytopes: closest points, exact convexity, gradient flow and SIC sessions"};
  app.require_subcommand(1);

  Common eig_c;
  auto* eig = app.add_subcommand("eig", "Local spectra and most-local coordinates of a state");
  eig->add_option("--state", eig_c.state, "state JSON")->required();
  eig->add_option("--dims", eig_c.dims, "local dimensions, e.g. 2,2,3")->required();
  eig->add_flag("--json", eig_c.as_json);

  Common cp_c;
  auto* cp = app.add_subcommand("closest-point", "Exact closest point to the origin for a free state");
  cp->add_option("--state", cp_c.state)->required();
  cp->add_option("--dims", cp_c.dims)->required();
  cp->add_flag("--json", cp_c.as_json);

  Common fl_c;
  std::string fl_target, fl_preset = "default";
  std::uint64_t fl_seed = 0;
  long fl_max_steps = -1;
  bool fl_traj = false;
  auto* fl = app.add_subcommand("flow", "Gradient flow toward a rational target point");
  fl->add_option("--state", fl_c.state)->required();
  fl->add_option("--dims", fl_c.dims)->required();
  fl->add_option("--target", fl_target, "most-local target, e.g. 1/2,1/2,1/2")->required();
  fl->add_option("--seed", fl_seed);
  fl->add_option("--preset", fl_preset)->check(CLI::IsMember({"default", "highdim"}));
  fl->add_option("--max-steps", fl_max_steps);
  fl->add_flag("--trajectory", fl_traj, "include trajectory and telemetry in JSON output");
  fl->add_flag("--json", fl_c.as_json);

  std::string hull_in;
  bool hull_json = false;
  auto* hull = app.add_subcommand("hull", "Facet inequalities of the convex hull of points");
  hull->add_option("--input", hull_in, "V-polytope JSON")->required();
  hull->add_flag("--json", hull_json);

  std::string ve_in, ve_id;
  bool ve_json = false;
  auto* ve = app.add_subcommand("venum", "Exact vertex enumeration");
  auto* ve_opt = ve->add_option("--input", ve_in, "H-polytope or catalog entry JSON");
  ve->add_option("--id", ve_id, "catalog id")->excludes(ve_opt);
  ve->add_flag("--json", ve_json);

  std::string rd_in, rd_id;
  bool rd_json = false;
  auto* rd = app.add_subcommand("reduce", "Remove redundant inequalities");
  auto* rd_opt = rd->add_option("--input", rd_in, "H-polytope or catalog entry JSON");
  rd->add_option("--id", rd_id, "catalog id")->excludes(rd_opt);
  rd->add_flag("--json", rd_json);

  auto* sic = app.add_subcommand("sic", "Semi-interactive polytope computation");
  sic->require_subcommand(1);
  Common sr_c;
  std::string sr_generic, sr_log, sr_preset = "default", sr_policy = "AcceptSuggested", sr_host = "127.0.0.1";
  std::uint64_t sr_seed = 0;
  bool sr_auto = false, sr_serve = false;
  int sr_port = 8471;
  auto* sr = sic->add_subcommand("run", "Run a session");
  sr->add_option("--state", sr_c.state)->required();
  sr->add_option("--dims", sr_c.dims)->required();
  sr->add_option("--generic", sr_generic, "catalog id whose generic system is added first");
  sr->add_flag("--auto", sr_auto, "accept suggested roundings automatically");
  sr->add_option("--policy", sr_policy)->check(CLI::IsMember({"AcceptSuggested", "FailOnUnrated"}));
  sr->add_flag("--serve", sr_serve, "host the session over HTTP instead of running it here");
  sr->add_option("--port", sr_port);
  sr->add_option("--host", sr_host);
  sr->add_option("--seed", sr_seed);
  sr->add_option("--preset", sr_preset)->check(CLI::IsMember({"default", "highdim"}));
  sr->add_option("--log", sr_log, "event log (JSON lines)");
  sr->add_flag("--json", sr_c.as_json);
  std::string rp_log;
  bool rp_json = false;
  auto* rp = sic->add_subcommand("replay", "Rebuild a session from its event log");
  rp->add_option("--log", rp_log)->required();
  rp->add_flag("--json", rp_json);

  std::string vf_id;
  bool vf_all = false, vf_json = false;
  std::size_t vf_samples = 200;
  auto* vf = app.add_subcommand("verify", "Verify catalog entries");
  auto* vf_id_opt = vf->add_option("--id", vf_id);
  vf->add_flag("--all", vf_all)->excludes(vf_id_opt);
  vf->add_option("--samples", vf_samples);
  vf->add_flag("--json", vf_json);

  int sv_port = 8471;
  std::string sv_host = "127.0.0.1", sv_logdir;
  auto* sv = app.add_subcommand("serve", "Serve SIC sessions over HTTP");
  sv->add_option("--port", sv_port);
  sv->add_option("--host", sv_host);
  sv->add_option("--log-dir", sv_logdir, "persist and resume sessions from event logs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (vf->parsed() && !vf_all && vf_id.empty()) {
    std::cerr << "verify: one of --id or --all is required\n";
    return 2;
  }
  if ((ve->parsed() && ve_in.empty() && ve_id.empty()) || (rd->parsed() && rd_in.empty() && rd_id.empty())) {
    std::cerr << "one of --input or --id is required\n";
    return 2;
  }

  try {
    if (eig->parsed()) {
      PureState psi = normalize(load_state(eig_c));
      Spectrum s = local_spectrum(psi);
      std::vector<double> x = most_local(s);
      if (eig_c.as_json) {
        emit({{"dims", psi.dims.d}, {"spectra", s}, {"most_local", x}});
      } else {
        for (std::size_t i = 0; i < s.size(); ++i) std::cout << "system " << i + 1 << ": " << fmt(s[i]) << '\n';
        std::cout << "most-local: " << fmt(x) << '\n';
      }
    } else if (cp->parsed()) {
      PureState psi = load_state(cp_c);
      ClosestPointSolution sol = solve_closest_point(psi);
      json w = json::object();
      for (std::size_t i = 0; i < sol.kets.size(); ++i) {
        std::string k;
        for (int d : sol.kets[i]) k += std::to_string(d);
        w[k] = to_string(sol.weights[i]);
      }
      if (cp_c.as_json) {
        json j = {{"contains_origin", sol.contains_origin},
                  {"weights", w},
                  {"weights_unique", sol.weights_unique},
                  {"lambda", to_string(sol.lambda)},
                  {"point", to_json(most_local(sol.point))}};
        j["inequality"] = sol.inequality ? to_json(*sol.inequality, psi.dims) : json(nullptr);
        if (sol.inequality) j["pretty"] = pretty(*sol.inequality, psi.dims);
        emit(j);
      } else {
        std::cout << "weights: " << w.dump() << '\n';
        std::cout << "closest point: " << fmt(most_local(sol.point)) << '\n';
        std::cout << (sol.contains_origin ? std::string("ContainsOrigin") : pretty(*sol.inequality, psi.dims)) << '\n';
      }
    } else if (fl->parsed()) {
      PureState psi = load_state(fl_c);
      QVec t;
      std::stringstream ss(fl_target);
      std::string tok;
      while (std::getline(ss, tok, ',')) t.push_back(parse_rational(tok));
      YoungTuple lam = convert_to_lambdas(t, psi.dims);
      FlowOptions o = FlowOptions::preset(fl_preset);
      o.seed = fl_seed;
      if (fl_max_steps >= 0) o.max_steps = fl_max_steps;
      FlowOutcome out = flow(psi, lam, o);
      if (fl_c.as_json) {
        emit(to_json(out, fl_traj));
      } else {
        std::cout << (out.reached ? "REACHED" : "NOT REACHED") << " (" << to_string(out.exit) << ")\n";
        std::cout << "CLOSEST POINT: " << fmt(most_local(out.final_spectrum)) << '\n';
        std::cout << "DISTANCE: " << fmt(out.final_distance) << '\n';
        if (out.inequality) {
          std::cout << "RAW: " << fmt(out.inequality->raw) << '\n';
          std::cout << "PRETTY: " << out.inequality->pretty << '\n';
          std::cout << "SUGGESTED: "
                    << (out.inequality->suggested ? pretty(*out.inequality->suggested, psi.dims) : std::string("Unrated"))
                    << '\n';
        }
      }
    } else if (hull->parsed()) {
      HPolytope h = facet_hull(vpolytope_from_json(read_json_file(hull_in)), Exec::Parallel);
      if (hull_json) {
        emit(to_json(h));
      } else {
        for (const auto& q : h.ineqs) std::cout << pretty(q, h.dims) << '\n';
      }
    } else if (ve->parsed()) {
      VPolytope v = enumerate_vertices(load_hpolytope(ve_in, ve_id), Exec::Parallel);
      if (ve_json) {
        emit(to_json(v));
      } else {
        std::cout << v.verts.size() << " vertices\n";
        for (const auto& x : v.verts) std::cout << fmt(x) << '\n';
      }
    } else if (rd->parsed()) {
      HPolytope h = remove_redundant(load_hpolytope(rd_in, rd_id));
      if (rd_json) {
        emit(to_json(h));
      } else {
        for (const auto& q : h.ineqs) std::cout << pretty(q, h.dims) << '\n';
      }
    } else if (sr->parsed()) {
      PureState psi = load_state(sr_c);
      FlowOptions o = FlowOptions::preset(sr_preset);
      Catalog cat = Catalog::open_default();
      if (sr_serve) {
        SessionManager mgr(&cat);
        json body = {{"state", state_to_json(psi)}, {"dims", psi.dims.d}, {"options", to_json(o)}, {"seed", sr_seed}};
        if (!sr_generic.empty()) body["generic_id"] = sr_generic;
        json s = mgr.create(body);
        std::cout << "session " << s["id"].get<std::string>() << '\n';
        return serve(mgr, sr_host, sr_port);
      }
      Dims dims = psi.dims;
      EventListener listen = [&](const SicEvent& e) {
        if (!sr_log.empty()) append_event(sr_log, e);
        if (!sr_c.as_json) print_event(e, dims);
      };
      if (!sr_log.empty()) write_event_log(sr_log, {});
      SicSession s = sic_start(psi, psi.dims, o, sr_seed, {}, listen);
      if (!sr_generic.empty()) add_generic_inequalities(s, cat, sr_generic);
      int rc = 0;
      if (sr_auto) {
        try {
          sic_run_auto(s, sr_policy == "FailOnUnrated" ? AutoPolicy::FailOnUnrated : AutoPolicy::AcceptSuggested);
        } catch (const Error& e) {
          if (e.code() != "AutoRoundingFailed") throw;
          rc = 1;
        }
      } else {
        while (s.status == SicStatus::Flowing || s.status == SicStatus::AwaitingInequality) {
          if (s.status == SicStatus::Flowing) {
            sic_step(s);
          } else if (!interactive_round(s)) {
            break;
          }
        }
      }
      if (sr_c.as_json)
        emit(sic_report(s));
      else
        print_report(s);
      return rc;
    } else if (rp->parsed()) {
      SicSession s = sic_replay(read_event_log(rp_log));
      if (rp_json)
        emit(sic_report(s));
      else
        print_report(s);
    } else if (vf->parsed()) {
      Catalog cat = Catalog::open_default();
      VerifyOptions vo;
      vo.samples = vf_samples;
      std::vector<const CatalogEntry*> todo;
      if (vf_all)
        todo = cat.list();
      else
        todo.push_back(&cat.load(vf_id));
      bool ok = true;
      json all = json::array();
      for (const auto* e : todo) {
        VerifyReport r = verify_entry(*e, cat, vo);
        ok = ok && r.ok();
        if (vf_json) {
          all.push_back(to_json(r));
          continue;
        }
        std::cout << (r.ok() ? "OK   " : "FAIL ") << r.id << '\n';
        for (const auto& it : r.items)
          if (!it.ok || !vf_all) std::cout << "  " << (it.ok ? "ok   " : "FAIL ") << it.check << ": " << it.detail << '\n';
      }
      if (vf_json) emit(vf_all ? all : all[0]);
      return ok ? 0 : 1;
    } else if (sv->parsed()) {
      Catalog cat = Catalog::open_default();
      SessionManager mgr(&cat, sv_logdir);
      return serve(mgr, sv_host, sv_port);
    }
  } catch (const Error& e) {
    std::cerr << e.code() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
