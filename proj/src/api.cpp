#include "polyent/api.hpp"

#include "polyent/error.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <filesystem>

namespace polyent {

int http_status(const std::string& code) {
  if (code == "UnknownSession") return 404;
  if (code == "WrongStatus" || code == "CutsFoundVertex" || code == "DoesNotCutTarget" ||
      code == "ViolatesClosestPoint" || code == "StaleSession" || code == "AutoRoundingFailed")
    return 409;
  return 400;
}

struct SessionManager::Entry {
  // session state; held for the duration of one command
  mutable std::mutex state_mu;
  SicSession session;

  // published copies for readers that must not wait on a running command
  mutable std::mutex pub_mu;
  mutable std::condition_variable pub_cv;
  std::vector<SicEvent> published;
  SicStatus status = SicStatus::Flowing;
  long progress_version = 0;
  json progress;

  std::mutex q_mu;
  std::condition_variable q_cv;
  std::deque<std::function<void()>> jobs;
  std::atomic<bool> stopping{false};
  std::thread worker;

  void run() {
    while (true) {
      std::function<void()> job;
      {
        std::unique_lock lk(q_mu);
        q_cv.wait(lk, [&] { return stopping || !jobs.empty(); });
        if (jobs.empty()) return;
        job = std::move(jobs.front());
        jobs.pop_front();
      }
      job();
    }
  }

  void stop() {
    {
      std::lock_guard lk(q_mu);
      stopping = true;
    }
    q_cv.notify_all();
    pub_cv.notify_all();
    if (worker.joinable()) worker.join();
  }
};

SessionManager::SessionManager(const Catalog* catalog, std::string log_dir)
    : catalog_(catalog), log_dir_(std::move(log_dir)) {
  if (log_dir_.empty()) return;
  namespace fs = std::filesystem;
  fs::create_directories(log_dir_);
  for (const auto& f : fs::directory_iterator(log_dir_)) {
    if (f.path().extension() != ".jsonl") continue;
    SicSession s = sic_replay(read_event_log(f.path().string()));
    adopt(std::move(s));
  }
}

SessionManager::~SessionManager() { shutdown(); }

void SessionManager::shutdown() {
  std::map<std::string, std::shared_ptr<Entry>> all;
  {
    std::lock_guard lk(mu_);
    all = sessions_;
  }
  for (auto& [id, e] : all) e->stop();
}

std::shared_ptr<SessionManager::Entry> SessionManager::adopt(SicSession s) {
  auto e = std::make_shared<Entry>();
  e->published = s.events;
  e->status = s.status;
  const std::string id = s.id;
  const std::string path = log_dir_.empty() ? std::string() : log_dir_ + "/" + id + ".jsonl";
  Entry* raw = e.get();
  s.listener = [raw, path](const SicEvent& ev) {
    if (!path.empty()) append_event(path, ev);
    std::lock_guard lk(raw->pub_mu);
    raw->published.push_back(ev);
    raw->pub_cv.notify_all();
  };
  e->session = std::move(s);
  e->worker = std::thread([raw] { raw->run(); });
  std::lock_guard lk(mu_);
  if (sessions_.count(id)) {
    e->stop();
    throw Error("MalformedInput", "duplicate session id " + id);
  }
  sessions_[id] = e;
  return e;
}

std::shared_ptr<SessionManager::Entry> SessionManager::find(const std::string& id) const {
  std::lock_guard lk(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error("UnknownSession", "no session " + id);
  return it->second;
}

json SessionManager::submit(const std::shared_ptr<Entry>& e, std::function<json(SicSession&)> fn, bool wait) {
  auto task = std::make_shared<std::packaged_task<json()>>([e, fn = std::move(fn)] {
    json out;
    {
      std::lock_guard lk(e->state_mu);
      try {
        out = fn(e->session);
      } catch (...) {
        std::lock_guard pk(e->pub_mu);
        e->status = e->session.status;
        e->pub_cv.notify_all();
        throw;
      }
      out = out.is_null() ? session_summary(e->session) : out;
    }
    std::lock_guard pk(e->pub_mu);
    e->status = e->session.status;
    e->pub_cv.notify_all();
    return out;
  });
  std::future<json> fut = task->get_future();
  {
    std::lock_guard lk(e->q_mu);
    if (e->stopping) throw Error("WrongStatus", "server is shutting down");
    e->jobs.push_back([task] { (*task)(); });
  }
  e->q_cv.notify_one();
  if (!wait) return nullptr;
  return fut.get();
}

json SessionManager::create(const json& body) {
  if (!body.is_object()) throw Error("MalformedInput", "request body must be an object");
  if (!body.contains("dims")) throw Error("MalformedInput", "missing dims");
  Dims dims = dims_from_json(body.at("dims"));
  PureState psi;
  if (body.contains("state")) {
    psi = state_from_json(body.at("state"), dims);
  } else if (body.contains("catalog_id")) {
    if (!catalog_) throw Error("UnknownId", "no catalog loaded");
    const CatalogEntry& ce = catalog_->load(body.at("catalog_id").get<std::string>());
    if (ce.dims != dims) throw Error("DimsMismatch", "catalog entry is " + ce.dims.label());
    psi = representative_state(ce);
  } else {
    throw Error("MalformedInput", "missing state");
  }
  FlowOptions opts = flow_options_from_json(body.value("options", json(nullptr)));
  std::uint64_t seed = 0;
  if (body.contains("seed")) {
    if (!body["seed"].is_number_unsigned()) throw Error("MalformedInput", "seed must be a non-negative integer");
    seed = body["seed"].get<std::uint64_t>();
  }
  SicSession s = sic_start(psi, dims, opts, seed);
  if (body.contains("generic_id") && !body["generic_id"].is_null()) {
    if (!catalog_) throw Error("UnknownId", "no catalog loaded");
    add_generic_inequalities(s, *catalog_, body["generic_id"].get<std::string>());
  }
  std::vector<SicEvent> initial = s.events;
  auto e = adopt(std::move(s));
  if (!log_dir_.empty()) write_event_log(log_dir_ + "/" + e->session.id + ".jsonl", initial);
  std::lock_guard lk(e->state_mu);
  return session_summary(e->session);
}

json SessionManager::list() const {
  std::map<std::string, std::shared_ptr<Entry>> all;
  {
    std::lock_guard lk(mu_);
    all = sessions_;
  }
  json a = json::array();
  for (const auto& [id, e] : all) {
    std::lock_guard lk(e->state_mu);
    a.push_back(session_summary(e->session));
  }
  return a;
}

json SessionManager::view(const std::string& id) const {
  auto e = find(id);
  std::lock_guard lk(e->state_mu);
  json r = sic_report(e->session);
  r["summary"] = session_summary(e->session);
  return r;
}

json SessionManager::summary(const std::string& id) const {
  auto e = find(id);
  std::lock_guard lk(e->state_mu);
  return session_summary(e->session);
}

json SessionManager::step(const std::string& id) {
  auto e = find(id);
  Entry* raw = e.get();
  return submit(
      e,
      [raw](SicSession& s) {
        sic_step(s, [raw](const FlowStep& st) {
          std::lock_guard lk(raw->pub_mu);
          ++raw->progress_version;
          raw->progress = {{"trial", st.trial}, {"xi", st.xi_after}, {"distance", st.distance}, {"accepted", st.accepted}};
          raw->pub_cv.notify_all();
        });
        return json(nullptr);
      },
      true);
}

json SessionManager::run_auto(const std::string& id, AutoPolicy policy, bool wait) {
  auto e = find(id);
  {
    std::lock_guard lk(e->pub_mu);
    if (e->status == SicStatus::Done || e->status == SicStatus::Failed)
      throw Error("WrongStatus", "auto run not allowed in status " + to_string(e->status));
  }
  Entry* raw = e.get();
  json r = submit(
      e,
      [raw, policy](SicSession& s) {
        sic_run_auto(s, policy, [raw](const FlowStep& st) {
          if (!st.accepted) return;
          std::lock_guard lk(raw->pub_mu);
          ++raw->progress_version;
          raw->progress = {{"trial", st.trial}, {"xi", st.xi_after}, {"distance", st.distance}};
          raw->pub_cv.notify_all();
        });
        return json(nullptr);
      },
      wait);
  return wait ? r : summary(id);
}

json SessionManager::consider(const std::string& id) {
  return submit(
      find(id),
      [](SicSession& s) {
        consider_found(s);
        return json(nullptr);
      },
      true);
}

json SessionManager::add_inequality(const std::string& id, const json& body) {
  auto e = find(id);
  if (!body.is_object()) throw Error("MalformedInput", "request body must be an object");
  std::optional<long> expected_seq;
  if (body.contains("expected_seq") && !body["expected_seq"].is_null()) {
    if (!body["expected_seq"].is_number_integer()) throw Error("MalformedInput", "expected_seq must be an integer");
    expected_seq = body["expected_seq"].get<long>();
  }
  return submit(
      e,
      [body, expected_seq](SicSession& s) {
        Inequality q = inequality_from_json(body, s.dims.most());
        sic_add_inequality(s, q, Provenance::Operator, expected_seq);
        return json(nullptr);
      },
      true);
}

std::vector<SicEvent> SessionManager::events_after(const std::string& id, long after, int timeout_ms) const {
  auto e = find(id);
  std::unique_lock lk(e->pub_mu);
  auto ready = [&] { return (!e->published.empty() && e->published.back().seq > after) || e->stopping; };
  if (timeout_ms > 0) e->pub_cv.wait_for(lk, std::chrono::milliseconds(timeout_ms), ready);
  std::vector<SicEvent> out;
  for (const auto& ev : e->published)
    if (ev.seq > after) out.push_back(ev);
  return out;
}

bool SessionManager::terminal(const std::string& id) const {
  auto e = find(id);
  std::lock_guard lk(e->pub_mu);
  return e->status == SicStatus::Done || e->status == SicStatus::Failed || e->stopping;
}

std::pair<long, json> SessionManager::progress(const std::string& id) const {
  auto e = find(id);
  std::lock_guard lk(e->pub_mu);
  return {e->progress_version, e->progress};
}

namespace {

void send_json(httplib::Response& res, int status, const json& j) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error("MalformedInput", std::string("request body: ") + e.what());
  }
}

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_json(res, http_status(e.code()), {{"error", e.code()}, {"message", e.what()}});
    } catch (const json::exception& e) {
      send_json(res, 400, {{"error", "MalformedInput"}, {"message", e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", "Internal"}, {"message", e.what()}});
    }
  };
}

std::string sse_frame(const SicEvent& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.kind + "\ndata: " + to_json(e).dump() + "\n\n";
}

}  // namespace

ApiServer::ApiServer(SessionManager& mgr) : mgr_(mgr), svr_(std::make_unique<httplib::Server>()) {
  auto& s = *svr_;
  SessionManager* m = &mgr_;

  s.Post("/sessions", guarded([m](const httplib::Request& req, httplib::Response& res) {
           send_json(res, 201, m->create(parse_body(req)));
         }));
  s.Get("/sessions", guarded([m](const httplib::Request&, httplib::Response& res) { send_json(res, 200, m->list()); }));
  s.Get(R"(/sessions/([^/]+))", guarded([m](const httplib::Request& req, httplib::Response& res) {
          send_json(res, 200, m->view(req.matches[1]));
        }));
  s.Post(R"(/sessions/([^/]+)/step)", guarded([m](const httplib::Request& req, httplib::Response& res) {
           send_json(res, 200, m->step(req.matches[1]));
         }));
  s.Post(R"(/sessions/([^/]+)/auto)", guarded([m](const httplib::Request& req, httplib::Response& res) {
           json b = parse_body(req);
           std::string pol = b.value("policy", std::string("AcceptSuggested"));
           AutoPolicy p;
           if (pol == "AcceptSuggested")
             p = AutoPolicy::AcceptSuggested;
           else if (pol == "FailOnUnrated")
             p = AutoPolicy::FailOnUnrated;
           else
             throw Error("MalformedInput", "unknown policy " + pol);
           bool wait = b.value("wait", false);
           json out = m->run_auto(req.matches[1], p, wait);
           send_json(res, wait ? 200 : 202, out);
         }));
  s.Post(R"(/sessions/([^/]+)/consider-found)", guarded([m](const httplib::Request& req, httplib::Response& res) {
           send_json(res, 200, m->consider(req.matches[1]));
         }));
  s.Post(R"(/sessions/([^/]+)/inequality)", guarded([m](const httplib::Request& req, httplib::Response& res) {
           send_json(res, 200, m->add_inequality(req.matches[1], parse_body(req)));
         }));
  s.Get(R"(/sessions/([^/]+)/events)", guarded([m](const httplib::Request& req, httplib::Response& res) {
          const std::string id = req.matches[1];
          long after = 0;
          try {
            if (req.has_header("Last-Event-ID")) after = std::stol(req.get_header_value("Last-Event-ID"));
            if (req.has_param("after")) after = std::stol(req.get_param_value("after"));
          } catch (const std::exception&) {
            throw Error("MalformedInput", "after must be an integer");
          }
          const bool follow = !req.has_param("follow") || req.get_param_value("follow") != "0";
          m->summary(id);
          res.set_header("Cache-Control", "no-cache");
          auto last = std::make_shared<long>(after);
          auto seen_progress = std::make_shared<long>(m->progress(id).first);
          auto idle = std::make_shared<int>(0);
          res.set_chunked_content_provider(
              "text/event-stream", [m, id, follow, last, seen_progress, idle](size_t, httplib::DataSink& sink) {
                try {
                  auto evs = m->events_after(id, *last, follow ? 250 : 0);
                  // progress describes the flow behind the events of this poll, so it goes first
                  auto [pv, pj] = m->progress(id);
                  if (follow && pv != *seen_progress) {
                    *seen_progress = pv;
                    std::string f = "event: progress\ndata: " + pj.dump() + "\n\n";
                    if (!sink.write(f.data(), f.size())) return false;
                  }
                  for (const auto& e : evs) {
                    std::string f = sse_frame(e);
                    if (!sink.write(f.data(), f.size())) return false;
                    *last = e.seq;
                  }
                  if (!follow || (m->terminal(id) && m->events_after(id, *last, 0).empty())) {
                    sink.done();
                    return true;
                  }
                  if (evs.empty() && ++*idle % 60 == 0) {
                    static const std::string beat = ": keep-alive\n\n";
                    if (!sink.write(beat.data(), beat.size())) return false;
                  }
                  return sink.is_writable();
                } catch (const Error&) {
                  sink.done();
                  return true;
                }
              });
        }));
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return svr_->bind_to_any_port(host);
  return svr_->bind_to_port(host, port) ? port : -1;
}

void ApiServer::listen() { svr_->listen_after_bind(); }

void ApiServer::stop() {
  if (svr_ && svr_->is_running()) svr_->stop();
}

}  // namespace polyent
