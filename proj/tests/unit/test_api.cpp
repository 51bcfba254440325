#include "doctest.h"

#include "polyent/api.hpp"
#include "polyent/error.hpp"

// after Eigen: resolv.h defines _res
#include "httplib.h"

#include <filesystem>
#include <sstream>
#include <thread>

using namespace polyent;

namespace {

const Catalog& cat() {
  static Catalog c = Catalog::open_default();
  return c;
}

struct Server {
  SessionManager mgr;
  ApiServer api;
  int port;
  std::thread th;

  explicit Server(std::string log_dir = {}) : mgr(&cat(), std::move(log_dir)), api(mgr), port(api.bind("127.0.0.1", 0)) {
    th = std::thread([this] { api.listen(); });
  }
  ~Server() {
    api.stop();
    th.join();
    mgr.shutdown();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60, 0);
    return c;
  }
};

json w_state() {
  return {{"dims", {2, 2, 2}}, {"terms", {{{"ket", {1, 0, 0}}}, {{"ket", {0, 1, 0}}}, {{"ket", {0, 0, 1}}}}}};
}

json post(httplib::Client& c, const std::string& path, const json& body, int& status) {
  auto r = c.Post(path, body.dump(), "application/json");
  REQUIRE(r);
  status = r->status;
  return json::parse(r->body);
}

json get(httplib::Client& c, const std::string& path, int& status) {
  auto r = c.Get(path);
  REQUIRE(r);
  status = r->status;
  return json::parse(r->body);
}

// seq of every "id:" line in an SSE body
std::vector<long> frame_ids(const std::string& body) {
  std::vector<long> ids;
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("id: ", 0) == 0) ids.push_back(std::stol(line.substr(4)));
  return ids;
}

}  // namespace

TEST_CASE("error codes map to http statuses") {
  CHECK(http_status("UnknownSession") == 404);
  for (const char* c : {"WrongStatus", "CutsFoundVertex", "DoesNotCutTarget", "ViolatesClosestPoint", "StaleSession",
                        "AutoRoundingFailed"})
    CHECK(http_status(c) == 409);
  CHECK(http_status("MalformedInput") == 400);
  CHECK(http_status("DimsMismatch") == 400);
}

TEST_CASE("session endpoints") {
  Server srv;
  REQUIRE(srv.port > 0);
  auto c = srv.client();
  int st = 0;

  json created = post(c, "/sessions", {{"state", w_state()}, {"dims", {2, 2, 2}}, {"generic_id", "222-generic"}}, st);
  CHECK(st == 201);
  CHECK(created["status"] == "Flowing");
  const std::string id = created["id"];

  json all = get(c, "/sessions", st);
  CHECK(st == 200);
  REQUIRE(all.size() == 1);
  CHECK(all[0]["id"] == id);

  json missing = get(c, "/sessions/nope", st);
  CHECK(st == 404);
  CHECK(missing["error"] == "UnknownSession");
  CHECK(missing.contains("message"));

  auto bad = c.Post("/sessions", "{not json", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(json::parse(bad->body)["error"] == "MalformedInput");
  post(c, "/sessions", {{"state", w_state()}, {"dims", {2, 2, 3}}}, st);
  CHECK(st == 400);
  post(c, "/sessions", {{"catalog_id", "no-such"}, {"dims", {2, 2}}}, st);
  CHECK(st == 400);

  json stepped = post(c, "/sessions/" + id + "/step", json::object(), st);
  CHECK(st == 200);
  CHECK(stepped["status"] == "AwaitingInequality");
  json view = get(c, "/sessions/" + id, st);
  REQUIRE(view["last_outcome"].is_object());
  CHECK(view["last_outcome"]["suggested"]["offset"] == "2");

  post(c, "/sessions/" + id + "/step", json::object(), st);
  CHECK(st == 409);
  json guard = post(c, "/sessions/" + id + "/inequality", {{"coeffs", {"-2", "-2", "-2"}}, {"offset", "3"}}, st);
  CHECK(st == 409);
  CHECK(guard["error"] == "DoesNotCutTarget");
  json stale = post(c, "/sessions/" + id + "/inequality",
                    {{"coeffs", {-1, -1, -1}}, {"offset", 2}, {"expected_seq", view["last_seq"].get<long>() - 1}}, st);
  CHECK(st == 409);
  CHECK(stale["error"] == "StaleSession");
  json added = post(c, "/sessions/" + id + "/inequality",
                    {{"coeffs", {-1, -1, -1}}, {"offset", 2}, {"expected_seq", view["last_seq"]}}, st);
  CHECK(st == 200);
  CHECK(added["status"] == "Flowing");
  CHECK(added["counts"]["added"] == 1);

  json done = post(c, "/sessions/" + id + "/auto", {{"policy", "FailOnUnrated"}, {"wait", true}}, st);
  CHECK(st == 200);
  CHECK(done["status"] == "Done");
  json cut = post(c, "/sessions/" + id + "/inequality", {{"coeffs", {-1, -1, -1}}, {"offset", 2}}, st);
  CHECK(st == 409);
  CHECK(cut["error"] == "WrongStatus");
  post(c, "/sessions/" + id + "/auto", {{"policy", "Sometimes"}}, st);
  CHECK(st == 400);

  json report = get(c, "/sessions/" + id, st);
  json direct = srv.mgr.view(id);
  CHECK(report == direct);
  CHECK(report["summary"]["status"] == "Done");
}

TEST_CASE("a cutting inequality is rejected with 409") {
  Server srv;
  auto c = srv.client();
  int st = 0;
  json created = post(c, "/sessions", {{"catalog_id", "222-generic"}, {"dims", {2, 2, 2}}, {"generic_id", "222-generic"}}, st);
  REQUIRE(st == 201);
  const std::string id = created["id"];
  json s = post(c, "/sessions/" + id + "/step", json::object(), st);
  REQUIRE(s["counts"]["found"] == 1);
  json r = post(c, "/sessions/" + id + "/inequality", {{"coeffs", {-1, -1, -1}}, {"offset", 2}}, st);
  CHECK(st == 409);
  CHECK(r["error"] == "CutsFoundVertex");
}

TEST_CASE("event stream replays, resumes and follows") {
  Server srv;
  auto c = srv.client();
  int st = 0;
  json created = post(c, "/sessions", {{"state", w_state()}, {"dims", {2, 2, 2}}, {"generic_id", "222-generic"}}, st);
  const std::string id = created["id"];
  const std::string ev = "/sessions/" + id + "/events";

  // follow the stream while an asynchronous auto run drives the session to the end
  std::string live;
  std::thread reader([&] {
    auto rc = srv.client();
    auto r = rc.Get(ev, [&](const char* data, size_t n) {
      live.append(data, n);
      return true;
    });
    CHECK(r);
  });
  json queued = post(c, "/sessions/" + id + "/auto", {{"policy", "AcceptSuggested"}}, st);
  CHECK(st == 202);
  reader.join();
  json report = get(c, "/sessions/" + id, st);
  CHECK(report["status"] == "Done");
  const long last = report["last_seq"];

  std::vector<long> all;
  for (long i = 1; i <= last; ++i) all.push_back(i);
  CHECK(frame_ids(live) == all);
  auto fin = live.find("data: ", live.rfind("event: Finished"));
  REQUIRE(fin != std::string::npos);
  json finished = json::parse(live.substr(fin + 6, live.find('\n', fin) - fin - 6));
  CHECK(finished["seq"] == last);
  CHECK(finished["payload"]["vertices"] == 4);

  auto backlog = c.Get(ev + "?follow=0");
  REQUIRE(backlog);
  CHECK(backlog->status == 200);
  CHECK(backlog->get_header_value("Content-Type").rfind("text/event-stream", 0) == 0);
  CHECK(frame_ids(backlog->body) == all);

  auto after = c.Get(ev + "?follow=0&after=3");
  REQUIRE(after);
  CHECK(frame_ids(after->body) == std::vector<long>(all.begin() + 3, all.end()));

  auto resumed = c.Get(ev + "?follow=0", httplib::Headers{{"Last-Event-ID", "5"}});
  REQUIRE(resumed);
  CHECK(frame_ids(resumed->body) == std::vector<long>(all.begin() + 5, all.end()));

  // a data line carries the full event
  std::istringstream in(backlog->body);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("data: ", 0) == 0) break;
  json first = json::parse(line.substr(6));
  CHECK(first["seq"] == 1);
  CHECK(first["kind"] == "Started");
  CHECK(first["timestamp"].get<std::string>().back() == 'Z');

  auto missing = c.Get("/sessions/none/events?follow=0");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  auto bad = c.Get(ev + "?after=x");
  REQUIRE(bad);
  CHECK(bad->status == 400);
}

TEST_CASE("sessions persist in the log directory") {
  auto dir = (std::filesystem::temp_directory_path() / "polyent_api_logs").string();
  std::filesystem::remove_all(dir);
  std::string id;
  json before;
  {
    Server srv(dir);
    auto c = srv.client();
    int st = 0;
    json created = post(c, "/sessions", {{"state", w_state()}, {"dims", {2, 2, 2}}, {"generic_id", "222-generic"}}, st);
    id = created["id"];
    post(c, "/sessions/" + id + "/step", json::object(), st);
    before = get(c, "/sessions/" + id, st);
    CHECK(before["status"] == "AwaitingInequality");
  }
  CHECK(std::filesystem::exists(dir + "/" + id + ".jsonl"));
  Server again(dir);
  auto c = again.client();
  int st = 0;
  CHECK(get(c, "/sessions/" + id, st) == before);
  json more = post(c, "/sessions/" + id + "/auto", {{"policy", "FailOnUnrated"}, {"wait", true}}, st);
  CHECK(st == 200);
  CHECK(more["status"] == "Done");
  SicSession replayed = sic_replay(read_event_log(dir + "/" + id + ".jsonl"));
  CHECK(sic_report(replayed)["status"] == "Done");
  CHECK(replayed.last_seq() == more["last_seq"].get<long>());
  std::filesystem::remove_all(dir);
}
