#pragma once

#include "polyent/catalog.hpp"
#include "polyent/sic.hpp"

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace polyent {

// HTTP status for a domain error code.
int http_status(const std::string& code);

// Owns sessions; every mutation of one session runs on that session's worker thread, in submission order.
class SessionManager {
 public:
  // With a log directory, each session appends its events to <dir>/<id>.jsonl and existing logs are replayed.
  explicit SessionManager(const Catalog* catalog = nullptr, std::string log_dir = {});
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  // {state | catalog_id, dims, options?, generic_id?, seed?}
  json create(const json& body);
  json list() const;
  json view(const std::string& id) const;
  json summary(const std::string& id) const;
  json step(const std::string& id);
  // Returns once queued unless wait is set.
  json run_auto(const std::string& id, AutoPolicy policy, bool wait);
  json consider(const std::string& id);
  // {coeffs, offset, expected_seq?}
  json add_inequality(const std::string& id, const json& body);

  // Events with seq > after; blocks up to timeout_ms for at least one when none are pending.
  std::vector<SicEvent> events_after(const std::string& id, long after, int timeout_ms) const;
  bool terminal(const std::string& id) const;
  // Latest flow telemetry of a running step; version increments per update.
  std::pair<long, json> progress(const std::string& id) const;
  void shutdown();

 private:
  struct Entry;
  std::shared_ptr<Entry> find(const std::string& id) const;
  json submit(const std::shared_ptr<Entry>& e, std::function<json(SicSession&)> fn, bool wait);
  std::shared_ptr<Entry> adopt(SicSession s);

  const Catalog* catalog_;
  std::string log_dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

class ApiServer {
 public:
  explicit ApiServer(SessionManager& mgr);
  ~ApiServer();
  // port 0 picks a free port; returns the bound port or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  SessionManager& mgr_;
  std::unique_ptr<httplib::Server> svr_;
};

}  // namespace polyent
