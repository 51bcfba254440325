#pragma once

#include "polyent/catalog.hpp"
#include "polyent/convexity.hpp"
#include "polyent/flow.hpp"
#include "polyent/io.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace polyent {

enum class SicStatus { Flowing, AwaitingInequality, Done, Failed };
enum class Provenance { Initial, Generic, Operator, Auto };
enum class AutoPolicy { AcceptSuggested, FailOnUnrated };

std::string to_string(SicStatus s);
std::string to_string(Provenance p);
SicStatus sic_status_from_string(const std::string& s);
Provenance provenance_from_string(const std::string& s);

struct SicInequality {
  Inequality ineq;
  Provenance provenance = Provenance::Initial;
  std::string source;
};

struct FoundVertex {
  QVec point;
  bool operator_asserted = false;
  double distance = 0;
  double target_precision = 0;
};

// What a session keeps of a flow; serializable, so replay needs no re-run.
struct FlowSummary {
  QVec target;
  bool reached = false;
  std::string exit;
  std::vector<double> final_point;
  double final_distance = 0;
  long steps_taken = 0;
  int restarts_used = 0;
  std::vector<std::vector<double>> trajectory;
  std::vector<double> xi_norms;
  std::vector<double> raw;
  std::string pretty;
  std::optional<Inequality> suggested;
};

struct SicEvent {
  long seq = 0;
  std::string kind;
  std::string timestamp;
  json payload;
};

using EventListener = std::function<void(const SicEvent&)>;

struct SicSession {
  std::string id;
  PureState initial_state;
  Dims dims;
  std::uint64_t coadjoint_seed = 0;
  FlowOptions flow_options;
  std::vector<SicInequality> ineqs;
  // lexicographically sorted
  std::vector<QVec> expected;
  std::vector<FoundVertex> found;
  // the vertex whose flow failed, while AwaitingInequality
  std::optional<QVec> pending;
  SicStatus status = SicStatus::Flowing;
  std::optional<FlowSummary> last_outcome;
  std::string failure;
  long flows_run = 0;
  std::vector<SicEvent> events;
  // Not part of the state; called after every appended event.
  EventListener listener;

  HPolytope polytope() const;
  long last_seq() const { return events.empty() ? 0 : events.back().seq; }
};

std::string new_session_id();

SicSession sic_start(const PureState& psi, const Dims& dims, const FlowOptions& opts, std::uint64_t seed,
                     std::string id = {}, EventListener listener = {});
void add_generic_inequalities(SicSession& s, const std::vector<Inequality>& ineqs, const std::string& source);
// The generic system of a catalog entry: its own inequalities when generic, else the generic entry of its dims.
void add_generic_inequalities(SicSession& s, const Catalog& cat, const std::string& id);
SicEvent sic_step(SicSession& s, const FlowSink& sink = {});
void sic_add_inequality(SicSession& s, const Inequality& ineq, Provenance prov = Provenance::Operator,
                        std::optional<long> expected_seq = std::nullopt);
// Guard evaluation without mutation; returns the guard name that would reject, or empty.
std::string sic_check_inequality(const SicSession& s, const Inequality& ineq);
void consider_found(SicSession& s);
void sic_run_auto(SicSession& s, AutoPolicy policy, const FlowSink& sink = {});

json sic_report(const SicSession& s);
json session_summary(const SicSession& s);

json to_json(const SicEvent& e);
SicEvent event_from_json(const json& j);
json to_json(const FlowSummary& f, const Dims& dims);
FlowSummary flow_summary_from_json(const json& j, const Dims& dims);

SicSession sic_replay(const std::vector<SicEvent>& events);
std::vector<SicEvent> read_event_log(const std::string& path);
void write_event_log(const std::string& path, const std::vector<SicEvent>& events);
void append_event(const std::string& path, const SicEvent& e);

}  // namespace polyent
