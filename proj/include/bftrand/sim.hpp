#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bftrand/actor.hpp"

namespace bftrand::sim {

/// One-way delay: base plus a uniform sample in [-jitter, +jitter], never negative.
struct LatencyModel {
  Duration base{0};
  Duration jitter{0};
  std::uint64_t seed = 1;

  static LatencyModel zero() { return {}; }
  static LatencyModel lan(std::uint64_t seed = 1);
  static LatencyModel wan(std::uint64_t seed = 1);
};

enum class EventKind : std::uint8_t { start, message, timer };

struct TraceEvent {
  Time at{0};     // arrival time
  Time start{0};  // when the destination's CPU picked it up
  EventKind kind = EventKind::message;
  Principal from = 0;
  Principal to = 0;
  std::uint8_t tag = 0;  // message tag, 0 for start/timer
  std::uint64_t size = 0;
  bool operator==(const TraceEvent&) const = default;
};

struct DeliveryRecord {
  Time at{0};
  ReplicaId replica = 0;
  SeqNum n = 0;
  Request request;
  std::optional<Bytes> random;
};

struct AcceptRecord {
  Time at{0};
  action::Accept accept;
};

struct ViewChangeRecord {
  Time at{0};
  Principal replica = 0;
  action::ViewChangeSignal signal;
};

struct Trace {
  std::vector<TraceEvent> events;
  std::vector<DeliveryRecord> deliveries;
  std::vector<AcceptRecord> accepts;
  std::vector<ViewChangeRecord> view_changes;
  std::uint64_t retransmit_requests = 0;
  std::uint64_t messages_sent = 0;  // one per destination
  std::uint64_t events_processed = 0;
  Time end{0};
  bool quiescent = false;

  /// Canonical text rendering, used to compare runs byte for byte.
  std::string serialize() const;
};

struct RunLimits {
  std::optional<Time> until;                   // simulated-time bound
  std::optional<std::uint64_t> accepts;        // stop once this many client accepts happened
  std::uint64_t event_cap = 50'000'000;
  bool record_events = true;
};

struct EventCapExceeded : std::runtime_error {
  EventCapExceeded(std::string what, Trace partial) : std::runtime_error(std::move(what)), trace(std::move(partial)) {}
  Trace trace;
};

/// Deterministic discrete-event network. No loss, no duplication; jitter may reorder.
class Simulator {
 public:
  explicit Simulator(LatencyModel latency);

  /// Registers an actor; its id must be unique.
  Actor& add(std::unique_ptr<Actor> actor);
  template <class T>
  T& actor(Principal id) {
    return dynamic_cast<T&>(*actors_.at(id).actor);
  }
  bool has(Principal id) const { return actors_.count(id) != 0; }

  /// Enqueues one delivery per destination at `at` plus a sampled delay.
  void send(Principal from, const std::vector<Principal>& to, Bytes msg, Time at);

  /// Calls on_start on every actor at time zero, then runs until quiescence or a limit.
  /// Throws EventCapExceeded when neither quiescence nor a limit stops the run in time.
  Trace run(const RunLimits& limits = {});

  Time now() const { return now_; }

 private:
  struct Event {
    Time at{0};
    std::uint64_t counter = 0;
    EventKind kind = EventKind::message;
    Principal from = 0;
    Principal to = 0;
    std::shared_ptr<const Bytes> bytes;
    TimerId timer = 0;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.counter > b.counter;
    }
  };
  struct Slot {
    std::unique_ptr<Actor> actor;
    Time cpu_free{0};
  };

  Duration sample_delay();
  void push(Event e);
  void apply(Principal self, Time start, std::vector<Action>& actions, Trace& trace);

  LatencyModel latency_;
  std::mt19937_64 rng_;
  std::map<Principal, Slot> actors_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t counter_ = 0;
  Time now_{0};
  bool started_ = false;
};

}  // namespace bftrand::sim
