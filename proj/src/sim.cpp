#include "bftrand/sim.hpp"

#include <sstream>

namespace bftrand::sim {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

LatencyModel LatencyModel::lan(std::uint64_t seed) {
  return {std::chrono::microseconds(50), std::chrono::microseconds(10), seed};
}

LatencyModel LatencyModel::wan(std::uint64_t seed) {
  return {std::chrono::milliseconds(50), std::chrono::milliseconds(2), seed};
}

std::string Trace::serialize() const {
  std::ostringstream os;
  for (const auto& e : events)
    os << "E " << e.at.count() << ' ' << e.start.count() << ' ' << static_cast<int>(e.kind) << ' ' << e.from << ' '
       << e.to << ' ' << static_cast<int>(e.tag) << ' ' << e.size << '\n';
  for (const auto& d : deliveries)
    os << "D " << d.at.count() << ' ' << d.replica << ' ' << d.n << ' ' << d.request.client << ' '
       << d.request.timestamp << ' ' << (d.random ? to_hex(view(*d.random)) : "-") << '\n';
  for (const auto& a : accepts)
    os << "A " << a.at.count() << ' ' << a.accept.client << ' ' << a.accept.timestamp << ' '
       << a.accept.latency.count() << ' ' << (a.accept.random ? to_hex(view(*a.accept.random)) : "-") << '\n';
  for (const auto& v : view_changes) os << "V " << v.at.count() << ' ' << v.replica << ' ' << v.signal.next_view << '\n';
  os << "end " << end.count() << " quiescent " << quiescent << " sent " << messages_sent << '\n';
  return os.str();
}

Simulator::Simulator(LatencyModel latency) : latency_(latency), rng_(latency.seed) {}

Actor& Simulator::add(std::unique_ptr<Actor> actor) {
  auto id = actor->id();
  auto [it, inserted] = actors_.emplace(id, Slot{std::move(actor), Time{0}});
  if (!inserted) throw std::invalid_argument("duplicate actor id " + std::to_string(id));
  return *it->second.actor;
}

Duration Simulator::sample_delay() {
  auto j = latency_.jitter.count();
  auto d = latency_.base.count();
  if (j > 0) d += static_cast<std::int64_t>(rng_() % static_cast<std::uint64_t>(2 * j + 1)) - j;
  return Duration{d < 0 ? 0 : d};
}

void Simulator::push(Event e) {
  e.counter = counter_++;
  queue_.push(std::move(e));
}

void Simulator::send(Principal from, const std::vector<Principal>& to, Bytes msg, Time at) {
  auto shared = std::make_shared<const Bytes>(std::move(msg));
  for (auto dest : to) {
    Event e;
    e.at = at + sample_delay();
    e.kind = EventKind::message;
    e.from = from;
    e.to = dest;
    e.bytes = shared;
    push(std::move(e));
  }
}

void Simulator::apply(Principal self, Time start, std::vector<Action>& actions, Trace& trace) {
  const Time done = start + actors_.at(self).actor->last_cost();
  for (auto& a : actions) {
    std::visit(overloaded{
                   [&](action::Send& s) {
                     trace.messages_sent += s.to.size();
                     send(self, s.to, encode(s.msg), start + s.after);
                   },
                   [&](action::Deliver& d) {
                     trace.deliveries.push_back({start, static_cast<ReplicaId>(self), d.n, std::move(d.request),
                                                 std::move(d.random)});
                   },
                   [&](action::StartTimer& t) {
                     Event e;
                     e.at = done + t.duration;
                     e.kind = EventKind::timer;
                     e.from = self;
                     e.to = self;
                     e.timer = t.id;
                     push(std::move(e));
                   },
                   [&](action::RequestRetransmit&) { ++trace.retransmit_requests; },
                   [&](action::ViewChangeSignal& v) { trace.view_changes.push_back({start, self, v}); },
                   [&](action::Accept& acc) { trace.accepts.push_back({start, std::move(acc)}); },
               },
               a);
  }
}

Trace Simulator::run(const RunLimits& limits) {
  Trace trace;
  if (!started_) {
    started_ = true;
    for (auto& [id, slot] : actors_) {
      Event e;
      e.kind = EventKind::start;
      e.from = id;
      e.to = id;
      push(std::move(e));
    }
  }

  while (!queue_.empty()) {
    if (limits.accepts && trace.accepts.size() >= *limits.accepts) break;
    if (limits.until && queue_.top().at > *limits.until) break;
    if (trace.events_processed >= limits.event_cap) {
      trace.end = now_;
      throw EventCapExceeded("event cap of " + std::to_string(limits.event_cap) + " reached", std::move(trace));
    }

    Event e = queue_.top();
    queue_.pop();
    ++trace.events_processed;
    now_ = e.at;
    auto it = actors_.find(e.to);
    if (it == actors_.end()) continue;
    auto& slot = it->second;
    const Time start = std::max(e.at, slot.cpu_free);

    std::vector<Action> actions;
    switch (e.kind) {
      case EventKind::start: actions = slot.actor->on_start(start); break;
      case EventKind::message: actions = slot.actor->on_message(view(*e.bytes), start); break;
      case EventKind::timer: actions = slot.actor->on_timer(e.timer, start); break;
    }
    slot.cpu_free = start + slot.actor->last_cost();

    if (limits.record_events) {
      TraceEvent te;
      te.at = e.at;
      te.start = start;
      te.kind = e.kind;
      te.from = e.from;
      te.to = e.to;
      if (e.bytes && !e.bytes->empty()) {
        te.tag = (*e.bytes)[0];
        te.size = e.bytes->size();
      }
      trace.events.push_back(te);
    }
    trace.end = start;
    apply(e.to, start, actions, trace);
  }
  trace.quiescent = queue_.empty();
  return trace;
}

}  // namespace bftrand::sim
