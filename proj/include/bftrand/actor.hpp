#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "bftrand/ids.hpp"
#include "bftrand/message.hpp"

namespace bftrand {

using Duration = std::chrono::nanoseconds;
/// Simulated (or wall) time since the start of a run.
using Time = std::chrono::nanoseconds;
using TimerId = std::uint64_t;

enum class CryptoOp : std::uint8_t {
  auth_gen,        // A_g
  auth_verify,     // A_v
  mac_gen,         // M_g
  mac_verify,      // M_v
  thresh_sign,     // T_s, one signature share
  thresh_combine,  // T_v, share verification plus combination for one coin
};
inline constexpr std::size_t kCryptoOpCount = 6;

/// Latency of each primitive. Threshold costs are looked up by (k, key_bits).
struct CostTable {
  Duration auth_gen{0};
  Duration auth_verify{0};
  Duration mac_gen{0};
  Duration mac_verify{0};
  std::map<std::pair<unsigned, unsigned>, std::pair<Duration, Duration>> threshold;  // (k, bits) -> (T_s, T_v)

  /// The values measured on the reference testbed (single share signing, k in {2,3}).
  static CostTable reference();
  static CostTable zero() { return {}; }

  /// Throws ConfigError when (k, key_bits) has no entry.
  Duration sign_cost(unsigned k, unsigned key_bits) const;
  Duration combine_cost(unsigned k, unsigned key_bits) const;

  CostTable scaled(double factor) const;
};

/// Accumulates the simulated CPU time an actor spends on one event.
class OpMeter {
 public:
  OpMeter() = default;
  OpMeter(CostTable costs, unsigned k, unsigned key_bits)
      : costs_(std::move(costs)), k_(k), key_bits_(key_bits), charge_threshold_(!costs_.threshold.empty()) {}

  void charge(CryptoOp op);
  void reset() { elapsed_ = Duration{0}; }
  Duration elapsed() const { return elapsed_; }
  std::uint64_t count(CryptoOp op) const { return counts_[static_cast<std::size_t>(op)]; }

 private:
  CostTable costs_;
  unsigned k_ = 0;
  unsigned key_bits_ = 0;
  bool charge_threshold_ = false;
  Duration elapsed_{0};
  std::array<std::uint64_t, kCryptoOpCount> counts_{};
};

namespace action {

struct Send {
  std::vector<Principal> to;
  Message msg;
  Duration after{0};  // CPU time spent before the message leaves
};

struct Deliver {
  SeqNum n = 0;
  Request request;
  std::optional<Bytes> random;
};

struct StartTimer {
  TimerId id = 0;
  Duration duration{0};
};

struct RequestRetransmit {
  ReplicaId from = 0;
  View v = 0;
  SeqNum n = 0;
  std::vector<ReplicaId> missing;
};

struct ViewChangeSignal {
  View next_view = 0;
  Duration next_timeout{0};
};

/// Emitted by a client once f+1 matching replies arrived.
struct Accept {
  ClientId client = 0;
  std::uint64_t timestamp = 0;
  Bytes result;
  std::optional<Bytes> random;
  Duration latency{0};
};

}  // namespace action

using Action = std::variant<action::Send, action::Deliver, action::StartTimer, action::RequestRetransmit,
                            action::ViewChangeSignal, action::Accept>;

/// Single-threaded event-driven participant. The harness serializes calls.
class Actor {
 public:
  virtual ~Actor() = default;

  virtual Principal id() const = 0;
  virtual std::vector<Action> on_start(Time now) {
    (void)now;
    return {};
  }
  virtual std::vector<Action> on_message(ByteView bytes, Time now) = 0;
  virtual std::vector<Action> on_timer(TimerId timer, Time now) = 0;

  /// CPU time charged while handling the most recent event.
  virtual Duration last_cost() const = 0;
};

}  // namespace bftrand
