#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bftrand/actor.hpp"
#include "bftrand/authcrypt.hpp"
#include "bftrand/message.hpp"

namespace bftrand {

struct ClientConfig {
  ClientId id = kFirstClientId;
  QuorumSpec quorums;
  Block32 root_secret{};
  Duration retransmit_timeout = std::chrono::seconds(2);
  /// Closed-loop workload: requests issued back to back from on_start. Zero means manual issue() only.
  std::uint64_t requests = 0;
  std::size_t payload_bytes = 1024;
  CostTable costs;
};

struct ClientStats {
  std::uint64_t accepted = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t mismatched_replies = 0;  // replies disagreeing with the accepted or majority value
  std::uint64_t dropped = 0;
};

struct PendingRequest {
  Request request;
  Time issued_at{0};
  std::map<ReplicaId, std::pair<Bytes, std::optional<Bytes>>> replies;
  TimerId timer = 0;
};

struct ClientBusy : std::logic_error {
  using std::logic_error::logic_error;
};

/// Issues requests one at a time and accepts a result once f+1 replicas agree on (result, random).
class Client final : public Actor {
 public:
  explicit Client(ClientConfig cfg);

  Principal id() const override { return cfg_.id; }
  std::vector<Action> on_start(Time now) override;
  std::vector<Action> on_message(ByteView bytes, Time now) override;
  std::vector<Action> on_timer(TimerId timer, Time now) override;
  Duration last_cost() const override { return meter_.elapsed(); }

  /// Sends a request to the primary. Throws ClientBusy while a request is outstanding.
  std::vector<Action> issue(Bytes payload, Time now);
  /// Counts the reply and returns the accepted outcome once f+1 replies match.
  std::optional<action::Accept> on_reply(const Message& m, Time now);

  bool busy() const { return pending_.has_value(); }
  const ClientStats& stats() const { return stats_; }
  const ClientConfig& config() const { return cfg_; }

 private:
  Bytes workload_payload() const;

  ClientConfig cfg_;
  KeyRing keys_;
  OpMeter meter_;
  ClientStats stats_;
  std::uint64_t next_timestamp_ = 1;
  std::uint64_t issued_ = 0;
  std::optional<PendingRequest> pending_;
  std::optional<action::Accept> last_accepted_;
  TimerId next_timer_ = 1;
};

}  // namespace bftrand
