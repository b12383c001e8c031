#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "bftrand/actor.hpp"
#include "bftrand/authcrypt.hpp"
#include "bftrand/entropy.hpp"
#include "bftrand/message.hpp"
#include "bftrand/threshold.hpp"

namespace bftrand {

/// Base is plain three-phase ordering; ba agrees on a set of entropy shares; ct tosses a threshold coin.
enum class Mode { base, ba, ct };

const char* mode_name(Mode m);
Mode parse_mode(std::string_view s);

struct Classification {
  bool randomized = false;
  unsigned bits = 32;
};

/// Pure function telling whether a request needs a fresh random number.
using AppOracle = std::function<Classification(const Request&)>;
/// Runs one delivered request; the default echoes the payload.
using AppExecutor = std::function<Bytes(const Request&, const std::optional<Bytes>& random)>;

AppOracle all_randomized(unsigned bits = 32);
AppOracle none_randomized();
Bytes echo(const Request& r, const std::optional<Bytes>& random);

struct ReplicaConfig {
  ReplicaId self = 0;
  QuorumSpec quorums;
  Mode mode = Mode::base;
  bool batching = false;
  bool ct_batching = false;
  std::size_t max_batch = 64;
  std::size_t window = 1;  // batches in flight before the primary starts queueing
  std::optional<EntropySource> entropy;
  std::shared_ptr<const threshold::KeyShare> key_share;
  std::shared_ptr<const threshold::GroupKey> group_key;
  threshold::MapHash map_hash = threshold::MapHash::sha1;
  Block32 root_secret{};
  Duration timeout_base = std::chrono::seconds(1);
  AppOracle oracle = all_randomized();
  AppExecutor executor = echo;
  CostTable costs;
  /// Key size used to look up threshold costs; 0 means the dealt key's size.
  unsigned cost_key_bits = 0;

  /// Throws ConfigError when mode-specific material is missing.
  void validate() const;
};

enum class Phase { pre_prepared, updated, prepared, committed, delivered };

/// Everything a replica knows about one (view, sequence number) slot.
struct OrderCertificate {
  View v = 0;
  SeqNum n = 0;
  bool accepted = false;  // pre-prepare accepted
  Phase phase = Phase::pre_prepared;
  Digest d;
  std::vector<Request> requests;
  std::vector<Classification> classes;
  bool randomized = false;
  std::optional<RandomShare> r_p;

  // Backup entropy shares with the d they were sent for, in arrival order.
  std::map<ReplicaId, std::pair<Digest, RandomShare>> pp_updates;
  std::vector<ReplicaId> pp_update_order;
  std::map<ReplicaId, Message> pp_update_msgs;
  std::optional<PpUpdate> primary_update;  // the primary's share-set message, pending validation
  std::optional<ShareSet> share_set;
  std::optional<CombinedRandom> combined;
  std::optional<Digest> d_prime;

  std::map<ReplicaId, Digest> prepares;
  std::map<ReplicaId, Digest> commits;
  std::map<ReplicaId, std::vector<threshold::SignatureShare>> sig_shares;
  std::map<std::pair<ReplicaId, std::size_t>, bool> share_checked;  // (replica, coin) -> valid
  std::optional<std::vector<threshold::GroupSignature>> coins;

  bool sent_prepare = false;
  bool sent_commit = false;

  /// Digest the prepare and commit quorums vote on.
  std::optional<Digest> ordering_digest() const;
  std::size_t coin_count(bool ct_batching) const;
};

struct ReplicaStats {
  std::uint64_t dropped_decode = 0;
  std::uint64_t dropped_auth = 0;
  std::uint64_t dropped_invalid = 0;   // wrong view, bad digest, conflicting binding, ...
  std::uint64_t rejected_share_sets = 0;
  std::uint64_t rejected_sig_shares = 0;
  std::uint64_t equivocation_evidence = 0;
  std::uint64_t retransmit_requests = 0;
  std::uint64_t view_change_signals = 0;
  std::uint64_t delivered_batches = 0;
  std::uint64_t delivered_requests = 0;
};

/// One replica: a deterministic (state, event) -> (state, actions) machine.
class Replica final : public Actor {
 public:
  explicit Replica(ReplicaConfig cfg);

  Principal id() const override { return cfg_.self; }
  std::vector<Action> on_message(ByteView bytes, Time now) override;
  std::vector<Action> on_timer(TimerId timer, Time now) override;
  Duration last_cost() const override { return meter_.elapsed(); }

  /// Handles an already decoded message, as if it had arrived on the wire.
  std::vector<Action> on_decoded(const Message& m, Time now);

  const ReplicaConfig& config() const { return cfg_; }
  const ReplicaStats& stats() const { return stats_; }
  const OpMeter& meter() const { return meter_; }
  View current_view() const { return view_; }
  SeqNum last_delivered() const { return last_delivered_; }
  Duration current_timeout() const { return timeout_; }
  bool is_primary() const;
  const OrderCertificate* certificate(SeqNum n) const;

 private:
  using Out = std::vector<Action>;

  void handle_request(const Message& m, const Request& r, Time now, Out& out);
  void handle_pre_prepare(const Message& m, const PrePrepare& pp, Out& out);
  void handle_pp_update(const Message& m, const PpUpdate& u, Time now, Out& out);
  void handle_prepare(const Prepare& p, Time now, Out& out);
  void handle_commit(const Commit& c, Time now, Out& out);
  void handle_pp_fetch(const PpFetch& f, Out& out);

  bool worth_verifying(const Body& b) const;
  bool authentic(const Message& m);

  void order_pending(Out& out);
  void advance(OrderCertificate& cert, Time now, Out& out);
  bool try_share_set(OrderCertificate& cert, Time now, Out& out);
  bool try_coins(OrderCertificate& cert);
  void try_deliver(Out& out);

  void multicast(Body body, Out& out);
  void send_to(Principal to, Body body, Out& out);

  OrderCertificate& cert_for(View v, SeqNum n);
  std::vector<Bytes> coin_messages(const OrderCertificate& cert) const;
  std::optional<Bytes> random_for(const OrderCertificate& cert, std::size_t index, std::size_t coin_index) const;

  ReplicaConfig cfg_;
  KeyRing keys_;
  OpMeter meter_;
  ReplicaStats stats_;
  View view_ = 0;
  Duration timeout_;

  std::map<SeqNum, OrderCertificate> log_;
  SeqNum next_seq_ = 1;
  SeqNum last_delivered_ = 0;

  // Primary-side request intake.
  std::deque<Request> pending_;
  std::set<std::pair<ClientId, std::uint64_t>> ordered_;

  struct ClientRecord {
    std::uint64_t last_timestamp = 0;
    std::optional<Message> last_reply;
  };
  std::map<ClientId, ClientRecord> clients_;

  // Backup-side view-change timers for forwarded requests.
  std::map<TimerId, std::pair<ClientId, std::uint64_t>> request_timers_;
  std::set<std::pair<ClientId, std::uint64_t>> timed_requests_;
  TimerId next_timer_ = 1;

  std::map<std::pair<SeqNum, ReplicaId>, Time> last_fetch_;
};

}  // namespace bftrand
