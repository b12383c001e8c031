#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bftrand/actor.hpp"
#include "bftrand/replica.hpp"

namespace bftrand {

enum class Behavior {
  biased_shares,         // every entropy share is a fixed value
  corrupt_sig_shares,    // signature shares are perturbed before sending
  equivocate_share_set,  // primary sends different share sets to disjoint backup subsets
  mute_commit,           // commit messages are never sent
  stale_replay,          // old messages are re-sent alongside new ones
};

const char* behavior_name(Behavior b);
Behavior parse_behavior(std::string_view s);

struct FaultSpec {
  ReplicaId target = 0;
  Behavior behavior = Behavior::mute_commit;
  RandomShare biased{};  // used by biased_shares
};

/// An honest replica whose outgoing action stream is rewritten according to a FaultSpec.
class FaultyReplica final : public Actor {
 public:
  FaultyReplica(ReplicaConfig cfg, FaultSpec spec);

  Principal id() const override { return inner_.id(); }
  std::vector<Action> on_message(ByteView bytes, Time now) override;
  std::vector<Action> on_timer(TimerId timer, Time now) override;
  Duration last_cost() const override { return inner_.last_cost(); }

  const Replica& inner() const { return inner_; }
  const FaultSpec& spec() const { return spec_; }

 private:
  std::vector<Action> transform(std::vector<Action> actions);
  void resign(action::Send& s) const;
  std::vector<Action> equivocate(action::Send s);

  Replica inner_;
  FaultSpec spec_;
  KeyRing keys_;
  std::map<SeqNum, std::map<ReplicaId, RandomShare>> observed_shares_;
  std::deque<action::Send> history_;
};

/// Builds the replica for cfg.self and wraps it. biased_shares swaps in a constant entropy source.
std::unique_ptr<Actor> wrap(ReplicaConfig cfg, const FaultSpec& spec);

enum class Scheme { seq_seeded, timestamp_seeded, ba, ct };

const char* scheme_name(Scheme s);
Scheme parse_scheme(std::string_view s);

struct AttackConfig {
  Scheme scheme = Scheme::seq_seeded;
  std::uint64_t trials = 100;
  std::uint64_t guesses = 1000;
  Duration granularity = std::chrono::milliseconds(1);
  Duration window = std::chrono::milliseconds(100);  // half-width around the send time
  std::uint64_t seed = 1;
};

struct AttackResult {
  std::uint64_t trials = 0;
  std::uint64_t hits = 0;
  double rate() const { return trials == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(trials); }
};

/// A client that knows the PRNG algorithm and every public protocol value guesses the 32-bit
/// random number attached to its request before delivery. Returns how often a guess was right.
AttackResult seed_predictor_attack(const AttackConfig& cfg);

}  // namespace bftrand
