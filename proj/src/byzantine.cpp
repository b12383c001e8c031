#include "bftrand/byzantine.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <unordered_set>

#include "bftrand/cluster.hpp"

namespace bftrand {

namespace {

// Messages kept for replay and how far back a replay reaches.
constexpr std::size_t kReplayDepth = 16;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  std::erase(out, '_');
  std::erase(out, '-');
  return out;
}

bool replica_target(const action::Send& s, std::uint32_t n_replicas) {
  return std::all_of(s.to.begin(), s.to.end(), [&](Principal p) { return p < n_replicas; });
}

ReplicaConfig with_fault(ReplicaConfig cfg, const FaultSpec& spec) {
  if (spec.behavior == Behavior::biased_shares) cfg.entropy = EntropySource::constant(spec.biased);
  return cfg;
}

}  // namespace

const char* behavior_name(Behavior b) {
  switch (b) {
    case Behavior::biased_shares: return "BiasedShares";
    case Behavior::corrupt_sig_shares: return "CorruptSigShares";
    case Behavior::equivocate_share_set: return "EquivocateShareSet";
    case Behavior::mute_commit: return "MuteCommit";
    case Behavior::stale_replay: return "StaleReplay";
  }
  return "?";
}

Behavior parse_behavior(std::string_view s) {
  const auto l = lower(s);
  if (l == "biasedshares") return Behavior::biased_shares;
  if (l == "corruptsigshares") return Behavior::corrupt_sig_shares;
  if (l == "equivocateshareset") return Behavior::equivocate_share_set;
  if (l == "mutecommit") return Behavior::mute_commit;
  if (l == "stalereplay") return Behavior::stale_replay;
  throw ConfigError("unknown behavior '" + std::string(s) + "'");
}

FaultyReplica::FaultyReplica(ReplicaConfig cfg, FaultSpec spec)
    : inner_(with_fault(std::move(cfg), spec)),
      spec_(spec),
      keys_(inner_.config().root_secret, inner_.config().self) {}

std::vector<Action> FaultyReplica::on_message(ByteView bytes, Time now) {
  if (spec_.behavior == Behavior::equivocate_share_set) {
    try {
      auto m = decode(bytes);
      if (auto* u = std::get_if<PpUpdate>(&m.body); u && std::holds_alternative<RandomShare>(u->payload))
        observed_shares_[u->n].emplace(u->i, std::get<RandomShare>(u->payload));
    } catch (const DecodeError&) {
    }
  }
  return transform(inner_.on_message(bytes, now));
}

std::vector<Action> FaultyReplica::on_timer(TimerId timer, Time now) { return transform(inner_.on_timer(timer, now)); }

void FaultyReplica::resign(action::Send& s) const {
  std::vector<SessionKey> keys;
  for (auto p : s.to) keys.push_back(keys_.outbound(p));
  s.msg.auth = authenticator_sign(keys, view(encode_body(s.msg.body)));
}

std::vector<Action> FaultyReplica::equivocate(action::Send s) {
  const auto& u = std::get<PpUpdate>(s.msg.body);
  const auto& set = std::get<ShareSet>(u.payload);
  const auto f = inner_.config().quorums.f;

  ShareSet alt = set;
  bool swapped = false;
  if (auto seen = observed_shares_.find(u.n); seen != observed_shares_.end()) {
    for (const auto& [id, share] : seen->second) {
      bool used = std::any_of(set.entries.begin(), set.entries.end(), [&](const ShareEntry& e) { return e.replica == id; });
      if (used) continue;
      alt.entries.back() = {share, id};
      swapped = true;
      break;
    }
  }
  if (!swapped) alt.entries.back().share.bytes[0] ^= 0xff;

  // Set A reaches all but f backups so the correct majority keeps ordering; set B reaches the rest.
  std::vector<Principal> to_a(s.to.begin(), s.to.end() - std::min<std::size_t>(f, s.to.size()));
  std::vector<Principal> to_b(s.to.end() - std::min<std::size_t>(f, s.to.size()), s.to.end());
  std::vector<Action> out;
  if (!to_a.empty()) {
    action::Send a{to_a, s.msg, s.after};
    resign(a);
    out.push_back(std::move(a));
  }
  if (!to_b.empty()) {
    PpUpdate bu = u;
    bu.payload = alt;
    action::Send b{to_b, Message{bu, {}}, s.after};
    resign(b);
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<Action> FaultyReplica::transform(std::vector<Action> actions) {
  const auto n_rep = inner_.config().quorums.n_replicas;
  std::vector<Action> out;
  for (auto& a : actions) {
    auto* s = std::get_if<action::Send>(&a);
    if (s == nullptr) {
      out.push_back(std::move(a));
      continue;
    }
    switch (spec_.behavior) {
      case Behavior::biased_shares: out.push_back(std::move(a)); break;
      case Behavior::mute_commit:
        if (!std::holds_alternative<Commit>(s->msg.body)) out.push_back(std::move(a));
        break;
      case Behavior::corrupt_sig_shares: {
        if (auto* c = std::get_if<Commit>(&s->msg.body); c && !c->sig_shares.empty()) {
          const auto& gk = *inner_.config().group_key;
          for (auto& share : c->sig_shares) share.value = (share.value * 3) % gk.modulus;
          resign(*s);
        }
        out.push_back(std::move(a));
        break;
      }
      case Behavior::equivocate_share_set: {
        auto* u = std::get_if<PpUpdate>(&s->msg.body);
        if (u && std::holds_alternative<ShareSet>(u->payload)) {
          for (auto& e : equivocate(std::move(*s))) out.push_back(std::move(e));
        } else {
          out.push_back(std::move(a));
        }
        break;
      }
      case Behavior::stale_replay: {
        if (replica_target(*s, n_rep)) {
          if (history_.size() == kReplayDepth) {
            action::Send old = history_.front();
            old.after = s->after;
            out.push_back(std::move(old));
            history_.pop_front();
          }
          history_.push_back(*s);
        }
        out.push_back(std::move(a));
        break;
      }
    }
  }
  return out;
}

std::unique_ptr<Actor> wrap(ReplicaConfig cfg, const FaultSpec& spec) {
  return std::make_unique<FaultyReplica>(std::move(cfg), spec);
}

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::seq_seeded: return "SeqSeeded";
    case Scheme::timestamp_seeded: return "TimestampSeeded";
    case Scheme::ba: return "BA";
    case Scheme::ct: return "CT";
  }
  return "?";
}

Scheme parse_scheme(std::string_view s) {
  const auto l = lower(s);
  if (l == "seqseeded" || l == "seq") return Scheme::seq_seeded;
  if (l == "timestampseeded" || l == "timestamp") return Scheme::timestamp_seeded;
  if (l == "ba") return Scheme::ba;
  if (l == "ct") return Scheme::ct;
  throw ConfigError("unknown scheme '" + std::string(s) + "'");
}

namespace {

std::uint32_t prng_output(std::uint64_t seed) {
  std::mt19937 gen(static_cast<std::mt19937::result_type>(seed));
  return static_cast<std::uint32_t>(gen());
}

AttackResult attack_seq(const AttackConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  AttackResult res;
  for (std::uint64_t t = 0; t < cfg.trials; ++t) {
    const SeqNum n = 1 + rng() % 1'000'000;
    const std::uint32_t delivered = prng_output(n);
    ++res.trials;
    // The sequence number is public, so the first guess already replays the generator.
    if (cfg.guesses > 0 && prng_output(n) == delivered) ++res.hits;
  }
  return res;
}

AttackResult attack_timestamp(const AttackConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  const auto gran = std::max<std::int64_t>(1, cfg.granularity.count());
  const std::int64_t half = cfg.window.count() / gran;
  AttackResult res;
  for (std::uint64_t t = 0; t < cfg.trials; ++t) {
    // The client knows when it sent; the replica seeds with its own clock a network delay later.
    const std::int64_t sent = static_cast<std::int64_t>(rng() % 1'000'000'000'000ULL);
    const std::int64_t delay = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(cfg.window.count() + 1));
    const std::int64_t seed_tick = (sent + delay) / gran;
    const std::uint32_t delivered = prng_output(static_cast<std::uint64_t>(seed_tick));
    ++res.trials;
    const std::int64_t centre = sent / gran;
    std::uint64_t used = 0;
    bool hit = false;
    for (std::int64_t off = 0; off <= half && used < cfg.guesses && !hit; ++off) {
      for (std::int64_t sign : {1, -1}) {
        if (off == 0 && sign < 0) continue;
        if (used == cfg.guesses) break;
        ++used;
        if (prng_output(static_cast<std::uint64_t>(centre + sign * off)) == delivered) {
          hit = true;
          break;
        }
      }
    }
    if (hit) ++res.hits;
  }
  return res;
}

AttackResult attack_protocol(const AttackConfig& cfg) {
  // One colluding replica with a known constant share; every correct replica draws from the OS.
  ClusterConfig cc;
  cc.mode = cfg.scheme == Scheme::ba ? Mode::ba : Mode::ct;
  cc.f = 1;
  cc.seed = cfg.seed;
  cc.clients = 1;
  cc.requests_per_client = cfg.trials;
  cc.payload_bytes = 16;
  cc.os_entropy = true;
  cc.latency = sim::LatencyModel::lan(cfg.seed);
  FaultSpec colluder;
  colluder.target = 1;
  colluder.behavior = Behavior::biased_shares;
  colluder.biased.bytes.fill(0x5a);
  cc.faults.push_back(colluder);

  Cluster cluster(cc);
  sim::RunLimits limits;
  limits.record_events = false;
  auto trace = cluster.run(limits);

  // Guesses: the public values as seeds, the colluder's share, then small integer seeds.
  // The integer-seed guesses do not depend on the request, so they are computed once.
  std::vector<std::uint32_t> common;
  common.push_back(static_cast<std::uint32_t>(truncate_bits(view(colluder.biased.bytes), 32)));
  for (std::uint64_t s = 0; common.size() + 2 < cfg.guesses && s < cfg.guesses; ++s) common.push_back(prng_output(s));

  AttackResult res;
  for (const auto& a : trace.accepts) {
    if (!a.accept.random || a.accept.random->size() != 4) continue;
    const auto delivered = static_cast<std::uint32_t>(truncate_bits(view(*a.accept.random), 32));
    ++res.trials;
    std::unordered_set<std::uint32_t> guesses(common.begin(), common.end());
    if (guesses.size() < cfg.guesses) guesses.insert(prng_output(a.accept.timestamp));
    if (guesses.size() < cfg.guesses) guesses.insert(prng_output(a.accept.client));
    if (guesses.count(delivered) != 0) ++res.hits;
  }
  return res;
}

}  // namespace

AttackResult seed_predictor_attack(const AttackConfig& cfg) {
  if (cfg.trials < 1) throw ConfigError("trials must be at least 1");
  switch (cfg.scheme) {
    case Scheme::seq_seeded: return attack_seq(cfg);
    case Scheme::timestamp_seeded: return attack_timestamp(cfg);
    case Scheme::ba:
    case Scheme::ct: return attack_protocol(cfg);
  }
  return {};
}

}  // namespace bftrand
