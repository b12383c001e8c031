#include "bftrand/replica.hpp"

#include <algorithm>
#include <string>

namespace bftrand {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Sequence numbers accepted ahead of the last delivered one.
constexpr SeqNum kHighWatermark = 1u << 16;

}  // namespace

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::base: return "base";
    case Mode::ba: return "ba";
    case Mode::ct: return "ct";
  }
  return "?";
}

Mode parse_mode(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "base") return Mode::base;
  if (lower == "ba") return Mode::ba;
  if (lower == "ct") return Mode::ct;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

AppOracle all_randomized(unsigned bits) {
  return [bits](const Request&) { return Classification{true, bits}; };
}

AppOracle none_randomized() {
  return [](const Request&) { return Classification{false, 32}; };
}

Bytes echo(const Request& r, const std::optional<Bytes>&) { return r.payload; }

void ReplicaConfig::validate() const {
  if (self >= quorums.n_replicas) throw ConfigError("replica id outside [0, 3f]");
  if (mode == Mode::ba && !entropy) throw ConfigError("BA mode requires an entropy source");
  if (mode == Mode::ct) {
    if (!key_share || !group_key) throw ConfigError("CT mode requires a key share and the group key");
    if (group_key->k != quorums.ct_threshold || group_key->l != quorums.n_replicas)
      throw ConfigError("group key parameters do not match the quorum configuration");
    if (key_share->holder != self + 1) throw ConfigError("key share does not belong to this replica");
  }
  if (!oracle || !executor) throw ConfigError("application oracle and executor are required");
  if (batching && (max_batch == 0 || window == 0)) throw ConfigError("batch size and window must be positive");
}

std::optional<Digest> OrderCertificate::ordering_digest() const {
  if (!accepted) return std::nullopt;
  if (d_prime) return d_prime;
  return d;
}

std::size_t OrderCertificate::coin_count(bool ct_batching) const {
  if (!randomized) return 0;
  if (ct_batching) return 1;
  return static_cast<std::size_t>(std::count_if(classes.begin(), classes.end(),
                                                [](const Classification& c) { return c.randomized; }));
}

Replica::Replica(ReplicaConfig cfg)
    : cfg_(std::move(cfg)),
      keys_(cfg_.root_secret, cfg_.self),
      meter_(cfg_.costs, cfg_.quorums.ct_threshold,
             cfg_.cost_key_bits != 0 ? cfg_.cost_key_bits : (cfg_.group_key ? cfg_.group_key->key_bits : 0)),
      timeout_(cfg_.timeout_base) {
  cfg_.validate();
}

bool Replica::is_primary() const { return primary_of(view_, cfg_.quorums.n_replicas) == cfg_.self; }

const OrderCertificate* Replica::certificate(SeqNum n) const {
  auto it = log_.find(n);
  return it == log_.end() ? nullptr : &it->second;
}

OrderCertificate& Replica::cert_for(View v, SeqNum n) {
  auto& cert = log_[n];
  cert.v = v;
  cert.n = n;
  return cert;
}

std::vector<Action> Replica::on_message(ByteView bytes, Time now) {
  meter_.reset();
  Message m;
  try {
    m = decode(bytes);
  } catch (const DecodeError&) {
    ++stats_.dropped_decode;
    return {};
  }
  Out out;
  if (!worth_verifying(m.body)) return out;
  if (!authentic(m)) {
    ++stats_.dropped_auth;
    return out;
  }
  std::visit(overloaded{
                 [&](const Request& r) { handle_request(m, r, now, out); },
                 [&](const PrePrepare& pp) { handle_pre_prepare(m, pp, out); },
                 [&](const PpUpdate& u) { handle_pp_update(m, u, now, out); },
                 [&](const Prepare& p) { handle_prepare(p, now, out); },
                 [&](const Commit& c) { handle_commit(c, now, out); },
                 [&](const PpFetch& f) { handle_pp_fetch(f, out); },
                 [&](const Reply&) { ++stats_.dropped_invalid; },
             },
             m.body);
  auto slot = std::visit(overloaded{
                             [](const Request&) -> std::optional<SeqNum> { return std::nullopt; },
                             [](const Reply&) -> std::optional<SeqNum> { return std::nullopt; },
                             [](const auto& body) -> std::optional<SeqNum> { return body.n; },
                         },
                         m.body);
  if (slot) {
    if (auto it = log_.find(*slot); it != log_.end()) advance(it->second, now, out);
  }
  return out;
}

std::vector<Action> Replica::on_decoded(const Message& m, Time now) { return on_message(view(encode(m)), now); }

bool Replica::worth_verifying(const Body& b) const {
  const auto n_rep = cfg_.quorums.n_replicas;
  const ReplicaId primary = primary_of(view_, n_rep);
  auto in_window = [&](View v, SeqNum n) {
    return v == view_ && n > last_delivered_ && n <= last_delivered_ + kHighWatermark;
  };
  auto find = [&](SeqNum n) -> const OrderCertificate* { return certificate(n); };
  return std::visit(
      overloaded{
          [&](const Request& r) { return r.client >= kFirstClientId; },
          [&](const PrePrepare& pp) {
            if (!in_window(pp.v, pp.n) || primary == cfg_.self) return false;
            const auto* c = find(pp.n);
            return c == nullptr || !c->accepted;
          },
          [&](const PpUpdate& u) {
            if (!in_window(u.v, u.n) || u.i >= n_rep || u.i == cfg_.self) return false;
            const bool is_set = std::holds_alternative<ShareSet>(u.payload);
            if (is_set != (u.i == primary)) return false;
            const auto* c = find(u.n);
            if (c == nullptr) return true;
            if (c->combined) return false;
            if (is_set) return !c->primary_update;
            return c->pp_updates.count(u.i) == 0;
          },
          [&](const Prepare& p) {
            if (!in_window(p.v, p.n) || p.i >= n_rep || p.i == cfg_.self || p.i == primary) return false;
            const auto* c = find(p.n);
            if (c == nullptr) return true;
            return c->phase < Phase::prepared && c->prepares.count(p.i) == 0;
          },
          [&](const Commit& cm) {
            if (!in_window(cm.v, cm.n) || cm.i >= n_rep || cm.i == cfg_.self) return false;
            const auto* c = find(cm.n);
            if (c == nullptr) return true;
            if (c->commits.count(cm.i) != 0) return false;
            if (c->phase >= Phase::committed) return cfg_.mode == Mode::ct && c->randomized && !c->coins;
            return true;
          },
          [&](const Reply&) { return false; },
          [&](const PpFetch& f) {
            return primary == cfg_.self && f.v == view_ && f.i < n_rep && f.i != cfg_.self;
          },
      },
      b);
}

bool Replica::authentic(const Message& m) {
  Principal sender = sender_of(m.body, cfg_.quorums.n_replicas);
  meter_.charge(m.auth.entries.size() > 1 ? CryptoOp::auth_verify : CryptoOp::mac_verify);
  return authenticator_verify(keys_.inbound(sender), view(encode_body(m.body)), m.auth, cfg_.self);
}

void Replica::multicast(Body body, Out& out) {
  std::vector<SessionKey> keys;
  std::vector<Principal> targets;
  for (ReplicaId r = 0; r < cfg_.quorums.n_replicas; ++r) {
    if (r == cfg_.self) continue;
    targets.push_back(r);
    keys.push_back(keys_.outbound(r));
  }
  meter_.charge(CryptoOp::auth_gen);
  auto bytes = encode_body(body);
  Message m{std::move(body), authenticator_sign(keys, view(bytes))};
  out.push_back(action::Send{std::move(targets), std::move(m), meter_.elapsed()});
}

void Replica::send_to(Principal to, Body body, Out& out) {
  meter_.charge(CryptoOp::mac_gen);
  auto bytes = encode_body(body);
  Message m{std::move(body), authenticator_sign({keys_.outbound(to)}, view(bytes))};
  out.push_back(action::Send{{to}, std::move(m), meter_.elapsed()});
}

void Replica::handle_request(const Message& m, const Request& r, Time now, Out& out) {
  (void)now;
  auto& rec = clients_[r.client];
  if (r.timestamp < rec.last_timestamp) return;
  if (r.timestamp == rec.last_timestamp) {
    if (rec.last_reply) out.push_back(action::Send{{r.client}, *rec.last_reply, meter_.elapsed()});
    return;
  }
  const auto key = std::make_pair(r.client, r.timestamp);
  if (is_primary()) {
    if (!ordered_.insert(key).second) return;
    pending_.push_back(r);
    order_pending(out);
    return;
  }
  out.push_back(action::Send{{primary_of(view_, cfg_.quorums.n_replicas)}, m, meter_.elapsed()});
  if (timed_requests_.insert(key).second) {
    TimerId id = next_timer_++;
    request_timers_[id] = key;
    out.push_back(action::StartTimer{id, timeout_});
  }
}

void Replica::order_pending(Out& out) {
  if (!is_primary()) return;
  while (!pending_.empty()) {
    std::vector<Request> batch;
    if (cfg_.batching) {
      if ((next_seq_ - 1) - last_delivered_ >= cfg_.window) break;
      while (!pending_.empty() && batch.size() < cfg_.max_batch) {
        batch.push_back(std::move(pending_.front()));
        pending_.pop_front();
      }
    } else {
      batch.push_back(std::move(pending_.front()));
      pending_.pop_front();
    }

    auto& cert = cert_for(view_, next_seq_++);
    cert.requests = std::move(batch);
    cert.d = batch_digest(cert.requests);
    for (const auto& r : cert.requests) cert.classes.push_back(cfg_.oracle(r));
    cert.randomized = cfg_.mode != Mode::base &&
                      std::any_of(cert.classes.begin(), cert.classes.end(), [](auto& c) { return c.randomized; });
    if (cfg_.mode == Mode::ba && cert.randomized) cert.r_p = cfg_.entropy->extract_share();
    cert.accepted = true;
    multicast(PrePrepare{view_, cert.n, cert.d, cert.r_p, cert.requests}, out);
  }
}

void Replica::handle_pre_prepare(const Message&, const PrePrepare& pp, Out& out) {
  if (pp.requests.empty() || batch_digest(pp.requests) != pp.d) {
    ++stats_.dropped_invalid;
    return;
  }
  std::vector<Classification> classes;
  for (const auto& r : pp.requests) classes.push_back(cfg_.oracle(r));
  const bool randomized =
      cfg_.mode != Mode::base && std::any_of(classes.begin(), classes.end(), [](auto& c) { return c.randomized; });
  // A primary may only attach a share when the application really needs a random number.
  const bool expects_share = cfg_.mode == Mode::ba && randomized;
  if (pp.r_p.has_value() != expects_share) {
    ++stats_.dropped_invalid;
    return;
  }

  auto& cert = cert_for(pp.v, pp.n);
  cert.accepted = true;
  cert.d = pp.d;
  cert.requests = pp.requests;
  cert.classes = std::move(classes);
  cert.randomized = randomized;
  cert.r_p = pp.r_p;

  for (auto it = cert.pp_updates.begin(); it != cert.pp_updates.end();) {
    if (it->second.first != cert.d) {
      cert.pp_update_order.erase(std::remove(cert.pp_update_order.begin(), cert.pp_update_order.end(), it->first),
                                 cert.pp_update_order.end());
      it = cert.pp_updates.erase(it);
    } else {
      ++it;
    }
  }
  if (cert.primary_update && cert.primary_update->d != cert.d) cert.primary_update.reset();

  if (expects_share) {
    auto share = cfg_.entropy->extract_share();
    cert.pp_updates[cfg_.self] = {cert.d, share};
    cert.pp_update_order.push_back(cfg_.self);
    multicast(PpUpdate{pp.v, pp.n, cfg_.self, share, cert.d}, out);
  } else {
    cert.prepares[cfg_.self] = cert.d;
    cert.sent_prepare = true;
    multicast(Prepare{pp.v, pp.n, cfg_.self, cert.d}, out);
  }
}

void Replica::handle_pp_update(const Message& m, const PpUpdate& u, Time now, Out& out) {
  (void)now;
  (void)out;
  auto& cert = cert_for(u.v, u.n);
  if (cert.accepted && u.d != cert.d) {
    ++stats_.dropped_invalid;
    return;
  }
  if (std::holds_alternative<ShareSet>(u.payload)) {
    cert.primary_update = u;
    return;
  }
  cert.pp_updates[u.i] = {u.d, std::get<RandomShare>(u.payload)};
  cert.pp_update_order.push_back(u.i);
  if (is_primary()) cert.pp_update_msgs[u.i] = m;
}

void Replica::handle_prepare(const Prepare& p, Time, Out&) { cert_for(p.v, p.n).prepares[p.i] = p.d_prime; }

void Replica::handle_commit(const Commit& c, Time, Out&) {
  auto& cert = cert_for(c.v, c.n);
  cert.commits[c.i] = c.digest;
  cert.sig_shares[c.i] = c.sig_shares;
}

void Replica::handle_pp_fetch(const PpFetch& f, Out& out) {
  auto it = log_.find(f.n);
  if (it == log_.end()) return;
  for (auto id : f.missing) {
    auto msg = it->second.pp_update_msgs.find(id);
    if (msg != it->second.pp_update_msgs.end())
      out.push_back(action::Send{{f.i}, msg->second, meter_.elapsed()});
  }
}

bool Replica::try_share_set(OrderCertificate& cert, Time now, Out& out) {
  const auto& q = cfg_.quorums;
  if (is_primary()) {
    std::vector<ShareEntry> entries{{*cert.r_p, cfg_.self}};
    for (auto id : cert.pp_update_order) {
      if (entries.size() == q.pp_update_quorum + 1) break;
      entries.push_back({cert.pp_updates.at(id).second, id});
    }
    if (entries.size() < q.pp_update_quorum + 1) return false;
    ShareSet set{std::move(entries)};
    cert.combined = combine(set, q.f);
    cert.d_prime = bind_random(cert.d, *cert.combined);
    cert.share_set = set;
    cert.phase = Phase::updated;
    multicast(PpUpdate{cert.v, cert.n, cfg_.self, std::move(set), cert.d}, out);
    return true;
  }

  if (!cert.primary_update) return false;
  const auto& set = std::get<ShareSet>(cert.primary_update->payload);
  const ReplicaId primary = primary_of(cert.v, q.n_replicas);
  auto reject = [&](bool equivocation) {
    ++stats_.rejected_share_sets;
    if (equivocation) ++stats_.equivocation_evidence;
    cert.primary_update.reset();
    return false;
  };

  std::set<ReplicaId> ids;
  for (const auto& e : set.entries)
    if (e.replica >= q.n_replicas || !ids.insert(e.replica).second) return reject(false);
  if (set.entries.size() != q.pp_update_quorum + 1) return reject(false);

  std::vector<ReplicaId> missing;
  for (const auto& e : set.entries) {
    if (e.replica == primary) {
      if (!cert.r_p || e.share != *cert.r_p) return reject(true);
      continue;
    }
    auto held = cert.pp_updates.find(e.replica);
    if (held == cert.pp_updates.end()) {
      missing.push_back(e.replica);
    } else if (held->second.second != e.share) {
      return reject(true);
    }
  }
  if (!missing.empty()) {
    std::vector<ReplicaId> ask;
    for (auto id : missing) {
      auto key = std::make_pair(cert.n, id);
      auto last = last_fetch_.find(key);
      if (last != last_fetch_.end() && now - last->second < cfg_.timeout_base) continue;
      last_fetch_[key] = now;
      ask.push_back(id);
    }
    if (!ask.empty()) {
      ++stats_.retransmit_requests;
      out.push_back(action::RequestRetransmit{primary, cert.v, cert.n, ask});
      send_to(primary, PpFetch{cert.v, cert.n, cfg_.self, ask}, out);
    }
    return false;
  }

  cert.combined = combine(set, q.f);
  cert.d_prime = bind_random(cert.d, *cert.combined);
  cert.share_set = set;
  cert.phase = Phase::updated;
  cert.prepares[cfg_.self] = *cert.d_prime;
  cert.sent_prepare = true;
  multicast(Prepare{cert.v, cert.n, cfg_.self, *cert.d_prime}, out);
  return true;
}

std::vector<Bytes> Replica::coin_messages(const OrderCertificate& cert) const {
  std::vector<Bytes> out;
  if (!cert.randomized) return out;
  if (cfg_.ct_batching) {
    out.push_back(coin_message(cert.d, cert.n));
    return out;
  }
  for (std::size_t j = 0; j < cert.requests.size(); ++j)
    if (cert.classes[j].randomized) out.push_back(coin_message(batch_digest({cert.requests[j]}), cert.n));
  return out;
}

bool Replica::try_coins(OrderCertificate& cert) {
  const auto& gk = *cfg_.group_key;
  const auto msgs = coin_messages(cert);
  const auto digest = *cert.ordering_digest();
  std::vector<std::vector<threshold::SignatureShare>> valid(msgs.size());
  for (const auto& [id, dig] : cert.commits) {
    if (dig != digest) continue;
    const auto& shares = cert.sig_shares[id];
    if (shares.size() != msgs.size()) {
      ++stats_.rejected_sig_shares;
      continue;
    }
    for (std::size_t j = 0; j < msgs.size(); ++j) {
      if (valid[j].size() == gk.k) continue;
      const auto& s = shares[j];
      auto key = std::make_pair(id, j);
      auto checked = cert.share_checked.find(key);
      bool ok;
      if (checked != cert.share_checked.end()) {
        ok = checked->second;
      } else {
        ok = s.holder == id + 1 && threshold::verify_share(gk, view(msgs[j]), s);
        cert.share_checked[key] = ok;
        if (!ok) ++stats_.rejected_sig_shares;
      }
      if (ok) valid[j].push_back(s);
    }
  }
  for (const auto& v : valid)
    if (v.size() < gk.k) return false;
  std::vector<threshold::GroupSignature> coins;
  for (std::size_t j = 0; j < msgs.size(); ++j) {
    meter_.charge(CryptoOp::thresh_combine);
    coins.push_back(threshold::interpolate(gk, view(msgs[j]), valid[j]));
  }
  cert.coins = std::move(coins);
  return true;
}

void Replica::advance(OrderCertificate& cert, Time now, Out& out) {
  if (!cert.accepted || cert.phase == Phase::delivered) return;
  const auto& q = cfg_.quorums;
  if (cfg_.mode == Mode::ba && cert.randomized && !cert.combined && !try_share_set(cert, now, out)) return;

  const auto digest = *cert.ordering_digest();
  const ReplicaId primary = primary_of(cert.v, q.n_replicas);
  if (cert.phase < Phase::prepared) {
    auto matching = std::count_if(cert.prepares.begin(), cert.prepares.end(),
                                  [&](const auto& p) { return p.first != primary && p.second == digest; });
    if (static_cast<std::uint32_t>(matching) < q.prepare_quorum) return;
    cert.phase = Phase::prepared;
    std::vector<threshold::SignatureShare> shares;
    if (cfg_.mode == Mode::ct) {
      auto msgs = coin_messages(cert);
      for (std::size_t j = 0; j < msgs.size(); ++j) {
        meter_.charge(CryptoOp::thresh_sign);
        shares.push_back(threshold::sign_share(*cfg_.group_key, *cfg_.key_share, view(msgs[j])));
        cert.share_checked[{cfg_.self, j}] = true;
      }
    }
    cert.commits[cfg_.self] = digest;
    cert.sig_shares[cfg_.self] = shares;
    cert.sent_commit = true;
    multicast(Commit{cert.v, cert.n, cfg_.self, digest, std::move(shares)}, out);
  }
  if (cert.phase == Phase::prepared) {
    auto matching = std::count_if(cert.commits.begin(), cert.commits.end(),
                                  [&](const auto& c) { return c.second == digest; });
    if (static_cast<std::uint32_t>(matching) < q.commit_quorum) return;
    cert.phase = Phase::committed;
  }
  if (cfg_.mode == Mode::ct && cert.randomized && !cert.coins && !try_coins(cert)) return;
  try_deliver(out);
}

std::optional<Bytes> Replica::random_for(const OrderCertificate& cert, std::size_t index,
                                         std::size_t coin_index) const {
  const auto& cls = cert.classes[index];
  if (!cert.randomized || !cls.randomized) return std::nullopt;
  if (cfg_.mode == Mode::ba) {
    Block32 value = cert.combined->bytes;
    if (index > 0) {
      Writer w;
      w.fixed(view(value));
      w.u32(static_cast<std::uint32_t>(index));
      value = sha256(view(w.data())).bytes;
    }
    return random_bytes(truncate_bits(view(value), cls.bits), cls.bits);
  }
  const auto& sig = (*cert.coins)[cfg_.ct_batching ? 0 : coin_index];
  return random_bytes(threshold::signature_to_random(sig, cls.bits, cfg_.map_hash), cls.bits);
}

void Replica::try_deliver(Out& out) {
  for (;;) {
    auto it = log_.find(last_delivered_ + 1);
    if (it == log_.end()) break;
    auto& cert = it->second;
    if (!cert.accepted || cert.phase < Phase::committed) break;
    if (cfg_.mode == Mode::ct && cert.randomized && !cert.coins) break;

    std::size_t coin_index = 0;
    for (std::size_t j = 0; j < cert.requests.size(); ++j) {
      const auto& r = cert.requests[j];
      auto random = random_for(cert, j, coin_index);
      if (cert.classes[j].randomized) ++coin_index;
      auto& rec = clients_[r.client];
      if (r.timestamp <= rec.last_timestamp) continue;
      auto result = cfg_.executor(r, random);
      out.push_back(action::Deliver{cert.n, r, random});
      Reply reply{view_, r.client, r.timestamp, cfg_.self, std::move(result), random};
      send_to(r.client, reply, out);
      rec.last_timestamp = r.timestamp;
      rec.last_reply = std::get<action::Send>(out.back()).msg;
      timed_requests_.erase({r.client, r.timestamp});
      ++stats_.delivered_requests;
    }
    cert.phase = Phase::delivered;
    ++last_delivered_;
    ++stats_.delivered_batches;
  }
  order_pending(out);
}

std::vector<Action> Replica::on_timer(TimerId timer, Time) {
  meter_.reset();
  Out out;
  auto it = request_timers_.find(timer);
  if (it == request_timers_.end()) return out;
  auto [client, ts] = it->second;
  request_timers_.erase(it);
  if (clients_[client].last_timestamp >= ts) return out;
  // The view-change protocol itself is not run; the signal is surfaced and the timeout doubled.
  timeout_ *= 2;
  ++stats_.view_change_signals;
  out.push_back(action::ViewChangeSignal{view_ + stats_.view_change_signals, timeout_});
  TimerId id = next_timer_++;
  request_timers_[id] = {client, ts};
  out.push_back(action::StartTimer{id, timeout_});
  return out;
}

}  // namespace bftrand
