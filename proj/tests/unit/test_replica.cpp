#include <gtest/gtest.h>

#include "bftrand/cluster.hpp"
#include "bftrand/replica.hpp"
#include "oracles.hpp"

using namespace bftrand;

namespace {

Block32 test_root() {
  Block32 r{};
  r.fill(0x5e);
  return r;
}

template <class T>
std::vector<T> all_of(const std::vector<Action>& actions) {
  std::vector<T> out;
  for (const auto& a : actions)
    if (auto* p = std::get_if<T>(&a)) out.push_back(*p);
  return out;
}

template <class B>
std::vector<B> sent(const std::vector<Action>& actions) {
  std::vector<B> out;
  for (const auto& s : all_of<action::Send>(actions))
    if (auto* b = std::get_if<B>(&s.msg.body)) out.push_back(*b);
  return out;
}

/// A message from `from` carrying one MAC for each of `to`.
Message signed_by(Principal from, Body body, std::vector<Principal> to) {
  KeyRing ring(test_root(), from);
  std::vector<SessionKey> keys;
  for (auto t : to) keys.push_back(ring.outbound(t));
  auto bytes = encode_body(body);
  return Message{std::move(body), authenticator_sign(keys, view(bytes))};
}

Request req(std::uint64_t ts, std::uint64_t client = kFirstClientId) {
  return Request{client, ts, oracle::ascii("payload-" + std::to_string(ts))};
}

struct Fixture {
  std::shared_ptr<const threshold::Dealing> dealing;

  ReplicaConfig config(ReplicaId self, Mode mode, std::uint32_t k = 2) {
    ReplicaConfig c;
    c.self = self;
    c.quorums = quorums_for(1, k);
    c.mode = mode;
    c.root_secret = test_root();
    c.entropy = EntropySource::seeded(100 + self);
    if (mode == Mode::ct) {
      if (!dealing || dealing->key.k != k) dealing = deal_for(1, k, 64, 17);
      c.group_key = std::make_shared<threshold::GroupKey>(dealing->key);
      c.key_share = std::make_shared<threshold::KeyShare>(dealing->shares[self]);
    }
    return c;
  }

  threshold::SignatureShare share(ReplicaId r, const Bytes& msg) const {
    return threshold::sign_share(dealing->key, dealing->shares[r], view(msg));
  }
};

PrePrepare pre_prepare(SeqNum n, std::vector<Request> batch, std::optional<RandomShare> r_p = std::nullopt) {
  return PrePrepare{0, n, batch_digest(batch), r_p, std::move(batch)};
}

}  // namespace

TEST(ReplicaConfig, MissingMaterialRejected) {
  Fixture fx;
  auto c = fx.config(1, Mode::ct);
  c.key_share.reset();
  EXPECT_THROW(Replica{c}, ConfigError);
  auto b = fx.config(1, Mode::ba);
  b.entropy.reset();
  EXPECT_THROW(Replica{b}, ConfigError);
}

TEST(Primary, BaAttachesShare) {
  Fixture fx;
  Replica p(fx.config(0, Mode::ba));
  auto out = p.on_decoded(signed_by(kFirstClientId, req(1), {0}), Time{0});
  auto pps = sent<PrePrepare>(out);
  ASSERT_EQ(pps.size(), 1u);
  EXPECT_TRUE(pps[0].r_p.has_value());
  EXPECT_EQ(pps[0].requests.size(), 1u);
}

TEST(Primary, BaseOmitsShare) {
  Fixture fx;
  Replica p(fx.config(0, Mode::base));
  auto out = p.on_decoded(signed_by(kFirstClientId, req(1), {0}), Time{0});
  auto pps = sent<PrePrepare>(out);
  ASSERT_EQ(pps.size(), 1u);
  EXPECT_FALSE(pps[0].r_p.has_value());
  auto sends = all_of<action::Send>(out);
  EXPECT_EQ(sends[0].to, (std::vector<Principal>{1, 2, 3}));
  EXPECT_EQ(sends[0].msg.auth.entries.size(), 3u);
}

TEST(Primary, BatchesPendingRequestsUnderOneSequenceNumber) {
  ClusterConfig cc;
  cc.mode = Mode::base;
  cc.batching = true;
  cc.clients = 4;
  cc.requests_per_client = 1;
  cc.latency = sim::LatencyModel::lan(1);
  cc.latency.jitter = Duration{0};
  Cluster cluster(cc);
  cluster.run({});
  const auto* first = cluster.replica(0).certificate(1);
  const auto* second = cluster.replica(0).certificate(2);
  ASSERT_NE(first, nullptr);
  ASSERT_NE(second, nullptr);
  EXPECT_EQ(first->requests.size(), 1u);
  EXPECT_EQ(second->requests.size(), 3u);
  EXPECT_EQ(second->d, batch_digest(second->requests));
  EXPECT_EQ(cluster.replica(0).certificate(3), nullptr);
}

TEST(Backup, BaPrePrepareTriggersOnePpUpdate) {
  Fixture fx;
  Replica b(fx.config(1, Mode::ba));
  RandomShare rp{};
  auto out = b.on_decoded(signed_by(0, pre_prepare(1, {req(1)}, rp), {1, 2, 3}), Time{0});
  auto ups = sent<PpUpdate>(out);
  ASSERT_EQ(ups.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<RandomShare>(ups[0].payload));
  EXPECT_EQ(ups[0].i, 1u);
  EXPECT_TRUE(sent<Prepare>(out).empty());
}

TEST(Backup, ShareOnDeterministicRequestRejected) {
  Fixture fx;
  auto c = fx.config(1, Mode::ba);
  c.oracle = none_randomized();
  Replica b(c);
  RandomShare rp{};
  auto out = b.on_decoded(signed_by(0, pre_prepare(1, {req(1)}, rp), {1, 2, 3}), Time{0});
  EXPECT_TRUE(out.empty());
  EXPECT_EQ(b.stats().dropped_invalid, 1u);
}

TEST(Backup, MissingShareOnRandomizedRequestRejected) {
  Fixture fx;
  Replica b(fx.config(1, Mode::ba));
  auto out = b.on_decoded(signed_by(0, pre_prepare(1, {req(1)}), {1, 2, 3}), Time{0});
  EXPECT_TRUE(out.empty());
  EXPECT_EQ(b.stats().dropped_invalid, 1u);
}

TEST(Backup, ReplayedPrePrepareIsIdempotent) {
  Fixture fx;
  Replica b(fx.config(2, Mode::base));
  auto m = signed_by(0, pre_prepare(1, {req(1)}), {1, 2, 3});
  EXPECT_EQ(sent<Prepare>(b.on_decoded(m, Time{0})).size(), 1u);
  EXPECT_TRUE(b.on_decoded(m, Time{0}).empty());
}

TEST(Backup, BadAuthenticatorDropped) {
  Fixture fx;
  Replica b(fx.config(1, Mode::base));
  auto m = signed_by(0, pre_prepare(1, {req(1)}), {1, 2, 3});
  m.auth.entries[0].mac.bytes[0] ^= 1;
  EXPECT_TRUE(b.on_decoded(m, Time{0}).empty());
  EXPECT_EQ(b.stats().dropped_auth, 1u);
}

TEST(Backup, GarbageBytesCounted) {
  Fixture fx;
  Replica b(fx.config(1, Mode::base));
  Bytes junk{0x02, 0x00};
  EXPECT_TRUE(b.on_message(view(junk), Time{0}).empty());
  EXPECT_EQ(b.stats().dropped_decode, 1u);
}

TEST(Backup, PrepareQuorumEmitsCommit) {
  Fixture fx;
  Replica b(fx.config(1, Mode::base));
  auto pp = pre_prepare(1, {req(1)});
  b.on_decoded(signed_by(0, pp, {1, 2, 3}), Time{0});
  auto out = b.on_decoded(signed_by(2, Prepare{0, 1, 2, pp.d}, {0, 1, 3}), Time{0});
  auto commits = sent<Commit>(out);
  ASSERT_EQ(commits.size(), 1u);
  EXPECT_EQ(commits[0].digest, pp.d);
  EXPECT_TRUE(commits[0].sig_shares.empty());
}

TEST(Backup, PrepareFromPrimaryDoesNotCount) {
  Fixture fx;
  Replica b(fx.config(1, Mode::base));
  auto pp = pre_prepare(1, {req(1)});
  b.on_decoded(signed_by(0, pp, {1, 2, 3}), Time{0});
  auto out = b.on_decoded(signed_by(0, Prepare{0, 1, 0, pp.d}, {1, 2, 3}), Time{0});
  EXPECT_TRUE(sent<Commit>(out).empty());
}

TEST(Delivery, InOrderDrainAndGapBlocks) {
  Fixture fx;
  Replica b(fx.config(1, Mode::base));
  auto order = [&](SeqNum n) {
    auto pp = pre_prepare(n, {req(n)});
    std::vector<Action> out;
    auto add = [&](std::vector<Action> a) { out.insert(out.end(), a.begin(), a.end()); };
    add(b.on_decoded(signed_by(0, pp, {1, 2, 3}), Time{0}));
    add(b.on_decoded(signed_by(2, Prepare{0, n, 2, pp.d}, {0, 1, 3}), Time{0}));
    add(b.on_decoded(signed_by(2, Commit{0, n, 2, pp.d, {}}, {0, 1, 3}), Time{0}));
    add(b.on_decoded(signed_by(3, Commit{0, n, 3, pp.d, {}}, {0, 1, 2}), Time{0}));
    return out;
  };
  auto second = order(2);
  EXPECT_TRUE(all_of<action::Deliver>(second).empty());
  EXPECT_EQ(b.certificate(2)->phase, Phase::committed);
  auto first = order(1);
  auto delivered = all_of<action::Deliver>(first);
  ASSERT_EQ(delivered.size(), 2u);
  EXPECT_EQ(delivered[0].n, 1u);
  EXPECT_EQ(delivered[1].n, 2u);
  EXPECT_EQ(b.last_delivered(), 2u);
  EXPECT_EQ(sent<Reply>(first).size(), 2u);
}

TEST(BaPrimary, BuildsShareSetOfThree) {
  Fixture fx;
  Replica p(fx.config(0, Mode::ba));
  auto out = p.on_decoded(signed_by(kFirstClientId, req(1), {0}), Time{0});
  auto pp = sent<PrePrepare>(out).at(0);
  RandomShare s1{}, s2{};
  s1.bytes.fill(1);
  s2.bytes.fill(2);
  EXPECT_TRUE(sent<PpUpdate>(p.on_decoded(signed_by(1, PpUpdate{0, 1, 1, s1, pp.d}, {0, 2, 3}), Time{0})).empty());
  auto ups = sent<PpUpdate>(p.on_decoded(signed_by(2, PpUpdate{0, 1, 2, s2, pp.d}, {0, 1, 3}), Time{0}));
  ASSERT_EQ(ups.size(), 1u);
  const auto& set = std::get<ShareSet>(ups[0].payload);
  ASSERT_EQ(set.entries.size(), 3u);
  EXPECT_EQ(set.entries[0].replica, 0u);
  EXPECT_EQ(set.entries[0].share, *pp.r_p);
  EXPECT_EQ(set.entries[1].replica, 1u);
  EXPECT_EQ(set.entries[2].replica, 2u);
  EXPECT_EQ(p.certificate(1)->d_prime, bind_random(pp.d, combine(set, 1)));
}

TEST(BaBackup, MissingReferencedShareTriggersFetch) {
  Fixture fx;
  Replica b(fx.config(1, Mode::ba));
  RandomShare rp{}, s2{}, s3{};
  rp.bytes.fill(7);
  s2.bytes.fill(8);
  s3.bytes.fill(9);
  auto pp = pre_prepare(1, {req(1)}, rp);
  auto own = sent<PpUpdate>(b.on_decoded(signed_by(0, pp, {1, 2, 3}), Time{0})).at(0);
  ShareSet set{{{rp, 0}, {std::get<RandomShare>(own.payload), 1}, {s2, 2}}};
  auto out = b.on_decoded(signed_by(0, PpUpdate{0, 1, 0, set, pp.d}, {1, 2, 3}), Time{0});
  auto fetches = all_of<action::RequestRetransmit>(out);
  ASSERT_EQ(fetches.size(), 1u);
  EXPECT_EQ(fetches[0].missing, (std::vector<ReplicaId>{2}));
  EXPECT_EQ(sent<PpFetch>(out).size(), 1u);
  EXPECT_TRUE(sent<Prepare>(out).empty());

  // The forwarded share unblocks the prepare, bound to the combined value.
  out = b.on_decoded(signed_by(2, PpUpdate{0, 1, 2, s2, pp.d}, {0, 1, 3}), Time{0});
  auto prepares = sent<Prepare>(out);
  ASSERT_EQ(prepares.size(), 1u);
  EXPECT_EQ(prepares[0].d_prime, bind_random(pp.d, combine(set, 1)));
}

TEST(BaBackup, EquivocatedShareRejected) {
  Fixture fx;
  Replica b(fx.config(1, Mode::ba));
  RandomShare rp{}, s2{}, forged{};
  s2.bytes.fill(8);
  forged.bytes.fill(0x44);
  auto pp = pre_prepare(1, {req(1)}, rp);
  auto own = sent<PpUpdate>(b.on_decoded(signed_by(0, pp, {1, 2, 3}), Time{0})).at(0);
  b.on_decoded(signed_by(2, PpUpdate{0, 1, 2, s2, pp.d}, {0, 1, 3}), Time{0});
  ShareSet set{{{rp, 0}, {std::get<RandomShare>(own.payload), 1}, {forged, 2}}};
  auto out = b.on_decoded(signed_by(0, PpUpdate{0, 1, 0, set, pp.d}, {1, 2, 3}), Time{0});
  EXPECT_TRUE(sent<Prepare>(out).empty());
  EXPECT_EQ(b.stats().rejected_share_sets, 1u);
  EXPECT_EQ(b.stats().equivocation_evidence, 1u);
}

TEST(BaBackup, WrongSizeShareSetRejected) {
  Fixture fx;
  Replica b(fx.config(1, Mode::ba));
  RandomShare rp{};
  auto pp = pre_prepare(1, {req(1)}, rp);
  auto own = sent<PpUpdate>(b.on_decoded(signed_by(0, pp, {1, 2, 3}), Time{0})).at(0);
  ShareSet set{{{rp, 0}, {std::get<RandomShare>(own.payload), 1}}};
  auto out = b.on_decoded(signed_by(0, PpUpdate{0, 1, 0, set, pp.d}, {1, 2, 3}), Time{0});
  EXPECT_TRUE(sent<Prepare>(out).empty());
  EXPECT_EQ(b.stats().rejected_share_sets, 1u);
}

TEST(Ba, AllZeroSharesBindZero) {
  ClusterConfig cc;
  cc.mode = Mode::ba;
  cc.clients = 1;
  cc.requests_per_client = 1;
  for (ReplicaId r = 0; r < 4; ++r) cc.fixed_entropy[r] = RandomShare{};
  Cluster cluster(cc);
  cluster.run({});
  const auto* cert = cluster.replica(2).certificate(1);
  ASSERT_NE(cert, nullptr);
  Bytes expect(cert->d.bytes.begin(), cert->d.bytes.end());
  expect.resize(64, 0);
  ASSERT_TRUE(cert->d_prime.has_value());
  EXPECT_EQ(Bytes(cert->d_prime->bytes.begin(), cert->d_prime->bytes.end()), oracle::sha256(expect));
}

TEST(Ct, CommitCarriesShareOverDigestAndSeq) {
  Fixture fx;
  Replica b(fx.config(1, Mode::ct));
  auto pp = pre_prepare(1, {req(1)});
  b.on_decoded(signed_by(0, pp, {1, 2, 3}), Time{0});
  auto out = b.on_decoded(signed_by(2, Prepare{0, 1, 2, pp.d}, {0, 1, 3}), Time{0});
  auto commits = sent<Commit>(out);
  ASSERT_EQ(commits.size(), 1u);
  ASSERT_EQ(commits[0].sig_shares.size(), 1u);
  EXPECT_EQ(commits[0].sig_shares[0], fx.share(1, coin_message(batch_digest({req(1)}), 1)));
}

TEST(Ct, TwoValidSharesDeliverWithK2) {
  Fixture fx;
  Replica b(fx.config(1, Mode::ct));
  auto pp = pre_prepare(1, {req(1)});
  const Bytes msg = coin_message(pp.d, 1);
  b.on_decoded(signed_by(0, pp, {1, 2, 3}), Time{0});
  b.on_decoded(signed_by(2, Prepare{0, 1, 2, pp.d}, {0, 1, 3}), Time{0});
  b.on_decoded(signed_by(2, Commit{0, 1, 2, pp.d, {fx.share(2, msg)}}, {0, 1, 3}), Time{0});
  auto bad = fx.share(3, msg);
  bad.value = bad.value * 3 % fx.dealing->key.modulus;
  auto out = b.on_decoded(signed_by(3, Commit{0, 1, 3, pp.d, {bad}}, {0, 1, 2}), Time{0});
  auto delivered = all_of<action::Deliver>(out);
  ASSERT_EQ(delivered.size(), 1u);
  auto sig = threshold::combine(fx.dealing->key, view(msg), {fx.share(0, msg), fx.share(2, msg)});
  EXPECT_EQ(delivered[0].random, random_bytes(threshold::signature_to_random(sig, 32), 32));
}

TEST(Ct, K3WithOneCorruptShareBlocksUntilThirdValidShare) {
  Fixture fx;
  Replica b(fx.config(1, Mode::ct, 3));
  auto pp = pre_prepare(1, {req(1)});
  const Bytes msg = coin_message(pp.d, 1);
  b.on_decoded(signed_by(0, pp, {1, 2, 3}), Time{0});
  b.on_decoded(signed_by(2, Prepare{0, 1, 2, pp.d}, {0, 1, 3}), Time{0});
  b.on_decoded(signed_by(2, Commit{0, 1, 2, pp.d, {fx.share(2, msg)}}, {0, 1, 3}), Time{0});
  auto bad = fx.share(3, msg);
  bad.value = bad.value * 3 % fx.dealing->key.modulus;
  auto out = b.on_decoded(signed_by(3, Commit{0, 1, 3, pp.d, {bad}}, {0, 1, 2}), Time{0});
  EXPECT_EQ(b.certificate(1)->phase, Phase::committed);
  EXPECT_TRUE(all_of<action::Deliver>(out).empty());
  EXPECT_EQ(b.stats().rejected_sig_shares, 1u);

  out = b.on_decoded(signed_by(0, Commit{0, 1, 0, pp.d, {fx.share(0, msg)}}, {1, 2, 3}), Time{0});
  auto delivered = all_of<action::Deliver>(out);
  ASSERT_EQ(delivered.size(), 1u);
  auto sig = threshold::combine(fx.dealing->key, view(msg), {fx.share(0, msg), fx.share(1, msg), fx.share(2, msg)});
  EXPECT_EQ(delivered[0].random, random_bytes(threshold::signature_to_random(sig, 32), 32));
}

TEST(Ct, BatchSharesOneCoinWhenCoinBatchingOn) {
  for (bool coin_batching : {true, false}) {
    ClusterConfig cc;
    cc.mode = Mode::ct;
    cc.batching = true;
    cc.ct_batching = coin_batching;
    cc.clients = 4;
    cc.requests_per_client = 1;
    Cluster cluster(cc);
    auto trace = cluster.run({});
    std::vector<Bytes> randoms;
    for (const auto& d : trace.deliveries)
      if (d.replica == 1 && d.n == 2) randoms.push_back(*d.random);
    ASSERT_EQ(randoms.size(), 3u);
    if (coin_batching) {
      EXPECT_EQ(randoms[0], randoms[1]);
      EXPECT_EQ(randoms[1], randoms[2]);
    } else {
      EXPECT_NE(randoms[0], randoms[1]);
      EXPECT_NE(randoms[1], randoms[2]);
    }
    EXPECT_TRUE(check_safety(trace, cluster.correct_replicas()).ok());
  }
}

TEST(Client, DuplicateRequestGetsCachedReply) {
  Fixture fx;
  Replica b(fx.config(1, Mode::base));
  auto pp = pre_prepare(1, {req(1)});
  b.on_decoded(signed_by(0, pp, {1, 2, 3}), Time{0});
  b.on_decoded(signed_by(2, Prepare{0, 1, 2, pp.d}, {0, 1, 3}), Time{0});
  b.on_decoded(signed_by(2, Commit{0, 1, 2, pp.d, {}}, {0, 1, 3}), Time{0});
  auto first = sent<Reply>(b.on_decoded(signed_by(3, Commit{0, 1, 3, pp.d, {}}, {0, 1, 2}), Time{0}));
  ASSERT_EQ(first.size(), 1u);
  auto again = b.on_decoded(signed_by(kFirstClientId, req(1), {0, 1, 2, 3}), Time{0});
  auto replies = sent<Reply>(again);
  ASSERT_EQ(replies.size(), 1u);
  EXPECT_EQ(replies[0], first[0]);
  EXPECT_TRUE(all_of<action::Deliver>(again).empty());
}

TEST(Timeouts, ForwardedRequestTimesOutAndDoubles) {
  Fixture fx;
  auto c = fx.config(2, Mode::base);
  c.timeout_base = std::chrono::milliseconds(100);
  Replica b(c);
  auto out = b.on_decoded(signed_by(kFirstClientId, req(1), {0, 1, 2, 3}), Time{0});
  auto forwarded = all_of<action::Send>(out);
  ASSERT_EQ(forwarded.size(), 1u);
  EXPECT_EQ(forwarded[0].to, (std::vector<Principal>{0}));
  auto timers = all_of<action::StartTimer>(out);
  ASSERT_EQ(timers.size(), 1u);
  EXPECT_EQ(timers[0].duration, std::chrono::milliseconds(100));

  auto fired = b.on_timer(timers[0].id, Time{0});
  auto signal = all_of<action::ViewChangeSignal>(fired);
  ASSERT_EQ(signal.size(), 1u);
  EXPECT_EQ(signal[0].next_view, 1u);
  EXPECT_EQ(signal[0].next_timeout, std::chrono::milliseconds(200));
  auto next = all_of<action::StartTimer>(fired).at(0);

  auto again = b.on_timer(next.id, Time{0});
  EXPECT_EQ(all_of<action::ViewChangeSignal>(again).at(0).next_timeout, std::chrono::milliseconds(400));
  EXPECT_EQ(b.current_timeout(), std::chrono::milliseconds(400));
}

TEST(Timeouts, DeliveredRequestTimerIsStale) {
  Fixture fx;
  Replica b(fx.config(1, Mode::base));
  auto out = b.on_decoded(signed_by(kFirstClientId, req(1), {0, 1, 2, 3}), Time{0});
  auto timer = all_of<action::StartTimer>(out).at(0);
  auto pp = pre_prepare(1, {req(1)});
  b.on_decoded(signed_by(0, pp, {1, 2, 3}), Time{0});
  b.on_decoded(signed_by(2, Prepare{0, 1, 2, pp.d}, {0, 1, 3}), Time{0});
  b.on_decoded(signed_by(2, Commit{0, 1, 2, pp.d, {}}, {0, 1, 3}), Time{0});
  b.on_decoded(signed_by(3, Commit{0, 1, 3, pp.d, {}}, {0, 1, 2}), Time{0});
  EXPECT_TRUE(b.on_timer(timer.id, Time{0}).empty());
  EXPECT_EQ(b.stats().view_change_signals, 0u);
}

TEST(Mode, NamesRoundTrip) {
  for (auto m : {Mode::base, Mode::ba, Mode::ct}) EXPECT_EQ(parse_mode(mode_name(m)), m);
  EXPECT_THROW(parse_mode("pbft"), ConfigError);
}
