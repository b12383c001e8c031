#include "bftrand/client.hpp"

#include <algorithm>

namespace bftrand {

Client::Client(ClientConfig cfg) : cfg_(std::move(cfg)), keys_(cfg_.root_secret, cfg_.id), meter_(cfg_.costs, 0, 0) {
  if (cfg_.id < kFirstClientId) throw ConfigError("client ids start at kFirstClientId");
}

Bytes Client::workload_payload() const {
  Bytes out(cfg_.payload_bytes);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint8_t>((issued_ + i) & 0xff);
  return out;
}

std::vector<Action> Client::on_start(Time now) {
  meter_.reset();
  if (cfg_.requests == 0 || busy()) return {};
  return issue(workload_payload(), now);
}

std::vector<Action> Client::issue(Bytes payload, Time now) {
  if (busy()) throw ClientBusy("client already has an outstanding request");
  PendingRequest p;
  p.request = Request{cfg_.id, next_timestamp_++, std::move(payload)};
  p.issued_at = now;
  p.timer = next_timer_++;
  ++issued_;

  std::vector<SessionKey> keys;
  for (ReplicaId r = 0; r < cfg_.quorums.n_replicas; ++r) keys.push_back(keys_.outbound(r));
  meter_.charge(CryptoOp::auth_gen);
  Message m{p.request, authenticator_sign(keys, view(encode_body(p.request)))};
  std::vector<Action> out;
  out.push_back(action::Send{{primary_of(0, cfg_.quorums.n_replicas)}, std::move(m), meter_.elapsed()});
  out.push_back(action::StartTimer{p.timer, cfg_.retransmit_timeout});
  pending_ = std::move(p);
  return out;
}

std::optional<action::Accept> Client::on_reply(const Message& m, Time now) {
  const auto* reply = std::get_if<Reply>(&m.body);
  if (reply == nullptr || reply->client != cfg_.id || reply->i >= cfg_.quorums.n_replicas) {
    ++stats_.dropped;
    return std::nullopt;
  }

  const bool for_pending = pending_ && reply->timestamp == pending_->request.timestamp;
  const bool for_accepted = last_accepted_ && reply->timestamp == last_accepted_->timestamp;
  if (!for_pending && !for_accepted) return std::nullopt;
  if (for_pending && pending_->replies.count(reply->i) != 0) return std::nullopt;

  meter_.charge(CryptoOp::mac_verify);
  if (!authenticator_verify(keys_.inbound(reply->i), view(encode_body(m.body)), m.auth, cfg_.id)) {
    ++stats_.dropped;
    return std::nullopt;
  }

  if (!for_pending) {
    // Late reply for the request already accepted: only useful as evidence.
    if (reply->result != last_accepted_->result || reply->random != last_accepted_->random)
      ++stats_.mismatched_replies;
    return std::nullopt;
  }

  auto& replies = pending_->replies;
  replies[reply->i] = {reply->result, reply->random};
  auto matching = std::count_if(replies.begin(), replies.end(), [&](const auto& r) {
    return r.second.first == reply->result && r.second.second == reply->random;
  });
  if (static_cast<std::uint32_t>(matching) < cfg_.quorums.reply_quorum) return std::nullopt;

  for (const auto& [id, value] : replies)
    if (value.first != reply->result || value.second != reply->random) ++stats_.mismatched_replies;

  action::Accept acc{cfg_.id, reply->timestamp, reply->result, reply->random, now - pending_->issued_at};
  ++stats_.accepted;
  last_accepted_ = acc;
  pending_.reset();
  return acc;
}

std::vector<Action> Client::on_message(ByteView bytes, Time now) {
  meter_.reset();
  std::vector<Action> out;
  Message m;
  try {
    m = decode(bytes);
  } catch (const DecodeError&) {
    ++stats_.dropped;
    return out;
  }
  auto accepted = on_reply(m, now);
  if (!accepted) return out;
  out.push_back(*accepted);
  if (issued_ < cfg_.requests) {
    auto next = issue(workload_payload(), now);
    out.insert(out.end(), std::make_move_iterator(next.begin()), std::make_move_iterator(next.end()));
  }
  return out;
}

std::vector<Action> Client::on_timer(TimerId timer, Time) {
  meter_.reset();
  std::vector<Action> out;
  if (!pending_ || pending_->timer != timer) return out;
  // No reply in time: send to every replica so backups can push the request to the primary.
  ++stats_.retransmissions;
  std::vector<SessionKey> keys;
  std::vector<Principal> targets;
  for (ReplicaId r = 0; r < cfg_.quorums.n_replicas; ++r) {
    keys.push_back(keys_.outbound(r));
    targets.push_back(r);
  }
  meter_.charge(CryptoOp::auth_gen);
  Message m{pending_->request, authenticator_sign(keys, view(encode_body(pending_->request)))};
  out.push_back(action::Send{std::move(targets), std::move(m), meter_.elapsed()});
  pending_->timer = next_timer_++;
  out.push_back(action::StartTimer{pending_->timer, cfg_.retransmit_timeout});
  return out;
}

}  // namespace bftrand
