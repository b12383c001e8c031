#include "bftrand/message.hpp"

#include <limits>

namespace bftrand {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void put_block(Writer& w, const Block32& b) { w.bytes(view(b)); }

void put_int(Writer& w, const mpz_class& v) { w.bytes(view(threshold::to_bytes(v))); }

mpz_class get_int(Reader& r) {
  auto b = r.bytes();
  if (!b.empty() && b.front() == 0) throw DecodeError("non-canonical integer encoding");
  return threshold::from_bytes(view(b));
}

ReplicaId get_replica(Reader& r) {
  auto v = r.u64();
  if (v > std::numeric_limits<ReplicaId>::max()) throw DecodeError("replica id out of range");
  return static_cast<ReplicaId>(v);
}

/// Element count, bounded by the bytes left so hostile counts cannot force large allocations.
std::size_t get_count(Reader& r, std::size_t min_element_size) {
  auto c = r.u64();
  if (c > r.remaining() / min_element_size) throw DecodeError("element count exceeds input size");
  return static_cast<std::size_t>(c);
}

void put_request_fields(Writer& w, const Request& q) {
  w.u64(q.client);
  w.u64(q.timestamp);
  w.bytes(view(q.payload));
}

Request get_request_fields(Reader& r) {
  Request q;
  q.client = r.u64();
  q.timestamp = r.u64();
  q.payload = r.bytes();
  return q;
}

void put_share_set(Writer& w, const ShareSet& s) {
  w.u64(s.entries.size());
  for (const auto& e : s.entries) {
    put_block(w, e.share.bytes);
    w.u64(e.replica);
  }
}

ShareSet get_share_set(Reader& r) {
  ShareSet s;
  auto count = get_count(r, 4 + 32 + 8);
  for (std::size_t i = 0; i < count; ++i) {
    ShareEntry e;
    e.share.bytes = r.block32();
    e.replica = get_replica(r);
    s.entries.push_back(e);
  }
  return s;
}

void put_sig_share(Writer& w, const threshold::SignatureShare& s) {
  w.u64(s.holder);
  put_int(w, s.value);
  put_int(w, s.challenge);
  put_int(w, s.response);
}

threshold::SignatureShare get_sig_share(Reader& r) {
  threshold::SignatureShare s;
  auto holder = r.u64();
  if (holder > std::numeric_limits<unsigned>::max()) throw DecodeError("share holder out of range");
  s.holder = static_cast<unsigned>(holder);
  s.value = get_int(r);
  s.challenge = get_int(r);
  s.response = get_int(r);
  return s;
}

void encode_body_into(Writer& w, const Body& body) {
  w.u8(static_cast<std::uint8_t>(tag_of(body)));
  std::visit(overloaded{
                 [&](const Request& m) { put_request_fields(w, m); },
                 [&](const PrePrepare& m) {
                   w.u64(m.v);
                   w.u64(m.n);
                   put_block(w, m.d.bytes);
                   w.boolean(m.r_p.has_value());
                   if (m.r_p) put_block(w, m.r_p->bytes);
                   w.u64(m.requests.size());
                   for (const auto& q : m.requests) put_request_fields(w, q);
                 },
                 [&](const PpUpdate& m) {
                   w.u64(m.v);
                   w.u64(m.n);
                   w.u64(m.i);
                   if (const auto* share = std::get_if<RandomShare>(&m.payload)) {
                     w.u8(0);
                     put_block(w, share->bytes);
                   } else {
                     w.u8(1);
                     put_share_set(w, std::get<ShareSet>(m.payload));
                   }
                   put_block(w, m.d.bytes);
                 },
                 [&](const Prepare& m) {
                   w.u64(m.v);
                   w.u64(m.n);
                   w.u64(m.i);
                   put_block(w, m.d_prime.bytes);
                 },
                 [&](const Commit& m) {
                   w.u64(m.v);
                   w.u64(m.n);
                   w.u64(m.i);
                   put_block(w, m.digest.bytes);
                   w.u64(m.sig_shares.size());
                   for (const auto& s : m.sig_shares) put_sig_share(w, s);
                 },
                 [&](const Reply& m) {
                   w.u64(m.v);
                   w.u64(m.client);
                   w.u64(m.timestamp);
                   w.u64(m.i);
                   w.bytes(view(m.result));
                   w.boolean(m.random.has_value());
                   if (m.random) w.bytes(view(*m.random));
                 },
                 [&](const PpFetch& m) {
                   w.u64(m.v);
                   w.u64(m.n);
                   w.u64(m.i);
                   w.u64(m.missing.size());
                   for (auto id : m.missing) w.u64(id);
                 },
             },
             body);
}

Body decode_body(Reader& r) {
  auto tag = static_cast<Tag>(r.u8());
  switch (tag) {
    case Tag::request:
      return get_request_fields(r);
    case Tag::pre_prepare: {
      PrePrepare m;
      m.v = r.u64();
      m.n = r.u64();
      m.d.bytes = r.block32();
      if (r.boolean()) m.r_p = RandomShare{r.block32()};
      auto count = get_count(r, 20);
      for (std::size_t i = 0; i < count; ++i) m.requests.push_back(get_request_fields(r));
      return m;
    }
    case Tag::pp_update: {
      PpUpdate m;
      m.v = r.u64();
      m.n = r.u64();
      m.i = get_replica(r);
      switch (r.u8()) {
        case 0:
          m.payload = RandomShare{r.block32()};
          break;
        case 1:
          m.payload = get_share_set(r);
          break;
        default:
          throw DecodeError("unknown pp-update payload kind");
      }
      m.d.bytes = r.block32();
      return m;
    }
    case Tag::prepare: {
      Prepare m;
      m.v = r.u64();
      m.n = r.u64();
      m.i = get_replica(r);
      m.d_prime.bytes = r.block32();
      return m;
    }
    case Tag::commit: {
      Commit m;
      m.v = r.u64();
      m.n = r.u64();
      m.i = get_replica(r);
      m.digest.bytes = r.block32();
      auto count = get_count(r, 8 + 3 * 4);
      for (std::size_t i = 0; i < count; ++i) m.sig_shares.push_back(get_sig_share(r));
      return m;
    }
    case Tag::reply: {
      Reply m;
      m.v = r.u64();
      m.client = r.u64();
      m.timestamp = r.u64();
      m.i = get_replica(r);
      m.result = r.bytes();
      if (r.boolean()) m.random = r.bytes();
      return m;
    }
    case Tag::pp_fetch: {
      PpFetch m;
      m.v = r.u64();
      m.n = r.u64();
      m.i = get_replica(r);
      auto count = get_count(r, 8);
      for (std::size_t i = 0; i < count; ++i) m.missing.push_back(get_replica(r));
      return m;
    }
  }
  throw DecodeError("unknown message tag");
}

}  // namespace

Tag tag_of(const Body& b) {
  return std::visit(overloaded{
                        [](const Request&) { return Tag::request; },
                        [](const PrePrepare&) { return Tag::pre_prepare; },
                        [](const PpUpdate&) { return Tag::pp_update; },
                        [](const Prepare&) { return Tag::prepare; },
                        [](const Commit&) { return Tag::commit; },
                        [](const Reply&) { return Tag::reply; },
                        [](const PpFetch&) { return Tag::pp_fetch; },
                    },
                    b);
}

const char* tag_name(Tag t) {
  switch (t) {
    case Tag::request: return "request";
    case Tag::pre_prepare: return "pre-prepare";
    case Tag::pp_update: return "pp-update";
    case Tag::prepare: return "prepare";
    case Tag::commit: return "commit";
    case Tag::reply: return "reply";
    case Tag::pp_fetch: return "pp-fetch";
  }
  return "unknown";
}

Principal sender_of(const Body& b, std::uint32_t n_replicas) {
  return std::visit(overloaded{
                        [](const Request& m) -> Principal { return m.client; },
                        [&](const PrePrepare& m) -> Principal { return primary_of(m.v, n_replicas); },
                        [](const PpUpdate& m) -> Principal { return m.i; },
                        [](const Prepare& m) -> Principal { return m.i; },
                        [](const Commit& m) -> Principal { return m.i; },
                        [](const Reply& m) -> Principal { return m.i; },
                        [](const PpFetch& m) -> Principal { return m.i; },
                    },
                    b);
}

Bytes encode_body(const Body& b) {
  Writer w;
  encode_body_into(w, b);
  return std::move(w).take();
}

Bytes encode(const Message& m) {
  Writer w;
  encode_body_into(w, m.body);
  w.u64(m.auth.entries.size());
  for (const auto& e : m.auth.entries) {
    w.u64(e.target);
    put_block(w, e.mac.bytes);
  }
  return std::move(w).take();
}

Message decode(ByteView bytes) {
  if (bytes.empty()) throw DecodeError("empty message");
  Reader r(bytes);
  Message m;
  m.body = decode_body(r);
  auto count = get_count(r, 8 + 4 + 32);
  for (std::size_t i = 0; i < count; ++i) {
    AuthEntry e;
    e.target = r.u64();
    e.mac.bytes = r.block32();
    m.auth.entries.push_back(e);
  }
  r.expect_end();
  return m;
}

Digest batch_digest(const std::vector<Request>& requests) {
  Writer w;
  for (const auto& q : requests) w.fixed(view(encode_body(q)));
  return sha256(view(w.data()));
}

Digest bind_random(const Digest& d, const CombinedRandom& r) {
  return sha256(view(concat(view(d.bytes), view(r.bytes))));
}

Bytes coin_message(const Digest& d, SeqNum n) {
  Writer w;
  w.fixed(view(d.bytes));
  w.u64(n);
  return std::move(w).take();
}

}  // namespace bftrand
