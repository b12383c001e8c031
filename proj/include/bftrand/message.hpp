#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "bftrand/authcrypt.hpp"
#include "bftrand/bytes.hpp"
#include "bftrand/entropy.hpp"
#include "bftrand/ids.hpp"
#include "bftrand/threshold.hpp"

namespace bftrand {

struct Request {
  ClientId client = 0;
  std::uint64_t timestamp = 0;  // opaque, monotonic per client; dedup only
  Bytes payload;
  bool operator==(const Request&) const = default;
};

struct PrePrepare {
  View v = 0;
  SeqNum n = 0;
  Digest d;
  std::optional<RandomShare> r_p;
  std::vector<Request> requests;  // the ordered batch; d is its digest
  bool operator==(const PrePrepare&) const = default;
};

struct PpUpdate {
  View v = 0;
  SeqNum n = 0;
  ReplicaId i = 0;
  std::variant<RandomShare, ShareSet> payload;
  Digest d;
  bool operator==(const PpUpdate&) const = default;
};

struct Prepare {
  View v = 0;
  SeqNum n = 0;
  ReplicaId i = 0;
  Digest d_prime;
  bool operator==(const Prepare&) const = default;
};

struct Commit {
  View v = 0;
  SeqNum n = 0;
  ReplicaId i = 0;
  Digest digest;
  // One share per coin needed by the batch; empty outside the coin-tossing mode.
  std::vector<threshold::SignatureShare> sig_shares;
  bool operator==(const Commit&) const = default;
};

struct Reply {
  View v = 0;
  ClientId client = 0;
  std::uint64_t timestamp = 0;
  ReplicaId i = 0;
  Bytes result;
  std::optional<Bytes> random;
  bool operator==(const Reply&) const = default;
};

/// A backup asking the primary to forward pp-update messages it has not seen.
struct PpFetch {
  View v = 0;
  SeqNum n = 0;
  ReplicaId i = 0;
  std::vector<ReplicaId> missing;
  bool operator==(const PpFetch&) const = default;
};

using Body = std::variant<Request, PrePrepare, PpUpdate, Prepare, Commit, Reply, PpFetch>;

enum class Tag : std::uint8_t {
  request = 1,
  pre_prepare = 2,
  pp_update = 3,
  prepare = 4,
  commit = 5,
  reply = 6,
  pp_fetch = 7,
};

struct Message {
  Body body;
  Authenticator auth;
  bool operator==(const Message&) const = default;
};

Tag tag_of(const Body& b);
const char* tag_name(Tag t);

/// Principal that must have produced the body: client for requests, replica field otherwise,
/// primary_of(v) for pre-prepares.
Principal sender_of(const Body& b, std::uint32_t n_replicas);

/// Canonical body bytes; the authenticator covers exactly these.
Bytes encode_body(const Body& b);
/// Body bytes followed by the authenticator trailer.
Bytes encode(const Message& m);
/// Throws DecodeError on an empty buffer, unknown tag, truncation or trailing bytes.
Message decode(ByteView bytes);

/// Digest of an ordered batch: SHA-256 over the concatenated request encodings.
Digest batch_digest(const std::vector<Request>& requests);
/// d' = SHA-256(d || combined random).
Digest bind_random(const Digest& d, const CombinedRandom& r);
/// Message signed by the coin-tossing path: d || n, with n as 8 bytes big-endian.
Bytes coin_message(const Digest& d, SeqNum n);

}  // namespace bftrand
