#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bftrand/bytes.hpp"
#include "bftrand/ids.hpp"

namespace bftrand {

Digest sha256(ByteView data);
/// 20-byte SHA-1 digest. Only used to map group signatures to numbers.
Bytes sha1(ByteView data);

struct Mac {
  Block32 bytes{};
  bool operator==(const Mac&) const = default;
};

/// Symmetric key shared by an ordered (sender, receiver) pair.
struct SessionKey {
  Block32 key{};
  Principal peer = 0;
  std::uint64_t epoch = 0;
};

struct AuthEntry {
  Principal target = 0;
  Mac mac;
  bool operator==(const AuthEntry&) const = default;
};

/// One MAC per multicast target. A point-to-point MAC is an authenticator with one entry.
struct Authenticator {
  std::vector<AuthEntry> entries;
  bool operator==(const Authenticator&) const = default;
};

/// HMAC-SHA-256 over a key of any length.
Block32 hmac_sha256(ByteView key, ByteView data);

/// HMAC-SHA-256 with the full 32-byte tag.
Mac mac_sign(const SessionKey& key, ByteView payload);
bool mac_verify(const SessionKey& key, ByteView payload, const Mac& mac);

/// Throws std::invalid_argument on an empty key list or a repeated target.
Authenticator authenticator_sign(const std::vector<SessionKey>& keys, ByteView payload);

/// True iff the entry for self_id exists and matches. Other entries are ignored.
bool authenticator_verify(const SessionKey& self_key, ByteView payload, const Authenticator& a,
                          Principal self_id);

/// Derives pairwise session keys from a root secret: HMAC(root, sender || receiver || epoch).
class KeyRing {
 public:
  KeyRing(Block32 root, Principal self, std::uint64_t epoch = 0)
      : root_(root), self_(self), epoch_(epoch) {}

  Principal self() const { return self_; }
  std::uint64_t epoch() const { return epoch_; }

  /// Key for messages this principal sends to `receiver`.
  SessionKey outbound(Principal receiver) const;
  /// Key for messages `sender` sends to this principal.
  SessionKey inbound(Principal sender) const;

  /// Moves every derived key to the next epoch. No schedule drives this.
  void bump_epoch() { ++epoch_; }

 private:
  SessionKey derive(Principal sender, Principal receiver) const;

  Block32 root_;
  Principal self_;
  std::uint64_t epoch_;
};

}  // namespace bftrand
