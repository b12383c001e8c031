#include "bftrand/authcrypt.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <algorithm>
#include <set>
#include <stdexcept>

namespace bftrand {

Digest sha256(ByteView data) {
  Digest d;
  SHA256(data.data(), data.size(), d.bytes.data());
  return d;
}

Bytes sha1(ByteView data) {
  Bytes out(SHA_DIGEST_LENGTH);
  SHA1(data.data(), data.size(), out.data());
  return out;
}

Block32 hmac_sha256(ByteView key, ByteView data) {
  Block32 out{};
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(), out.data(), &len);
  if (len != out.size()) throw std::runtime_error("HMAC-SHA-256 returned an unexpected length");
  return out;
}

Mac mac_sign(const SessionKey& key, ByteView payload) { return Mac{hmac_sha256(view(key.key), payload)}; }

bool mac_verify(const SessionKey& key, ByteView payload, const Mac& mac) {
  auto expected = mac_sign(key, payload);
  return CRYPTO_memcmp(expected.bytes.data(), mac.bytes.data(), expected.bytes.size()) == 0;
}

Authenticator authenticator_sign(const std::vector<SessionKey>& keys, ByteView payload) {
  if (keys.empty()) throw std::invalid_argument("authenticator needs at least one target");
  std::set<Principal> seen;
  Authenticator a;
  a.entries.reserve(keys.size());
  for (const auto& k : keys) {
    if (!seen.insert(k.peer).second) throw std::invalid_argument("duplicate authenticator target");
    a.entries.push_back({k.peer, mac_sign(k, payload)});
  }
  return a;
}

bool authenticator_verify(const SessionKey& self_key, ByteView payload, const Authenticator& a,
                          Principal self_id) {
  auto it = std::find_if(a.entries.begin(), a.entries.end(),
                         [&](const AuthEntry& e) { return e.target == self_id; });
  if (it == a.entries.end()) return false;
  return mac_verify(self_key, payload, it->mac);
}

SessionKey KeyRing::derive(Principal sender, Principal receiver) const {
  Writer w;
  w.u64(sender);
  w.u64(receiver);
  w.u64(epoch_);
  SessionKey root{root_, 0, 0};
  SessionKey k;
  k.key = mac_sign(root, view(w.data())).bytes;
  k.epoch = epoch_;
  return k;
}

SessionKey KeyRing::outbound(Principal receiver) const {
  auto k = derive(self_, receiver);
  k.peer = receiver;
  return k;
}

SessionKey KeyRing::inbound(Principal sender) const {
  auto k = derive(sender, self_);
  k.peer = sender;
  return k;
}

}  // namespace bftrand
