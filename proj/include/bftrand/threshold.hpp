#pragma once

// (k, l) threshold RSA signatures after Shoup ("Practical Threshold Signatures", EUROCRYPT 2000),
// with non-interactive equality-of-discrete-log proofs on every share.

#include <gmpxx.h>

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "bftrand/bytes.hpp"

namespace bftrand::threshold {

inline constexpr unsigned kSupportedKeyBits[] = {64, 128, 256, 512, 1024};

struct GroupKey {
  mpz_class modulus;        // N = p q, p = 2p'+1, q = 2q'+1
  mpz_class exponent;       // e, prime, e > l
  mpz_class verifier;       // v, a generator of the squares mod N
  std::vector<mpz_class> share_verifiers;  // v_i = v^{s_i}, index i-1 for holder i
  unsigned k = 0;
  unsigned l = 0;
  unsigned key_bits = 0;

  /// l! as used in the share exponent and the Lagrange coefficients.
  mpz_class delta() const;
  bool operator==(const GroupKey&) const = default;
};

struct KeyShare {
  unsigned holder = 0;  // 1-indexed
  mpz_class secret;     // s_i = f(i) mod p'q'
  bool operator==(const KeyShare&) const = default;
};

struct SignatureShare {
  unsigned holder = 0;
  mpz_class value;      // x_i = x^{2 delta s_i} mod N
  mpz_class challenge;  // proof (c, z)
  mpz_class response;
  bool operator==(const SignatureShare&) const = default;
};

struct GroupSignature {
  mpz_class value;
  bool operator==(const GroupSignature&) const = default;
};

/// Factorization and exponents known only to the dealer. Tests use it as an oracle.
struct DealerSecret {
  mpz_class p, q;
  mpz_class order;             // m = p'q'
  mpz_class signing_exponent;  // d = e^{-1} mod m
};

struct Dealing {
  GroupKey key;
  std::vector<KeyShare> shares;
  DealerSecret secret;
};

struct InsufficientShares : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Trusted-dealer key generation, deterministic in `seed`. Requires 1 <= k <= l and a supported key size.
Dealing deal(unsigned k, unsigned l, unsigned key_bits, std::uint64_t seed);

/// Message hashed into Z_N^* by counter-mode SHA-256 expansion.
mpz_class hash_to_group(const GroupKey& gk, ByteView msg);

/// Share over msg with a proof whose nonce is derived from (share, msg).
SignatureShare sign_share(const GroupKey& gk, const KeyShare& ks, ByteView msg);

bool verify_share(const GroupKey& gk, ByteView msg, const SignatureShare& s);

/// Verifies every share, then interpolates the first k distinct valid ones.
/// Throws InsufficientShares when fewer than k distinct holders pass verification.
GroupSignature combine(const GroupKey& gk, ByteView msg, const std::vector<SignatureShare>& shares);

/// Interpolation in the exponent over exactly the shares given, without checks on count or validity.
GroupSignature interpolate(const GroupKey& gk, ByteView msg, const std::vector<SignatureShare>& shares);

bool verify_signature(const GroupKey& gk, ByteView msg, const GroupSignature& sig);

enum class MapHash { sha1, sha256 };

/// Hash of the big-endian signature bytes, truncated to its leading `bits` (8/16/32/64).
std::uint64_t signature_to_random(const GroupSignature& sig, unsigned bits, MapHash hash = MapHash::sha1);

Bytes to_bytes(const mpz_class& v);
mpz_class from_bytes(ByteView b);

/// Text records, one per line, `field=value` pairs with hex-encoded integers.
void write_group_key(std::ostream& os, const GroupKey& gk);
void write_key_share(std::ostream& os, const KeyShare& ks);

struct KeyRecords {
  GroupKey key;
  std::vector<KeyShare> shares;
};

/// Reads what the writers produced; share records are optional. Throws ParameterError on malformed input.
KeyRecords read_records(std::istream& is);

}  // namespace bftrand::threshold
