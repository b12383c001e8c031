#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <stdexcept>
#include <variant>
#include <vector>

#include "bftrand/bytes.hpp"
#include "bftrand/ids.hpp"

namespace bftrand {

/// A replica's 32-byte entropy contribution.
struct RandomShare {
  Block32 bytes{};
  bool operator==(const RandomShare&) const = default;
};

struct ShareEntry {
  RandomShare share;
  ReplicaId replica = 0;
  bool operator==(const ShareEntry&) const = default;
};

/// The primary's agreed set of 2f+1 (share, replica) tuples.
struct ShareSet {
  std::vector<ShareEntry> entries;
  bool operator==(const ShareSet&) const = default;
};

/// Exclusive-or of every share in a ShareSet.
struct CombinedRandom {
  Block32 bytes{};
  bool operator==(const CombinedRandom&) const = default;
};

struct EntropyExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShareSetError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Where a replica draws its shares from. Single owner; a stream.
class EntropySource {
 public:
  struct OsEntropy {};
  struct Seeded {
    std::uint64_t seed = 0;
  };
  struct Scripted {
    std::vector<RandomShare> shares;
  };

  static EntropySource os() { return EntropySource(OsEntropy{}); }
  static EntropySource seeded(std::uint64_t seed) { return EntropySource(Seeded{seed}); }
  static EntropySource scripted(std::vector<RandomShare> shares) {
    return EntropySource(Scripted{std::move(shares)});
  }
  /// Returns the same bytes forever. Models a replica that replaced its source with a constant.
  static EntropySource constant(RandomShare share) {
    EntropySource s(Scripted{{share}});
    s.kind_ = Kind::constant;
    return s;
  }

  /// Next 32 bytes. Throws EntropyExhausted when a scripted source runs out.
  RandomShare extract_share();

 private:
  explicit EntropySource(OsEntropy);
  explicit EntropySource(Seeded s);
  explicit EntropySource(Scripted s);

  enum class Kind { os, seeded, scripted, constant } kind_;
  std::mt19937_64 prng_;
  std::deque<RandomShare> script_;
};

/// Validates the ShareSet (exactly 2f+1 entries, distinct replicas) and XORs the shares.
CombinedRandom combine(const ShareSet& set, std::uint32_t f);
/// XOR with no size validation; used where the caller already holds a checked set.
CombinedRandom xor_shares(const std::vector<ShareEntry>& entries);

/// Leading bits of a 32-byte value, read big-endian. bits must be 8, 16, 32 or 64.
std::uint64_t truncate_bits(ByteView value, unsigned bits);
inline std::uint64_t truncate(const CombinedRandom& r, unsigned bits) {
  return truncate_bits(view(r.bytes), bits);
}

/// Big-endian encoding of a truncated value using bits/8 bytes.
Bytes random_bytes(std::uint64_t value, unsigned bits);

}  // namespace bftrand
