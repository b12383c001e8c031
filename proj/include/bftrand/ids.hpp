#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>

#include "bftrand/bytes.hpp"

namespace bftrand {

using ReplicaId = std::uint32_t;
using View = std::uint64_t;
using SeqNum = std::uint64_t;
using ClientId = std::uint64_t;

/// Any authenticated party. Replicas occupy [0, n_replicas); clients start at kFirstClientId.
using Principal = std::uint64_t;
inline constexpr Principal kFirstClientId = 1u << 20;

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// SHA-256 output.
struct Digest {
  Block32 bytes{};
  auto operator<=>(const Digest&) const = default;
};

/// Vote thresholds derived from the fault bound f and the coin-tossing threshold k.
struct QuorumSpec {
  std::uint32_t f = 1;
  std::uint32_t n_replicas = 4;       // l = 3f+1
  std::uint32_t prepare_quorum = 2;   // 2f
  std::uint32_t commit_quorum = 3;    // 2f+1
  std::uint32_t pp_update_quorum = 2; // 2f
  std::uint32_t reply_quorum = 2;     // f+1
  std::uint32_t ct_threshold = 2;     // k in [f+1, 2f+1]

  bool operator==(const QuorumSpec&) const = default;
};

QuorumSpec quorums_for(std::uint32_t f, std::uint32_t k);

/// Primary of view v: v mod n_replicas. Requires n_replicas = 3f+1 with f >= 1.
ReplicaId primary_of(View v, std::uint32_t n_replicas);

}  // namespace bftrand
