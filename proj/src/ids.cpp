#include "bftrand/ids.hpp"

#include <string>

namespace bftrand {

QuorumSpec quorums_for(std::uint32_t f, std::uint32_t k) {
  if (f < 1) throw ConfigError("f must be at least 1");
  if (k < f + 1 || k > 2 * f + 1)
    throw ConfigError("threshold k=" + std::to_string(k) + " outside [f+1, 2f+1] for f=" + std::to_string(f));
  QuorumSpec q;
  q.f = f;
  q.n_replicas = 3 * f + 1;
  q.prepare_quorum = 2 * f;
  q.commit_quorum = 2 * f + 1;
  q.pp_update_quorum = 2 * f;
  q.reply_quorum = f + 1;
  q.ct_threshold = k;
  return q;
}

ReplicaId primary_of(View v, std::uint32_t n_replicas) {
  if (n_replicas < 4 || n_replicas % 3 != 1)
    throw ConfigError("replica count must be 3f+1 with f >= 1, got " + std::to_string(n_replicas));
  return static_cast<ReplicaId>(v % n_replicas);
}

}  // namespace bftrand
