#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bftrand/byzantine.hpp"
#include "bftrand/client.hpp"
#include "bftrand/replica.hpp"
#include "bftrand/sim.hpp"
#include "bftrand/threshold.hpp"

namespace bftrand {

/// 3f+1 replicas plus closed-loop clients wired into one simulator.
struct ClusterConfig {
  Mode mode = Mode::base;
  std::uint32_t f = 1;
  std::uint32_t k = 0;          // 0 means f+1
  unsigned key_bits = 64;       // key size charged from the cost table
  unsigned crypto_key_bits = 64;  // key size actually dealt and computed with
  bool batching = false;
  bool ct_batching = false;
  std::size_t max_batch = 64;
  std::size_t window = 1;
  std::uint64_t seed = 1;
  unsigned clients = 1;
  std::uint64_t requests_per_client = 1;
  std::size_t payload_bytes = 1024;
  sim::LatencyModel latency;
  CostTable costs;
  Duration timeout_base = std::chrono::seconds(1);
  Duration client_timeout = std::chrono::seconds(2);
  AppOracle oracle = all_randomized();
  threshold::MapHash map_hash = threshold::MapHash::sha1;
  std::vector<FaultSpec> faults;
  bool os_entropy = false;                          // honest replicas draw from the OS
  std::map<ReplicaId, RandomShare> fixed_entropy;   // honest replicas pinned to a constant share
  std::shared_ptr<const threshold::Dealing> dealing;  // reused when set

  std::uint32_t threshold() const { return k == 0 ? f + 1 : k; }
};

/// Builds the replicas (wrapped when faulty) and clients. Deals keys into cfg when CT needs them.
std::vector<std::unique_ptr<Actor>> make_actors(ClusterConfig& cfg);

class Cluster {
 public:
  explicit Cluster(ClusterConfig cfg);

  sim::Trace run(const sim::RunLimits& limits);
  sim::Simulator& simulator() { return *sim_; }
  const ClusterConfig& config() const { return cfg_; }

  /// Honest core of replica r (unwrapped when r is faulty).
  const Replica& replica(ReplicaId r);
  const Client& client(unsigned index);
  std::set<ReplicaId> correct_replicas() const;
  std::uint64_t total_requests() const { return cfg_.requests_per_client * cfg_.clients; }
  const threshold::Dealing* dealing() const { return cfg_.dealing.get(); }

 private:
  ClusterConfig cfg_;
  std::unique_ptr<sim::Simulator> sim_;
  std::set<ReplicaId> faulty_;
};

/// Deals keys for a cluster (l = 3f+1) deterministically from the seed.
std::shared_ptr<const threshold::Dealing> deal_for(std::uint32_t f, std::uint32_t k, unsigned key_bits,
                                                   std::uint64_t seed);

struct SafetyReport {
  std::uint64_t compared_slots = 0;
  std::uint64_t divergent_slots = 0;         // two correct replicas delivered different (request, random)
  std::uint64_t gaps = 0;                    // a correct replica skipped a sequence number
  std::uint64_t client_inconsistencies = 0;  // client accepted something no correct replica delivered
  std::uint64_t min_delivered = 0;           // fewest requests delivered by a correct replica
  bool ok() const { return divergent_slots == 0 && gaps == 0 && client_inconsistencies == 0; }
  std::string summary() const;
};

/// Checks that correct replicas agree on every delivered (n, request, random) and that every
/// client-accepted random matches what correct replicas delivered.
SafetyReport check_safety(const sim::Trace& trace, const std::set<ReplicaId>& correct);

}  // namespace bftrand
