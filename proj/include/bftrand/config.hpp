#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bftrand/cluster.hpp"
#include "bftrand/replica.hpp"
#include "bftrand/threshold.hpp"

namespace bftrand {

/// Splits `key=value` lines. Blank lines and '#' comments are skipped; repeated keys accumulate.
std::multimap<std::string, std::string> read_key_values(std::istream& in);

bool parse_flag(const std::string& key, const std::string& value);
std::uint64_t parse_uint(const std::string& key, const std::string& value);

/// Replica configuration file:
///   id=1  f=1  mode=ct  k=2  key_bits=64  batching=on  ct_batching=off
///   entropy_seed=42 (absent means OS entropy)  timeout_ms=1000  keys=path/to/keys.txt
///   secret=<64 hex>  peer=<id> <host>:<port> (repeatable, used by the TCP transport)
struct ReplicaFile {
  ReplicaId id = 0;
  std::uint32_t f = 1;
  Mode mode = Mode::base;
  std::uint32_t k = 0;  // 0 means f+1
  unsigned key_bits = 64;
  bool batching = false;
  bool ct_batching = false;
  std::optional<std::uint64_t> entropy_seed;
  Duration timeout_base = std::chrono::seconds(1);
  std::string keys_path;
  Block32 root_secret{};
  std::map<Principal, std::string> peers;
};

/// Throws ConfigError on unknown keys or bad values.
ReplicaFile read_replica_file(std::istream& in);
/// Builds the runtime configuration; CT mode needs the dealer's records.
ReplicaConfig to_replica_config(const ReplicaFile& file, const threshold::KeyRecords* keys);

/// Scenario file for fault-injection runs:
///   mode=ba  f=1  seed=7  clients=4  requests=250  batching=on  ct_batching=on  preset=lan
///   fault=<id> <Behavior> [share hex]   (repeatable, at most f)
struct Scenario {
  std::string name;
  ClusterConfig cluster;
};

Scenario read_scenario(std::istream& in, std::string name = "scenario");
Scenario load_scenario(const std::string& path);

struct ScenarioOutcome {
  SafetyReport safety;
  std::uint64_t accepts = 0;
  bool complete = true;  // false when the event cap stopped the run
  bool ok() const { return safety.ok() && complete; }
};

ScenarioOutcome run_scenario(const Scenario& s);

}  // namespace bftrand
