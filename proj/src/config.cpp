#include "bftrand/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "bftrand/bench.hpp"

namespace bftrand {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Block32 parse_block(const std::string& key, const std::string& value) {
  Bytes raw;
  try {
    raw = from_hex(value);
  } catch (const std::exception&) {
    throw ConfigError(key + ": not hex");
  }
  if (raw.size() != 32) throw ConfigError(key + ": expected 32 bytes of hex");
  Block32 out;
  std::copy(raw.begin(), raw.end(), out.begin());
  return out;
}

}  // namespace

std::multimap<std::string, std::string> read_key_values(std::istream& in) {
  std::multimap<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    out.emplace(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1" || value == "yes") return true;
  if (value == "off" || value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key + ": expected on/off, got '" + value + "'");
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    auto v = std::stoull(value, &used, 0);
    if (used != value.size() || value.starts_with('-')) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  }
}

ReplicaFile read_replica_file(std::istream& in) {
  ReplicaFile r;
  for (const auto& [key, value] : read_key_values(in)) {
    if (key == "id") {
      r.id = static_cast<ReplicaId>(parse_uint(key, value));
    } else if (key == "f") {
      r.f = static_cast<std::uint32_t>(parse_uint(key, value));
    } else if (key == "mode") {
      r.mode = parse_mode(value);
    } else if (key == "k") {
      r.k = static_cast<std::uint32_t>(parse_uint(key, value));
    } else if (key == "key_bits") {
      r.key_bits = static_cast<unsigned>(parse_uint(key, value));
    } else if (key == "batching") {
      r.batching = parse_flag(key, value);
    } else if (key == "ct_batching") {
      r.ct_batching = parse_flag(key, value);
    } else if (key == "entropy_seed") {
      r.entropy_seed = parse_uint(key, value);
    } else if (key == "timeout_ms") {
      r.timeout_base = std::chrono::milliseconds(parse_uint(key, value));
    } else if (key == "keys") {
      r.keys_path = value;
    } else if (key == "secret") {
      r.root_secret = parse_block(key, value);
    } else if (key == "peer") {
      std::istringstream ps(value);
      std::string id, addr;
      if (!(ps >> id >> addr)) throw ConfigError("peer: expected '<id> <host>:<port>'");
      r.peers[parse_uint(key, id)] = addr;
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  quorums_for(r.f, r.k == 0 ? r.f + 1 : r.k);
  return r;
}

ReplicaConfig to_replica_config(const ReplicaFile& file, const threshold::KeyRecords* keys) {
  ReplicaConfig cfg;
  cfg.self = file.id;
  cfg.quorums = quorums_for(file.f, file.k == 0 ? file.f + 1 : file.k);
  cfg.mode = file.mode;
  cfg.batching = file.batching;
  cfg.ct_batching = file.ct_batching;
  cfg.entropy = file.entropy_seed ? EntropySource::seeded(*file.entropy_seed) : EntropySource::os();
  cfg.root_secret = file.root_secret;
  cfg.timeout_base = file.timeout_base;
  cfg.cost_key_bits = file.key_bits;
  if (file.mode == Mode::ct) {
    if (keys == nullptr) throw ConfigError("CT mode needs the dealer's key records");
    cfg.group_key = std::make_shared<const threshold::GroupKey>(keys->key);
    auto it = std::find_if(keys->shares.begin(), keys->shares.end(),
                           [&](const threshold::KeyShare& s) { return s.holder == file.id + 1; });
    if (it == keys->shares.end()) throw ConfigError("key records hold no share for this replica");
    cfg.key_share = std::make_shared<const threshold::KeyShare>(*it);
  }
  cfg.validate();
  return cfg;
}

Scenario read_scenario(std::istream& in, std::string name) {
  Scenario s;
  s.name = std::move(name);
  auto& c = s.cluster;
  c.latency = sim::LatencyModel::lan(1);
  c.clients = 4;
  c.requests_per_client = 250;
  c.payload_bytes = 64;
  std::optional<Preset> preset;
  for (const auto& [key, value] : read_key_values(in)) {
    if (key == "mode") {
      c.mode = parse_mode(value);
    } else if (key == "f") {
      c.f = static_cast<std::uint32_t>(parse_uint(key, value));
    } else if (key == "k") {
      c.k = static_cast<std::uint32_t>(parse_uint(key, value));
    } else if (key == "key_bits") {
      c.crypto_key_bits = static_cast<unsigned>(parse_uint(key, value));
      c.key_bits = c.crypto_key_bits;
    } else if (key == "seed") {
      c.seed = parse_uint(key, value);
    } else if (key == "clients") {
      c.clients = static_cast<unsigned>(parse_uint(key, value));
    } else if (key == "requests") {
      c.requests_per_client = parse_uint(key, value);
    } else if (key == "payload") {
      c.payload_bytes = parse_uint(key, value);
    } else if (key == "batching") {
      c.batching = parse_flag(key, value);
    } else if (key == "ct_batching") {
      c.ct_batching = parse_flag(key, value);
    } else if (key == "preset") {
      preset = parse_preset(value);
    } else if (key == "fault") {
      std::istringstream fs(value);
      std::string id, behavior, hex;
      if (!(fs >> id >> behavior)) throw ConfigError("fault: expected '<id> <Behavior> [hex]'");
      FaultSpec spec;
      spec.target = static_cast<ReplicaId>(parse_uint(key, id));
      spec.behavior = parse_behavior(behavior);
      if (fs >> hex) spec.biased.bytes = parse_block("fault", hex);
      c.faults.push_back(spec);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  c.latency = latency_for(preset.value_or(Preset::lan), c.seed);
  quorums_for(c.f, c.threshold());
  if (c.faults.size() > c.f) throw ConfigError("a scenario may name at most f faulty replicas");
  for (const auto& f : c.faults)
    if (f.target > 3 * c.f) throw ConfigError("fault target outside [0, 3f]");
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario " + path);
  auto slash = path.find_last_of('/');
  return read_scenario(in, slash == std::string::npos ? path : path.substr(slash + 1));
}

ScenarioOutcome run_scenario(const Scenario& s) {
  Cluster cluster(s.cluster);
  sim::RunLimits limits;
  limits.record_events = false;
  ScenarioOutcome out;
  sim::Trace trace;
  try {
    trace = cluster.run(limits);
  } catch (sim::EventCapExceeded& e) {
    trace = std::move(e.trace);
    out.complete = false;
  }
  out.safety = check_safety(trace, cluster.correct_replicas());
  out.accepts = trace.accepts.size();
  return out;
}

}  // namespace bftrand
