#include "bftrand/cluster.hpp"

#include <algorithm>
#include <sstream>

namespace bftrand {

namespace {

Block32 root_secret_for(std::uint64_t seed) {
  Writer w;
  w.u64(seed);
  w.fixed(view(Bytes{'r', 'o', 'o', 't'}));
  return sha256(view(w.data())).bytes;
}

}  // namespace

std::shared_ptr<const threshold::Dealing> deal_for(std::uint32_t f, std::uint32_t k, unsigned key_bits,
                                                   std::uint64_t seed) {
  return std::make_shared<const threshold::Dealing>(threshold::deal(k, 3 * f + 1, key_bits, seed));
}

std::vector<std::unique_ptr<Actor>> make_actors(ClusterConfig& cfg) {
  const auto quorums = quorums_for(cfg.f, cfg.threshold());
  std::set<ReplicaId> faulty;
  for (const auto& fault : cfg.faults) faulty.insert(fault.target);
  if (faulty.size() > cfg.f) throw ConfigError("more faulty replicas than f");

  if (cfg.mode == Mode::ct && !cfg.dealing)
    cfg.dealing = deal_for(cfg.f, quorums.ct_threshold, cfg.crypto_key_bits, cfg.seed);
  std::shared_ptr<const threshold::GroupKey> group_key;
  if (cfg.dealing) {
    if (cfg.dealing->key.l != quorums.n_replicas || cfg.dealing->key.k != quorums.ct_threshold)
      throw ConfigError("dealing does not match (k, l)");
    group_key = std::make_shared<const threshold::GroupKey>(cfg.dealing->key);
  }

  std::vector<std::unique_ptr<Actor>> actors;
  const Block32 root = root_secret_for(cfg.seed);
  for (ReplicaId r = 0; r < quorums.n_replicas; ++r) {
    ReplicaConfig rc;
    rc.self = r;
    rc.quorums = quorums;
    rc.mode = cfg.mode;
    rc.batching = cfg.batching;
    rc.ct_batching = cfg.ct_batching;
    rc.max_batch = cfg.max_batch;
    rc.window = cfg.window;
    if (auto fixed = cfg.fixed_entropy.find(r); fixed != cfg.fixed_entropy.end())
      rc.entropy = EntropySource::constant(fixed->second);
    else if (cfg.os_entropy)
      rc.entropy = EntropySource::os();
    else
      rc.entropy = EntropySource::seeded(cfg.seed * 7919 + r);
    if (group_key) {
      rc.group_key = group_key;
      rc.key_share = std::make_shared<const threshold::KeyShare>(cfg.dealing->shares.at(r));
    }
    rc.map_hash = cfg.map_hash;
    rc.root_secret = root;
    rc.timeout_base = cfg.timeout_base;
    rc.oracle = cfg.oracle;
    rc.costs = cfg.costs;
    rc.cost_key_bits = cfg.key_bits;

    auto fault = std::find_if(cfg.faults.begin(), cfg.faults.end(), [r](const FaultSpec& s) { return s.target == r; });
    if (fault != cfg.faults.end())
      actors.push_back(wrap(std::move(rc), *fault));
    else
      actors.push_back(std::make_unique<Replica>(std::move(rc)));
  }

  for (unsigned c = 0; c < cfg.clients; ++c) {
    ClientConfig cc;
    cc.id = kFirstClientId + c;
    cc.quorums = quorums;
    cc.root_secret = root;
    cc.retransmit_timeout = cfg.client_timeout;
    cc.requests = cfg.requests_per_client;
    cc.payload_bytes = cfg.payload_bytes;
    cc.costs = cfg.costs;
    actors.push_back(std::make_unique<Client>(std::move(cc)));
  }
  return actors;
}

Cluster::Cluster(ClusterConfig cfg) : cfg_(std::move(cfg)), sim_(std::make_unique<sim::Simulator>(cfg_.latency)) {
  for (auto& actor : make_actors(cfg_)) sim_->add(std::move(actor));
  for (const auto& fault : cfg_.faults) faulty_.insert(fault.target);
}

sim::Trace Cluster::run(const sim::RunLimits& limits) { return sim_->run(limits); }

const Replica& Cluster::replica(ReplicaId r) {
  if (faulty_.count(r) != 0) return sim_->actor<FaultyReplica>(r).inner();
  return sim_->actor<Replica>(r);
}

const Client& Cluster::client(unsigned index) { return sim_->actor<Client>(kFirstClientId + index); }

std::set<ReplicaId> Cluster::correct_replicas() const {
  std::set<ReplicaId> out;
  for (ReplicaId r = 0; r < 3 * cfg_.f + 1; ++r)
    if (faulty_.count(r) == 0) out.insert(r);
  return out;
}

std::string SafetyReport::summary() const {
  std::ostringstream os;
  os << "slots=" << compared_slots << " divergent=" << divergent_slots << " gaps=" << gaps
     << " client_inconsistencies=" << client_inconsistencies << " min_delivered=" << min_delivered;
  return os.str();
}

SafetyReport check_safety(const sim::Trace& trace, const std::set<ReplicaId>& correct) {
  using Entry = std::pair<Request, std::optional<Bytes>>;
  // Per replica: n -> requests delivered for that slot, in order.
  std::map<ReplicaId, std::map<SeqNum, std::vector<Entry>>> logs;
  std::map<ReplicaId, SeqNum> last_n;
  std::map<ReplicaId, std::uint64_t> counts;
  SafetyReport report;
  for (auto r : correct) {
    logs[r];
    counts[r] = 0;
  }

  for (const auto& d : trace.deliveries) {
    if (correct.count(d.replica) == 0) continue;
    auto& prev = last_n[d.replica];
    if (d.n != prev && d.n != prev + 1) ++report.gaps;
    prev = d.n;
    logs[d.replica][d.n].push_back({d.request, d.random});
    ++counts[d.replica];
  }

  std::map<SeqNum, const std::vector<Entry>*> reference;
  for (const auto& [r, log] : logs) {
    for (const auto& [n, entries] : log) {
      auto [it, inserted] = reference.emplace(n, &entries);
      if (inserted) continue;
      ++report.compared_slots;
      if (*it->second != entries) ++report.divergent_slots;
    }
  }

  std::map<std::pair<ClientId, std::uint64_t>, std::optional<Bytes>> delivered;
  for (const auto& [r, log] : logs)
    for (const auto& [n, entries] : log)
      for (const auto& e : entries) delivered.emplace(std::make_pair(e.first.client, e.first.timestamp), e.second);
  for (const auto& a : trace.accepts) {
    auto it = delivered.find({a.accept.client, a.accept.timestamp});
    if (it == delivered.end() || it->second != a.accept.random) ++report.client_inconsistencies;
  }

  report.min_delivered = UINT64_MAX;
  for (const auto& [r, c] : counts) report.min_delivered = std::min(report.min_delivered, c);
  if (counts.empty()) report.min_delivered = 0;
  return report;
}

}  // namespace bftrand
