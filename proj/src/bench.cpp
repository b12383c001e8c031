#include "bftrand/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace bftrand {

namespace {

Duration from_us(double micros) { return Duration{static_cast<std::int64_t>(std::llround(micros * 1000.0))}; }
double to_us(Duration d) { return static_cast<double>(d.count()) / 1000.0; }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

template <class F>
Duration time_per_call(unsigned iterations, F&& fn) {
  auto start = std::chrono::steady_clock::now();
  for (unsigned i = 0; i < iterations; ++i) fn(i);
  auto total = std::chrono::steady_clock::now() - start;
  return std::chrono::duration_cast<Duration>(total) / std::max(1u, iterations);
}

}  // namespace

CostTable read_cost_table(std::istream& in) {
  CostTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    auto fail = [&](const std::string& why) {
      throw ConfigError("cost table line " + std::to_string(lineno) + ": " + why);
    };
    auto read_value = [&]() {
      double v;
      if (!(ls >> v)) fail("expected a number");
      if (v < 0) fail("negative duration");
      return from_us(v);
    };
    if (key == "auth_gen") {
      t.auth_gen = read_value();
    } else if (key == "auth_verify") {
      t.auth_verify = read_value();
    } else if (key == "mac_gen") {
      t.mac_gen = read_value();
    } else if (key == "mac_verify") {
      t.mac_verify = read_value();
    } else if (key == "threshold") {
      unsigned k, bits;
      if (!(ls >> k >> bits)) fail("expected k and key_bits");
      auto sign = read_value();
      auto verify = read_value();
      t.threshold[{k, bits}] = {sign, verify};
    } else {
      fail("unknown key '" + key + "'");
    }
    std::string extra;
    if (ls >> extra) fail("trailing field '" + extra + "'");
  }
  return t;
}

CostTable load_cost_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open cost table " + path);
  return read_cost_table(in);
}

void write_cost_table(std::ostream& out, const CostTable& t) {
  out << std::fixed << std::setprecision(1);
  out << "auth_gen " << to_us(t.auth_gen) << '\n';
  out << "auth_verify " << to_us(t.auth_verify) << '\n';
  out << "mac_gen " << to_us(t.mac_gen) << '\n';
  out << "mac_verify " << to_us(t.mac_verify) << '\n';
  for (const auto& [key, v] : t.threshold)
    out << "threshold " << key.first << ' ' << key.second << ' ' << to_us(v.first) << ' ' << to_us(v.second) << '\n';
}

CostTable measure_cost_table(const std::vector<unsigned>& key_bits, unsigned iterations) {
  CostTable t;
  const Bytes payload(1024, 0xab);
  KeyRing ring(Block32{}, 0);
  std::vector<SessionKey> keys;
  for (Principal p = 1; p <= 3; ++p) keys.push_back(ring.outbound(p));
  const auto inbound = KeyRing(Block32{}, 1).inbound(0);
  const auto auth = authenticator_sign(keys, view(payload));
  const auto mac = mac_sign(keys[0], view(payload));
  volatile bool sink = false;

  t.auth_gen = time_per_call(iterations, [&](unsigned) { sink = authenticator_sign(keys, view(payload)).entries.empty(); });
  t.auth_verify = time_per_call(iterations, [&](unsigned) { sink = authenticator_verify(inbound, view(payload), auth, 1); });
  t.mac_gen = time_per_call(iterations, [&](unsigned) { sink = mac_sign(keys[0], view(payload)).bytes[0] == 0; });
  t.mac_verify = time_per_call(iterations, [&](unsigned) { sink = mac_verify(keys[0], view(payload), mac); });

  for (unsigned bits : key_bits) {
    for (unsigned k : {2u, 3u}) {
      auto dealing = threshold::deal(k, 4, bits, 1000 + bits + k);
      const Bytes msg = coin_message(sha256(view(payload)), 1);
      std::vector<threshold::SignatureShare> shares;
      auto sign = time_per_call(iterations, [&](unsigned) {
        shares.clear();
        shares.push_back(threshold::sign_share(dealing.key, dealing.shares[0], view(msg)));
      });
      shares.clear();
      for (unsigned i = 0; i < k; ++i) shares.push_back(threshold::sign_share(dealing.key, dealing.shares[i], view(msg)));
      auto verify = time_per_call(iterations, [&](unsigned) {
        sink = threshold::combine(dealing.key, view(msg), shares).value == 0;
      });
      t.threshold[{k, bits}] = {sign, verify};
    }
  }
  (void)sink;
  return t;
}

Duration min_latency(Mode mode, const CtParams& ct, const CostTable& c) {
  const Duration base = 4 * c.auth_gen + 5 * c.auth_verify + c.mac_gen + 2 * c.mac_verify;
  return base + overhead(mode, ct, c);
}

Duration overhead(Mode mode, const CtParams& ct, const CostTable& c) {
  switch (mode) {
    case Mode::base: return Duration{0};
    case Mode::ba: return 2 * c.auth_gen + 3 * c.auth_verify;
    case Mode::ct: return c.sign_cost(ct.k, ct.key_bits) + c.combine_cost(ct.k, ct.key_bits);
  }
  return Duration{0};
}

const char* preset_name(Preset p) {
  switch (p) {
    case Preset::zero: return "zero";
    case Preset::lan: return "lan";
    case Preset::wan: return "wan";
  }
  return "?";
}

Preset parse_preset(std::string_view s) {
  const auto l = lower(s);
  if (l == "zero") return Preset::zero;
  if (l == "lan") return Preset::lan;
  if (l == "wan") return Preset::wan;
  throw ConfigError("unknown preset '" + std::string(s) + "'");
}

sim::LatencyModel latency_for(Preset p, std::uint64_t seed) {
  switch (p) {
    case Preset::zero: return sim::LatencyModel::zero();
    case Preset::lan: return sim::LatencyModel::lan(seed);
    case Preset::wan: return sim::LatencyModel::wan(seed);
  }
  return {};
}

void BenchConfig::validate() const {
  if (clients < 1 || clients > 12) throw ConfigError("clients must be in [1, 12]");
  if (request_bytes < 1) throw ConfigError("request_bytes must be at least 1");
  if (!duration && requests_per_client < 1) throw ConfigError("requests per client must be at least 1");
  quorums_for(f, k);
  if (mode == Mode::ct) costs.sign_cost(k, key_bits);
}

Duration nearest_rank(std::vector<Duration> samples, double p) {
  if (samples.empty()) return Duration{0};
  std::sort(samples.begin(), samples.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(samples.size())));
  rank = std::clamp<std::size_t>(rank, 1, samples.size());
  return samples[rank - 1];
}

void summarize(Metrics& m) {
  if (m.samples.empty()) {
    m.mean_us = m.median_us = m.p99_us = 0;
    return;
  }
  double total = 0;
  for (auto s : m.samples) total += to_us(s);
  m.mean_us = total / static_cast<double>(m.samples.size());
  m.median_us = to_us(nearest_rank(m.samples, 50));
  m.p99_us = to_us(nearest_rank(m.samples, 99));
}

Metrics run_bench(const BenchConfig& cfg) {
  cfg.validate();
  ClusterConfig cc;
  cc.mode = cfg.mode;
  cc.f = cfg.f;
  cc.k = cfg.k;
  cc.key_bits = cfg.key_bits;
  cc.crypto_key_bits = cfg.crypto_key_bits;
  cc.batching = cfg.batching;
  cc.ct_batching = cfg.ct_batching;
  cc.window = cfg.window;
  cc.max_batch = cfg.max_batch;
  cc.seed = cfg.seed;
  cc.clients = cfg.clients;
  cc.requests_per_client = cfg.duration ? UINT64_MAX / 16 : cfg.requests_per_client;
  cc.payload_bytes = cfg.request_bytes;
  cc.latency = latency_for(cfg.preset, cfg.seed);
  if (cfg.zero_jitter) cc.latency.jitter = Duration{0};
  cc.costs = cfg.costs;
  // Timeouts far above any simulated latency keep view-change noise out of the numbers.
  cc.timeout_base = std::chrono::seconds(3600);
  cc.client_timeout = std::chrono::seconds(3600);

  Cluster cluster(cc);
  sim::RunLimits limits;
  limits.record_events = false;
  limits.event_cap = cfg.event_cap;
  if (cfg.duration) limits.until = *cfg.duration;

  Metrics m;
  sim::Trace trace;
  try {
    trace = cluster.run(limits);
  } catch (sim::EventCapExceeded& e) {
    trace = std::move(e.trace);
    m.complete = false;
  }

  for (const auto& a : trace.accepts) m.samples.push_back(a.accept.latency);
  summarize(m);
  m.safe = check_safety(trace, cluster.correct_replicas()).ok();

  // Throughput at the replicas: requests executed by the primary per simulated second.
  const ReplicaId primary = 0;
  Time last{0};
  for (const auto& d : trace.deliveries) {
    if (d.replica != primary) continue;
    ++m.delivered;
    last = d.at;
  }
  m.span = cfg.duration ? *cfg.duration : last;
  if (m.span.count() > 0)
    m.throughput_rps = static_cast<double>(m.delivered) / std::chrono::duration<double>(m.span).count();
  return m;
}

std::string csv_header() { return "mode,f,k,key_bits,clients,preset,batching,mean_us,median_us,p99_us,throughput_rps\n"; }

namespace {

std::string batching_label(const BenchConfig& c) {
  if (!c.batching) return c.ct_batching ? "coin" : "off";
  return c.ct_batching ? "on" : "order";
}

}  // namespace

std::string report(const BenchConfig& cfg, const Metrics& m, ReportFormat format) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1);
  if (format == ReportFormat::csv) {
    os << mode_name(cfg.mode) << ',' << cfg.f << ',' << cfg.k << ',' << cfg.key_bits << ',' << cfg.clients << ','
       << preset_name(cfg.preset) << ',' << batching_label(cfg) << ',' << m.mean_us << ',' << m.median_us << ','
       << m.p99_us << ',' << m.throughput_rps << '\n';
    return os.str();
  }
  os << "mode        " << mode_name(cfg.mode) << " (f=" << cfg.f << " k=" << cfg.k << " key_bits=" << cfg.key_bits
     << ")\n";
  os << "clients     " << cfg.clients << "  preset " << preset_name(cfg.preset) << "  batching "
     << batching_label(cfg) << '\n';
  os << "samples     " << m.samples.size() << (m.complete ? "" : "  (event cap reached, partial)") << '\n';
  os << "latency us  mean " << m.mean_us << "  median " << m.median_us << "  p99 " << m.p99_us << '\n';
  os << "throughput  " << m.throughput_rps << " req/s over " << to_us(m.span) / 1000.0 << " ms simulated\n";
  return os.str();
}

std::string report_csv(const std::vector<std::pair<BenchConfig, Metrics>>& runs) {
  std::string out = csv_header();
  for (const auto& [cfg, m] : runs) out += report(cfg, m, ReportFormat::csv);
  return out;
}

}  // namespace bftrand
