#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bftrand/actor.hpp"
#include "bftrand/cluster.hpp"
#include "bftrand/replica.hpp"
#include "bftrand/sim.hpp"

namespace bftrand {

/// Reads a cost table. Lines (values in microseconds, '#' starts a comment):
///   auth_gen 80.2 | auth_verify 892.0 | mac_gen 24.1 | mac_verify 237.3
///   threshold <k> <key_bits> <sign_us> <verify_us>
/// Throws ConfigError on malformed or negative entries.
CostTable read_cost_table(std::istream& in);
CostTable load_cost_table(const std::string& path);
void write_cost_table(std::ostream& out, const CostTable& t);

/// Times the local primitives. Threshold entries cover k in {2,3} for each requested key size.
CostTable measure_cost_table(const std::vector<unsigned>& key_bits, unsigned iterations = 50);

struct CtParams {
  unsigned k = 2;
  unsigned key_bits = 64;
};

/// Critical-path crypto cost with no network delay. Throws ConfigError on a missing threshold entry.
Duration min_latency(Mode mode, const CtParams& ct, const CostTable& costs);
/// Extra critical-path crypto cost of the mode over plain ordering.
Duration overhead(Mode mode, const CtParams& ct, const CostTable& costs);

enum class Preset { zero, lan, wan };
const char* preset_name(Preset p);
Preset parse_preset(std::string_view s);
sim::LatencyModel latency_for(Preset p, std::uint64_t seed);

struct BenchConfig {
  Mode mode = Mode::base;
  std::uint32_t f = 1;
  std::uint32_t k = 2;
  unsigned key_bits = 64;
  unsigned crypto_key_bits = 64;
  unsigned clients = 1;
  std::size_t request_bytes = 1024;
  std::uint64_t requests_per_client = 100;
  std::optional<Duration> duration;  // simulated-time bound; overrides the request count when set
  Preset preset = Preset::lan;
  bool zero_jitter = false;
  bool batching = false;
  bool ct_batching = false;
  std::size_t window = 1;
  std::size_t max_batch = 64;
  CostTable costs = CostTable::reference();
  std::uint64_t seed = 1;
  std::uint64_t event_cap = 50'000'000;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

struct Metrics {
  std::vector<Duration> samples;  // client-observed latencies
  double mean_us = 0;
  double median_us = 0;
  double p99_us = 0;
  double throughput_rps = 0;  // requests delivered per simulated second, at the replicas
  std::uint64_t delivered = 0;
  Duration span{0};
  bool complete = true;  // false when the event cap cut the run short
  bool safe = true;      // correct replicas and clients agreed on every delivered random
};

/// Mean, median and p99 of the samples; median and p99 use the nearest-rank definition.
void summarize(Metrics& m);
/// Smallest sample with at least p percent of the samples at or below it.
Duration nearest_rank(std::vector<Duration> samples, double p);

/// Runs the configuration in the simulator. An event-cap stop still returns partial metrics.
Metrics run_bench(const BenchConfig& cfg);

enum class ReportFormat { csv, text };

std::string csv_header();
std::string report(const BenchConfig& cfg, const Metrics& m, ReportFormat format);
/// Header plus one row per run; an empty run list yields the header alone.
std::string report_csv(const std::vector<std::pair<BenchConfig, Metrics>>& runs);

}  // namespace bftrand
