// bftrand: command-line harness for the replication toolkit.

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "bftrand/bench.hpp"
#include "bftrand/byzantine.hpp"
#include "bftrand/config.hpp"
#include "bftrand/tcp.hpp"
#include "bftrand/threshold.hpp"

using namespace bftrand;

namespace {

int write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return 0;
  }
  std::ofstream out(path);
  if (!out) {
    std::cerr << "cannot write " << path << '\n';
    return 2;
  }
  out << text;
  return 0;
}

CostTable cost_source(const std::string& source, const std::vector<unsigned>& key_bits) {
  if (source == "reference") return CostTable::reference();
  if (source == "zero") return CostTable::zero();
  if (source == "measured") return measure_cost_table(key_bits);
  return load_cost_table(source);
}

std::string us_ms(Duration d) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << static_cast<double>(d.count()) / 1000.0 << " us ("
     << std::setprecision(2) << static_cast<double>(d.count()) / 1e6 << " ms)";
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BFT replication with collective random numbers: simulator, fault lab and benchmarks"};
  app.require_subcommand(1);

  // deal
  auto* deal = app.add_subcommand("deal", "Deal threshold RSA keys as text records");
  unsigned deal_k = 2, deal_l = 4, deal_bits = 64;
  std::uint64_t deal_seed = 1;
  std::string deal_out;
  deal->add_option("--k", deal_k, "Signature threshold")->capture_default_str();
  deal->add_option("--l", deal_l, "Number of key shares")->capture_default_str();
  deal->add_option("--key-bits", deal_bits, "Modulus size (64, 128, 256, 512, 1024)")->capture_default_str();
  deal->add_option("--seed", deal_seed, "Dealer seed")->capture_default_str();
  deal->add_option("--out", deal_out, "Output file (default stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "Run closed-loop benchmarks and report CSV");
  BenchConfig bc;
  std::string b_mode = "base", b_preset = "lan", b_costs = "reference", b_format = "csv", b_out;
  std::vector<unsigned> b_clients{1};
  std::uint64_t b_duration_ms = 0;
  bool b_tcp = false;
  std::uint16_t b_port = 47000;
  bench->add_option("--mode", b_mode, "base, ba or ct")->capture_default_str();
  bench->add_option("--f", bc.f, "Tolerated faults")->capture_default_str();
  bench->add_option("--k", bc.k, "CT threshold")->capture_default_str();
  bench->add_option("--key-bits", bc.key_bits, "Key size charged from the cost table")->capture_default_str();
  bench->add_option("--crypto-key-bits", bc.crypto_key_bits, "Key size actually dealt")->capture_default_str();
  bench->add_option("--clients", b_clients, "Client counts (1..12); several values sweep")->delimiter(',');
  bench->add_option("--requests", bc.requests_per_client, "Requests per client")->capture_default_str();
  bench->add_option("--duration-ms", b_duration_ms, "Simulated duration instead of a request count");
  bench->add_option("--request-bytes", bc.request_bytes, "Request payload size")->capture_default_str();
  bench->add_option("--preset", b_preset, "zero, lan or wan")->capture_default_str();
  bench->add_flag("--zero-jitter", bc.zero_jitter, "Disable latency jitter");
  bench->add_flag("--batching", bc.batching, "Batch requests per sequence number");
  bench->add_flag("--ct-batching", bc.ct_batching, "One coin per batch instead of one per request");
  bench->add_option("--window", bc.window, "Batches in flight")->capture_default_str();
  bench->add_option("--max-batch", bc.max_batch, "Largest batch")->capture_default_str();
  bench->add_option("--costs", b_costs, "reference, zero, measured or a cost-table file")->capture_default_str();
  bench->add_option("--seed", bc.seed, "Simulation seed")->capture_default_str();
  bench->add_option("--format", b_format, "csv or text")->capture_default_str();
  bench->add_option("--out", b_out, "Output file (default stdout)");
  bench->add_flag("--tcp", b_tcp, "Run over loopback TCP with wall-clock timing");
  bench->add_option("--port", b_port, "First TCP port")->capture_default_str();

  // scenario
  auto* scenario = app.add_subcommand("scenario", "Run fault-injection scenario files and check safety");
  std::vector<std::string> scenario_files;
  scenario->add_option("files", scenario_files, "Scenario files")->required()->check(CLI::ExistingFile);

  // costmodel
  auto* costmodel = app.add_subcommand("costmodel", "Evaluate the critical-path cost model");
  std::string c_costs = "reference";
  unsigned c_k = 2, c_bits = 64;
  costmodel->add_option("--costs", c_costs, "reference, zero or a cost-table file")->capture_default_str();
  costmodel->add_option("--k", c_k, "CT threshold")->capture_default_str();
  costmodel->add_option("--key-bits", c_bits, "CT key size")->capture_default_str();

  // attack
  auto* attack = app.add_subcommand("attack", "Run the seed-predicting client against a scheme");
  AttackConfig ac;
  std::string a_scheme = "SeqSeeded";
  std::uint64_t a_gran_ms = 1, a_window_ms = 100;
  attack->add_option("--scheme", a_scheme, "SeqSeeded, TimestampSeeded, BA or CT")->capture_default_str();
  attack->add_option("--trials", ac.trials, "Requests attacked")->capture_default_str();
  attack->add_option("--guesses", ac.guesses, "Guesses per request")->capture_default_str();
  attack->add_option("--granularity-ms", a_gran_ms, "Timestamp granularity")->capture_default_str();
  attack->add_option("--window-ms", a_window_ms, "Half-width of the timestamp window")->capture_default_str();
  attack->add_option("--seed", ac.seed, "Seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*deal) {
      auto d = threshold::deal(deal_k, deal_l, deal_bits, deal_seed);
      std::ostringstream os;
      threshold::write_group_key(os, d.key);
      for (const auto& s : d.shares) threshold::write_key_share(os, s);
      return write_output(os.str(), deal_out);
    }

    if (*bench) {
      bc.mode = parse_mode(b_mode);
      bc.preset = parse_preset(b_preset);
      if (b_duration_ms > 0) bc.duration = std::chrono::milliseconds(b_duration_ms);
      bc.costs = cost_source(b_costs, {bc.key_bits});
      const auto format = b_format == "text" ? ReportFormat::text : ReportFormat::csv;
      std::vector<std::pair<BenchConfig, Metrics>> runs;
      bool safe = true;
      std::string text;
      for (unsigned c : b_clients) {
        auto cfg = bc;
        cfg.clients = c;
        Metrics m = b_tcp ? net::run_tcp_bench(cfg, b_port, std::chrono::seconds(120)) : run_bench(cfg);
        if (!m.complete) std::cerr << "warning: run with " << c << " clients stopped early, metrics are partial\n";
        safe = safe && m.safe;
        if (format == ReportFormat::text) text += report(cfg, m, format);
        runs.push_back({cfg, std::move(m)});
      }
      int rc = write_output(format == ReportFormat::csv ? report_csv(runs) : text, b_out);
      if (!safe) {
        std::cerr << "invariant violation: correct replicas or clients disagreed on a delivered random\n";
        return 1;
      }
      return rc;
    }

    if (*scenario) {
      bool all_ok = true;
      for (const auto& path : scenario_files) {
        auto s = load_scenario(path);
        auto outcome = run_scenario(s);
        std::cout << (outcome.ok() ? "ok   " : "FAIL ") << s.name << "  mode=" << mode_name(s.cluster.mode)
                  << " accepts=" << outcome.accepts << ' ' << outcome.safety.summary()
                  << (outcome.complete ? "" : " (event cap)") << '\n';
        all_ok = all_ok && outcome.ok();
      }
      return all_ok ? 0 : 1;
    }

    if (*costmodel) {
      auto costs = cost_source(c_costs, {c_bits});
      CtParams ct{c_k, c_bits};
      std::cout << "L_base_min   " << us_ms(min_latency(Mode::base, ct, costs)) << '\n';
      std::cout << "L_BA_min     " << us_ms(min_latency(Mode::ba, ct, costs)) << '\n';
      std::cout << "L_CT_min     " << us_ms(min_latency(Mode::ct, ct, costs)) << "  k=" << c_k
                << " key_bits=" << c_bits << '\n';
      std::cout << "BA_overhead  " << us_ms(overhead(Mode::ba, ct, costs)) << '\n';
      std::cout << "CT_overhead  " << us_ms(overhead(Mode::ct, ct, costs)) << '\n';
      return 0;
    }

    if (*attack) {
      ac.scheme = parse_scheme(a_scheme);
      ac.granularity = std::chrono::milliseconds(a_gran_ms);
      ac.window = std::chrono::milliseconds(a_window_ms);
      auto r = seed_predictor_attack(ac);
      std::cout << "scheme=" << scheme_name(ac.scheme) << " trials=" << r.trials << " hits=" << r.hits
                << " rate=" << std::fixed << std::setprecision(4) << r.rate() << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
