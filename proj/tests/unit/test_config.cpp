#include <gtest/gtest.h>

#include <sstream>

#include "bftrand/config.hpp"

using namespace bftrand;

TEST(KeyValues, CommentsAndRepeats) {
  std::stringstream ss("# header\n\nmode = ba\npeer=1 a:1\npeer=2 b:2  # two\n");
  auto kv = read_key_values(ss);
  EXPECT_EQ(kv.count("peer"), 2u);
  EXPECT_EQ(kv.find("mode")->second, "ba");
  std::stringstream bad("novalue\n");
  EXPECT_THROW(read_key_values(bad), ConfigError);
}

TEST(Parsers, FlagsAndIntegers) {
  EXPECT_TRUE(parse_flag("x", "on"));
  EXPECT_TRUE(parse_flag("x", "yes"));
  EXPECT_FALSE(parse_flag("x", "0"));
  EXPECT_THROW(parse_flag("x", "maybe"), ConfigError);
  EXPECT_EQ(parse_uint("n", "42"), 42u);
  EXPECT_THROW(parse_uint("n", "-1"), ConfigError);
  EXPECT_THROW(parse_uint("n", "4x"), ConfigError);
}

TEST(ReplicaFile, ParsesAndBuildsConfig) {
  std::stringstream ss(
      "id=2\nf=1\nmode=ba\nbatching=on\nentropy_seed=42\ntimeout_ms=250\n"
      "secret=" + std::string(64, 'a') + "\npeer=0 127.0.0.1:47000\npeer=1 127.0.0.1:47001\n");
  auto file = read_replica_file(ss);
  EXPECT_EQ(file.id, 2u);
  EXPECT_EQ(file.mode, Mode::ba);
  EXPECT_EQ(file.entropy_seed, 42u);
  EXPECT_EQ(file.timeout_base, std::chrono::milliseconds(250));
  EXPECT_EQ(file.root_secret[0], 0xaa);
  EXPECT_EQ(file.peers.size(), 2u);
  auto cfg = to_replica_config(file, nullptr);
  EXPECT_EQ(cfg.self, 2u);
  EXPECT_TRUE(cfg.batching);
  EXPECT_EQ(cfg.quorums.commit_quorum, 3u);
}

TEST(ReplicaFile, CtNeedsKeys) {
  std::stringstream ss("id=1\nmode=ct\nk=2\n");
  auto file = read_replica_file(ss);
  EXPECT_THROW(to_replica_config(file, nullptr), ConfigError);
  auto d = threshold::deal(2, 4, 64, 3);
  threshold::KeyRecords keys{d.key, d.shares};
  auto cfg = to_replica_config(file, &keys);
  EXPECT_EQ(cfg.key_share->holder, 2u);
}

TEST(ReplicaFile, Rejections) {
  for (std::string bad : {"colour=blue\n", "k=4\n", "secret=abc\n", "mode=raft\n", "peer=1\n"}) {
    std::stringstream ss(bad);
    EXPECT_THROW(read_replica_file(ss), ConfigError) << bad;
  }
}

TEST(Scenario, DefaultsAndFaults) {
  std::stringstream ss("mode=ct\nseed=3\nbatching=on\nfault=2 CorruptSigShares\n");
  auto s = read_scenario(ss, "demo");
  EXPECT_EQ(s.name, "demo");
  EXPECT_EQ(s.cluster.mode, Mode::ct);
  EXPECT_EQ(s.cluster.clients, 4u);
  EXPECT_EQ(s.cluster.requests_per_client, 250u);
  ASSERT_EQ(s.cluster.faults.size(), 1u);
  EXPECT_EQ(s.cluster.faults[0].behavior, Behavior::corrupt_sig_shares);
  EXPECT_EQ(s.cluster.latency.base, std::chrono::microseconds(50));
}

TEST(Scenario, BiasedShareBytes) {
  std::stringstream ss("mode=ba\nfault=1 BiasedShares " + std::string(64, 'f') + "\n");
  auto s = read_scenario(ss);
  EXPECT_EQ(s.cluster.faults[0].biased.bytes[31], 0xff);
}

TEST(Scenario, Rejections) {
  for (std::string bad : {"fault=1 MuteCommit\nfault=2 MuteCommit\n", "fault=4 MuteCommit\n", "fault=1 Crash\n",
                          "preset=mars\n", "k=9\n"}) {
    std::stringstream ss(bad);
    EXPECT_THROW(read_scenario(ss), ConfigError) << bad;
  }
  EXPECT_THROW(load_scenario("/nonexistent/scenario"), ConfigError);
}

TEST(Scenario, RunsSafely) {
  std::stringstream ss("mode=ba\nclients=2\nrequests=10\nfault=3 StaleReplay\n");
  auto outcome = run_scenario(read_scenario(ss));
  EXPECT_TRUE(outcome.ok()) << outcome.safety.summary();
  EXPECT_EQ(outcome.accepts, 20u);
}

TEST(Scenario, ShippedFilesParse) {
  for (int i = 1; i <= 20; ++i) {
    char name[64];
    std::snprintf(name, sizeof name, BFTRAND_SOURCE_DIR "/scenarios/s%02d.scn", i);
    EXPECT_NO_THROW(load_scenario(name)) << name;
  }
}
