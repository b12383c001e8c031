#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include "bftrand/actor.hpp"
#include "bftrand/bench.hpp"

namespace bftrand::net {

inline constexpr std::size_t kMaxFrame = 64u << 20;

/// 4-byte big-endian length followed by the encoded message.
Bytes frame(ByteView msg);

/// Reassembles frames from a byte stream. Throws DecodeError on a frame above kMaxFrame.
class FrameDecoder {
 public:
  void feed(ByteView chunk);
  std::optional<Bytes> next();

 private:
  Bytes buf_;
  std::size_t pos_ = 0;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

/// Parses "host:port". Throws ConfigError.
Endpoint parse_endpoint(const std::string& s);

/// Runs one actor over TCP: a listener feeds incoming frames to the actor; each peer gets a writer
/// thread with its own connection. Actor calls are serialized on the event-loop thread.
class TcpNode {
 public:
  using Observer = std::function<void(const Action&, Time)>;

  TcpNode(std::unique_ptr<Actor> actor, std::uint16_t listen_port, std::map<Principal, Endpoint> peers,
          Observer observer = {});
  ~TcpNode();
  TcpNode(const TcpNode&) = delete;
  TcpNode& operator=(const TcpNode&) = delete;

  /// Binds the listener. Call on every node before start() so early sends find a listener.
  void listen();
  void start();
  void stop();

  std::uint16_t port() const { return port_; }
  Actor& actor() { return *actor_; }

 private:
  struct Inbound {
    Time due{0};
    std::uint64_t seq = 0;
    std::optional<TimerId> timer;
    Bytes bytes;
  };
  struct Later {
    bool operator()(const Inbound& a, const Inbound& b) const {
      return a.due != b.due ? a.due > b.due : a.seq > b.seq;
    }
  };
  struct Outbox {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<Bytes> frames;
    std::thread writer;
  };

  Time now() const;
  void push(Inbound in);
  void accept_loop();
  void read_loop(int fd);
  void write_loop(Principal peer, Outbox& box);
  void event_loop();
  void apply(std::vector<Action>& actions, Time at);

  std::unique_ptr<Actor> actor_;
  std::uint16_t port_;
  std::map<Principal, Endpoint> peers_;
  Observer observer_;
  std::chrono::steady_clock::time_point epoch_;

  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::thread loop_;
  std::mutex readers_mu_;
  std::vector<std::thread> readers_;
  std::vector<int> reader_fds_;
  std::map<Principal, std::unique_ptr<Outbox>> outboxes_;

  std::mutex in_mu_;
  std::condition_variable in_cv_;
  std::priority_queue<Inbound, std::vector<Inbound>, Later> inbox_;
  std::uint64_t seq_ = 0;
};

/// Runs the benchmark configuration over loopback TCP with real crypto and wall-clock timing.
/// Replica r listens on base_port + r, client c on base_port + 3f+1 + c.
Metrics run_tcp_bench(const BenchConfig& cfg, std::uint16_t base_port, Duration timeout);

}  // namespace bftrand::net
