#include "bftrand/tcp.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

#include "bftrand/client.hpp"
#include "bftrand/cluster.hpp"

namespace bftrand::net {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool write_all(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    auto n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    data += n;
    len -= static_cast<std::size_t>(n);
  }
  return true;
}

int connect_to(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(ep.host.c_str(), std::to_string(ep.port).c_str(), &hints, &res) != 0) return -1;
  int fd = -1;
  for (auto* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd >= 0) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  return fd;
}

}  // namespace

Bytes frame(ByteView msg) {
  if (msg.size() > kMaxFrame) throw std::invalid_argument("frame too large");
  Writer w;
  w.u32(static_cast<std::uint32_t>(msg.size()));
  w.fixed(msg);
  return w.data();
}

void FrameDecoder::feed(ByteView chunk) {
  if (pos_ > 0 && pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  }
  buf_.insert(buf_.end(), chunk.begin(), chunk.end());
}

std::optional<Bytes> FrameDecoder::next() {
  if (buf_.size() - pos_ < 4) return std::nullopt;
  std::uint32_t len = (std::uint32_t{buf_[pos_]} << 24) | (std::uint32_t{buf_[pos_ + 1]} << 16) |
                      (std::uint32_t{buf_[pos_ + 2]} << 8) | std::uint32_t{buf_[pos_ + 3]};
  if (len > kMaxFrame) throw DecodeError("frame length " + std::to_string(len) + " exceeds limit");
  if (buf_.size() - pos_ - 4 < len) return std::nullopt;
  Bytes out(buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + 4),
            buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + 4 + len));
  pos_ += 4 + len;
  if (pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  }
  return out;
}

Endpoint parse_endpoint(const std::string& s) {
  auto colon = s.rfind(':');
  if (colon == std::string::npos || colon == 0) throw ConfigError("expected host:port, got '" + s + "'");
  Endpoint ep;
  ep.host = s.substr(0, colon);
  try {
    auto port = std::stoul(s.substr(colon + 1));
    if (port == 0 || port > 65535) throw std::out_of_range("port");
    ep.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw ConfigError("bad port in '" + s + "'");
  }
  return ep;
}

TcpNode::TcpNode(std::unique_ptr<Actor> actor, std::uint16_t listen_port, std::map<Principal, Endpoint> peers,
                 Observer observer)
    : actor_(std::move(actor)),
      port_(listen_port),
      peers_(std::move(peers)),
      observer_(std::move(observer)),
      epoch_(std::chrono::steady_clock::now()) {}

TcpNode::~TcpNode() { stop(); }

Time TcpNode::now() const { return std::chrono::duration_cast<Time>(std::chrono::steady_clock::now() - epoch_); }

void TcpNode::listen() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket: " + std::string(std::strerror(errno)));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port_);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 64) != 0) {
    auto err = std::string(std::strerror(errno));
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error("listen on port " + std::to_string(port_) + ": " + err);
  }
}

void TcpNode::start() {
  if (listen_fd_ < 0) listen();
  running_ = true;
  epoch_ = std::chrono::steady_clock::now();
  for (const auto& [peer, ep] : peers_) {
    auto box = std::make_unique<Outbox>();
    auto* raw = box.get();
    outboxes_[peer] = std::move(box);
    raw->writer = std::thread([this, peer = peer, raw] { write_loop(peer, *raw); });
  }
  acceptor_ = std::thread([this] { accept_loop(); });
  loop_ = std::thread([this] { event_loop(); });
  push(Inbound{now(), 0, std::nullopt, {}});  // start event: empty bytes, no timer
}

void TcpNode::stop() {
  if (!running_.exchange(false)) return;
  in_cv_.notify_all();
  for (auto& [peer, box] : outboxes_) box->cv.notify_all();
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  {
    std::lock_guard<std::mutex> lock(readers_mu_);
    for (int fd : reader_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  if (acceptor_.joinable()) acceptor_.join();
  if (loop_.joinable()) loop_.join();
  for (auto& [peer, box] : outboxes_)
    if (box->writer.joinable()) box->writer.join();
  std::lock_guard<std::mutex> lock(readers_mu_);
  for (auto& t : readers_)
    if (t.joinable()) t.join();
  for (int fd : reader_fds_) ::close(fd);
  reader_fds_.clear();
}

void TcpNode::push(Inbound in) {
  {
    std::lock_guard<std::mutex> lock(in_mu_);
    in.seq = seq_++;
    inbox_.push(std::move(in));
  }
  in_cv_.notify_one();
}

void TcpNode::accept_loop() {
  while (running_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_) return;
      continue;
    }
    std::lock_guard<std::mutex> lock(readers_mu_);
    reader_fds_.push_back(fd);
    readers_.emplace_back([this, fd] { read_loop(fd); });
  }
}

void TcpNode::read_loop(int fd) {
  FrameDecoder decoder;
  std::uint8_t buf[64 * 1024];
  while (running_) {
    auto n = ::recv(fd, buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return;
    try {
      decoder.feed(ByteView(buf, static_cast<std::size_t>(n)));
      while (auto f = decoder.next()) push(Inbound{Time{0}, 0, std::nullopt, std::move(*f)});
    } catch (const DecodeError&) {
      return;  // oversize frame: drop the connection
    }
  }
}

void TcpNode::write_loop(Principal peer, Outbox& box) {
  int fd = -1;
  while (running_) {
    Bytes next;
    {
      std::unique_lock<std::mutex> lock(box.mu);
      box.cv.wait(lock, [&] { return !running_ || !box.frames.empty(); });
      if (!running_) break;
      next = std::move(box.frames.front());
      box.frames.pop_front();
    }
    for (int attempt = 0; fd < 0 && running_ && attempt < 200; ++attempt) {
      fd = connect_to(peers_.at(peer));
      if (fd < 0) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    if (fd < 0) continue;  // peer unreachable; the protocol's retransmission covers the loss
    if (!write_all(fd, next.data(), next.size())) {
      ::close(fd);
      fd = -1;
    }
  }
  if (fd >= 0) ::close(fd);
}

void TcpNode::event_loop() {
  bool started = false;
  while (running_) {
    Inbound in;
    {
      std::unique_lock<std::mutex> lock(in_mu_);
      for (;;) {
        if (!running_) return;
        if (!inbox_.empty()) {
          auto due = inbox_.top().due;
          auto t = now();
          if (due <= t) break;
          in_cv_.wait_for(lock, due - t);
        } else {
          in_cv_.wait(lock);
        }
      }
      in = inbox_.top();
      inbox_.pop();
    }
    const Time t = now();
    std::vector<Action> actions;
    if (in.timer) {
      actions = actor_->on_timer(*in.timer, t);
    } else if (!started && in.bytes.empty()) {
      started = true;
      actions = actor_->on_start(t);
    } else {
      actions = actor_->on_message(view(in.bytes), t);
    }
    apply(actions, t);
  }
}

void TcpNode::apply(std::vector<Action>& actions, Time at) {
  for (auto& a : actions) {
    std::visit(overloaded{
                   [&](action::Send& s) {
                     auto framed = frame(view(encode(s.msg)));
                     for (auto to : s.to) {
                       auto it = outboxes_.find(to);
                       if (it == outboxes_.end()) continue;
                       {
                         std::lock_guard<std::mutex> lock(it->second->mu);
                         it->second->frames.push_back(framed);
                       }
                       it->second->cv.notify_one();
                     }
                   },
                   [&](action::StartTimer& timer) { push(Inbound{at + timer.duration, 0, timer.id, {}}); },
                   [](auto&) {},
               },
               a);
    if (observer_) observer_(a, at);
  }
}

Metrics run_tcp_bench(const BenchConfig& cfg, std::uint16_t base_port, Duration timeout) {
  cfg.validate();
  if (cfg.duration) throw ConfigError("the TCP bench runs a request count, not a duration");
  ClusterConfig cc;
  cc.mode = cfg.mode;
  cc.f = cfg.f;
  cc.k = cfg.k;
  cc.key_bits = cfg.crypto_key_bits;
  cc.crypto_key_bits = cfg.crypto_key_bits;
  cc.batching = cfg.batching;
  cc.ct_batching = cfg.ct_batching;
  cc.window = cfg.window;
  cc.max_batch = cfg.max_batch;
  cc.seed = cfg.seed;
  cc.clients = cfg.clients;
  cc.requests_per_client = cfg.requests_per_client;
  cc.payload_bytes = cfg.request_bytes;
  cc.costs = CostTable::zero();  // real crypto runs; nothing is charged on top
  cc.os_entropy = true;
  auto actors = make_actors(cc);

  const std::uint32_t n_rep = 3 * cfg.f + 1;
  auto port_of = [&](Principal p) {
    return static_cast<std::uint16_t>(base_port + (p < n_rep ? p : n_rep + (p - kFirstClientId)));
  };
  std::map<Principal, Endpoint> everyone;
  for (const auto& a : actors) everyone[a->id()] = Endpoint{"127.0.0.1", port_of(a->id())};

  std::mutex mu;
  std::condition_variable done_cv;
  Metrics m;
  const std::uint64_t expected = cfg.requests_per_client * cfg.clients;
  // Latency at the clients, throughput at the primary.
  auto observe = [&](Principal id, const Action& a) {
    std::lock_guard<std::mutex> lock(mu);
    if (const auto* acc = std::get_if<action::Accept>(&a)) {
      m.samples.push_back(acc->latency);
      if (m.samples.size() == expected) done_cv.notify_all();
    } else if (std::holds_alternative<action::Deliver>(a) && id == 0) {
      ++m.delivered;
    }
  };

  std::vector<std::unique_ptr<TcpNode>> nodes;
  for (auto& a : actors) {
    auto id = a->id();
    auto peers = everyone;
    peers.erase(id);
    nodes.push_back(std::make_unique<TcpNode>(std::move(a), port_of(id), std::move(peers),
                                              [&observe, id](const Action& act, Time) { observe(id, act); }));
  }
  for (auto& n : nodes) n->listen();
  const auto wall_start = std::chrono::steady_clock::now();
  for (auto& n : nodes) n->start();
  {
    std::unique_lock<std::mutex> lock(mu);
    if (!done_cv.wait_for(lock, timeout, [&] { return m.samples.size() >= expected; })) m.complete = false;
  }
  const auto wall = std::chrono::steady_clock::now() - wall_start;
  for (auto& n : nodes) n->stop();

  std::lock_guard<std::mutex> lock(mu);
  summarize(m);
  m.span = std::chrono::duration_cast<Duration>(wall);
  if (m.span.count() > 0)
    m.throughput_rps = static_cast<double>(m.delivered) / std::chrono::duration<double>(m.span).count();
  return m;
}

}  // namespace bftrand::net
