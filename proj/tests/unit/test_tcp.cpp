#include <gtest/gtest.h>

#include "bftrand/tcp.hpp"
#include "generators.hpp"

using namespace bftrand;
using namespace bftrand::net;

TEST(Frame, LengthPrefix) {
  Bytes msg{1, 2, 3};
  EXPECT_EQ(frame(view(msg)), (Bytes{0, 0, 0, 3, 1, 2, 3}));
}

TEST(FrameDecoder, ReassemblesAcrossChunks) {
  gen::Rng rng(6);
  std::vector<Bytes> msgs;
  Bytes stream;
  for (int i = 0; i < 50; ++i) {
    msgs.push_back(encode(gen::message(rng)));
    auto f = frame(view(msgs.back()));
    stream.insert(stream.end(), f.begin(), f.end());
  }
  FrameDecoder dec;
  std::vector<Bytes> got;
  std::size_t pos = 0;
  while (pos < stream.size()) {
    std::size_t n = std::min<std::size_t>(1 + rng() % 37, stream.size() - pos);
    dec.feed(ByteView(stream.data() + pos, n));
    pos += n;
    while (auto m = dec.next()) got.push_back(*m);
  }
  EXPECT_EQ(got, msgs);
  EXPECT_FALSE(dec.next().has_value());
}

TEST(FrameDecoder, OversizeFrameRejected) {
  FrameDecoder dec;
  Bytes header{0xff, 0xff, 0xff, 0xff};
  dec.feed(view(header));
  EXPECT_THROW(dec.next(), DecodeError);
}

TEST(Endpoint, Parse) {
  auto e = parse_endpoint("127.0.0.1:47001");
  EXPECT_EQ(e.host, "127.0.0.1");
  EXPECT_EQ(e.port, 47001);
  EXPECT_THROW(parse_endpoint("nohost"), ConfigError);
  EXPECT_THROW(parse_endpoint("h:99999"), ConfigError);
}

TEST(Loopback, SmallClusterCompletes) {
  for (Mode mode : {Mode::ba, Mode::ct}) {
    BenchConfig c;
    c.mode = mode;
    c.clients = 2;
    c.requests_per_client = 10;
    c.request_bytes = 64;
    c.batching = true;
    c.ct_batching = true;
    auto m = run_tcp_bench(c, mode == Mode::ba ? 47310 : 47340, std::chrono::seconds(60));
    EXPECT_TRUE(m.complete) << mode_name(mode);
    EXPECT_TRUE(m.safe) << mode_name(mode);
    EXPECT_EQ(m.samples.size(), 20u) << mode_name(mode);
  }
}
