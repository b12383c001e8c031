#include <gtest/gtest.h>

#include "bftrand/message.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace bftrand;

TEST(Message, PrepareRoundTrip) {
  Message m{Prepare{0, 1, 2, Digest{}}, {}};
  const Bytes a = encode(m), b = encode(m);
  EXPECT_EQ(a, b);
  EXPECT_EQ(decode(view(a)), m);
}

TEST(Message, RandomRoundTrip) {
  gen::Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    auto m = gen::message(rng);
    ASSERT_EQ(decode(view(encode(m))), m) << "message " << i;
  }
}

TEST(Message, EmptyInputRejected) { EXPECT_THROW(decode(ByteView{}), DecodeError); }

TEST(Message, UnknownTagRejected) {
  auto b = encode(Message{Prepare{}, {}});
  b[0] = 0x7f;
  EXPECT_THROW(decode(view(b)), DecodeError);
}

TEST(Message, TrailingByteRejected) {
  gen::Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    auto b = encode(gen::message(rng));
    b.push_back(static_cast<std::uint8_t>(rng()));
    ASSERT_THROW(decode(view(b)), DecodeError);
  }
}

TEST(Message, EveryTruncationRejected) {
  gen::Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto b = encode(gen::message(rng));
    for (std::size_t len = 0; len < b.size(); ++len)
      ASSERT_THROW(decode(ByteView(b.data(), len)), DecodeError) << "message " << i << " length " << len;
  }
}

TEST(Message, AuthenticatorCoversBodyOnly) {
  Message m{Prepare{1, 2, 3, Digest{}}, {}};
  auto body = encode_body(m.body);
  auto full = encode(m);
  ASSERT_GE(full.size(), body.size());
  EXPECT_TRUE(std::equal(body.begin(), body.end(), full.begin()));
}

TEST(Message, SenderOf) {
  EXPECT_EQ(sender_of(Request{kFirstClientId + 3, 1, {}}, 4), kFirstClientId + 3);
  EXPECT_EQ(sender_of(PrePrepare{5, 1, {}, {}, {}}, 4), 1u);
  EXPECT_EQ(sender_of(Prepare{0, 1, 2, {}}, 4), 2u);
  EXPECT_EQ(sender_of(Commit{0, 1, 3, {}, {}}, 4), 3u);
}

TEST(Message, BatchDigestIsOverConcatenatedRequests) {
  std::vector<Request> batch{{kFirstClientId, 1, oracle::ascii("a")}, {kFirstClientId + 1, 1, oracle::ascii("b")}};
  Bytes concat;
  for (const auto& r : batch) {
    auto e = encode_body(r);
    concat.insert(concat.end(), e.begin(), e.end());
  }
  auto d = batch_digest(batch);
  EXPECT_EQ(Bytes(d.bytes.begin(), d.bytes.end()), oracle::sha256(concat));
}

TEST(Message, BindRandomAndCoinMessage) {
  Digest d;
  d.bytes.fill(0x11);
  CombinedRandom r;
  r.bytes.fill(0x22);
  Bytes expect(d.bytes.begin(), d.bytes.end());
  expect.insert(expect.end(), r.bytes.begin(), r.bytes.end());
  auto bound = bind_random(d, r);
  EXPECT_EQ(Bytes(bound.bytes.begin(), bound.bytes.end()), oracle::sha256(expect));

  auto coin = coin_message(d, 0x0102030405060708ull);
  Bytes expect_coin(d.bytes.begin(), d.bytes.end());
  for (std::uint8_t b = 1; b <= 8; ++b) expect_coin.push_back(b);
  EXPECT_EQ(coin, expect_coin);
}
