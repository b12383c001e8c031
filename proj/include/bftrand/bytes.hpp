#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bftrand {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Fixed-width 32-byte value used for digests, MACs and entropy shares.
using Block32 = std::array<std::uint8_t, 32>;

struct DecodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

inline ByteView view(const Block32& b) { return {b.data(), b.size()}; }
inline ByteView view(const Bytes& b) { return {b.data(), b.size()}; }

Bytes concat(ByteView a, ByteView b);

/// Appends big-endian integers and length-prefixed byte strings.
class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void fixed(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }
  /// 4-byte big-endian length followed by the bytes.
  void bytes(ByteView b);
  void boolean(bool v) { u8(v ? 1 : 0); }

  const Bytes& data() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
};

/// Cursor over an input buffer; every read throws DecodeError on truncation.
class Reader {
 public:
  explicit Reader(ByteView in) : in_(in) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  Block32 block32();
  Bytes bytes();
  bool boolean();

  std::size_t remaining() const { return in_.size() - pos_; }
  std::size_t position() const { return pos_; }
  void expect_end() const;

 private:
  void need(std::size_t n) const;

  ByteView in_;
  std::size_t pos_ = 0;
};

}  // namespace bftrand
