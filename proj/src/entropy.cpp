#include "bftrand/entropy.hpp"

#include <set>
#include <string>

namespace bftrand {

EntropySource::EntropySource(OsEntropy) : kind_(Kind::os) {}

EntropySource::EntropySource(Seeded s) : kind_(Kind::seeded), prng_(s.seed) {}

EntropySource::EntropySource(Scripted s)
    : kind_(Kind::scripted), script_(s.shares.begin(), s.shares.end()) {}

RandomShare EntropySource::extract_share() {
  RandomShare out;
  switch (kind_) {
    case Kind::os: {
      std::random_device device;
      for (std::size_t i = 0; i < out.bytes.size(); i += 4) {
        auto word = device();
        for (std::size_t j = 0; j < 4; ++j) out.bytes[i + j] = static_cast<std::uint8_t>(word >> (8 * j));
      }
      break;
    }
    case Kind::seeded:
      for (std::size_t i = 0; i < out.bytes.size(); i += 8) {
        auto word = prng_();
        for (std::size_t j = 0; j < 8; ++j) out.bytes[i + j] = static_cast<std::uint8_t>(word >> (8 * j));
      }
      break;
    case Kind::scripted:
      if (script_.empty()) throw EntropyExhausted("scripted entropy source exhausted");
      out = script_.front();
      script_.pop_front();
      break;
    case Kind::constant:
      out = script_.front();
      break;
  }
  return out;
}

CombinedRandom xor_shares(const std::vector<ShareEntry>& entries) {
  CombinedRandom r;
  for (const auto& e : entries)
    for (std::size_t i = 0; i < r.bytes.size(); ++i) r.bytes[i] ^= e.share.bytes[i];
  return r;
}

CombinedRandom combine(const ShareSet& set, std::uint32_t f) {
  if (set.entries.size() != 2 * f + 1)
    throw ShareSetError("share set must hold exactly 2f+1 = " + std::to_string(2 * f + 1) + " entries, got " +
                        std::to_string(set.entries.size()));
  std::set<ReplicaId> ids;
  for (const auto& e : set.entries)
    if (!ids.insert(e.replica).second) throw ShareSetError("duplicate replica id in share set");
  return xor_shares(set.entries);
}

std::uint64_t truncate_bits(ByteView value, unsigned bits) {
  if (bits != 8 && bits != 16 && bits != 32 && bits != 64)
    throw std::invalid_argument("unsupported random width " + std::to_string(bits));
  auto n = bits / 8;
  if (value.size() < n) throw std::invalid_argument("value shorter than requested width");
  std::uint64_t out = 0;
  for (unsigned i = 0; i < n; ++i) out = (out << 8) | value[i];
  return out;
}

Bytes random_bytes(std::uint64_t value, unsigned bits) {
  Bytes out(bits / 8);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[out.size() - 1 - i] = static_cast<std::uint8_t>(value >> (8 * i));
  return out;
}

}  // namespace bftrand
