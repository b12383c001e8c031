#include "bftrand/actor.hpp"

#include <cmath>
#include <string>

namespace bftrand {

namespace {
constexpr Duration us(double micros) { return Duration{static_cast<std::int64_t>(std::llround(micros * 1000.0))}; }
constexpr Duration ms(double millis) { return us(millis * 1000.0); }
}  // namespace

CostTable CostTable::reference() {
  CostTable t;
  t.mac_gen = us(24.1);
  t.mac_verify = us(237.3);
  t.auth_gen = us(80.2);
  t.auth_verify = us(892.0);
  t.threshold[{2, 64}] = {ms(2.2), ms(4.6)};
  t.threshold[{2, 128}] = {ms(7.1), ms(12.8)};
  t.threshold[{2, 256}] = {ms(31.7), ms(58.5)};
  t.threshold[{2, 512}] = {ms(179.1), ms(338.2)};
  t.threshold[{2, 1024}] = {ms(1191.7), ms(1381.4)};
  t.threshold[{3, 64}] = {ms(2.2), ms(5.6)};
  t.threshold[{3, 128}] = {ms(7.1), ms(18.5)};
  t.threshold[{3, 256}] = {ms(31.7), ms(80.0)};
  t.threshold[{3, 512}] = {ms(179.1), ms(449.7)};
  t.threshold[{3, 1024}] = {ms(1191.7), ms(2292.1)};
  return t;
}

Duration CostTable::sign_cost(unsigned k, unsigned key_bits) const {
  auto it = threshold.find({k, key_bits});
  if (it == threshold.end())
    throw ConfigError("no threshold cost for k=" + std::to_string(k) + " key_bits=" + std::to_string(key_bits));
  return it->second.first;
}

Duration CostTable::combine_cost(unsigned k, unsigned key_bits) const {
  auto it = threshold.find({k, key_bits});
  if (it == threshold.end())
    throw ConfigError("no threshold cost for k=" + std::to_string(k) + " key_bits=" + std::to_string(key_bits));
  return it->second.second;
}

CostTable CostTable::scaled(double factor) const {
  auto scale = [factor](Duration d) {
    return Duration{static_cast<std::int64_t>(std::llround(static_cast<double>(d.count()) * factor))};
  };
  CostTable out;
  out.auth_gen = scale(auth_gen);
  out.auth_verify = scale(auth_verify);
  out.mac_gen = scale(mac_gen);
  out.mac_verify = scale(mac_verify);
  for (const auto& [key, v] : threshold) out.threshold[key] = {scale(v.first), scale(v.second)};
  return out;
}

void OpMeter::charge(CryptoOp op) {
  ++counts_[static_cast<std::size_t>(op)];
  switch (op) {
    case CryptoOp::auth_gen: elapsed_ += costs_.auth_gen; break;
    case CryptoOp::auth_verify: elapsed_ += costs_.auth_verify; break;
    case CryptoOp::mac_gen: elapsed_ += costs_.mac_gen; break;
    case CryptoOp::mac_verify: elapsed_ += costs_.mac_verify; break;
    case CryptoOp::thresh_sign:
      if (charge_threshold_) elapsed_ += costs_.sign_cost(k_, key_bits_);
      break;
    case CryptoOp::thresh_combine:
      if (charge_threshold_) elapsed_ += costs_.combine_cost(k_, key_bits_);
      break;
  }
}

}  // namespace bftrand
