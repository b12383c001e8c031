#include "bftrand/threshold.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "bftrand/authcrypt.hpp"
#include "bftrand/entropy.hpp"

namespace bftrand::threshold {

namespace {

// Challenge length in bits (L1).
constexpr unsigned kChallengeBits = 128;
constexpr int kPrimeReps = 30;

bool is_prime(const mpz_class& n) { return mpz_probab_prime_p(n.get_mpz_t(), kPrimeReps) != 0; }

mpz_class powm(const mpz_class& base, const mpz_class& exp, const mpz_class& mod) {
  mpz_class out;
  if (exp >= 0) {
    mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
    return out;
  }
  mpz_class inv;
  if (mpz_invert(inv.get_mpz_t(), base.get_mpz_t(), mod.get_mpz_t()) == 0)
    throw std::domain_error("base not invertible modulo N");
  mpz_class pos = -exp;
  mpz_powm(out.get_mpz_t(), inv.get_mpz_t(), pos.get_mpz_t(), mod.get_mpz_t());
  return out;
}

mpz_class factorial(unsigned n) {
  mpz_class out;
  mpz_fac_ui(out.get_mpz_t(), n);
  return out;
}

/// Safe prime p = 2p'+1 with exactly `bits` bits and its top two bits set.
std::pair<mpz_class, mpz_class> safe_prime(gmp_randclass& rng, unsigned bits) {
  const unsigned half = bits - 1;  // bit length of p'
  mpz_class low = mpz_class(3) << (half - 2);
  mpz_class high = mpz_class(1) << half;
  for (;;) {
    mpz_class candidate = low + rng.get_z_range(high - low);
    mpz_class sophie;
    mpz_nextprime(sophie.get_mpz_t(), candidate.get_mpz_t());
    while (sophie < high) {
      mpz_class p = 2 * sophie + 1;
      if (is_prime(p)) return {p, sophie};
      mpz_class next;
      mpz_nextprime(next.get_mpz_t(), sophie.get_mpz_t());
      sophie = next;
    }
  }
}

void put_int(Writer& w, const mpz_class& v) { w.bytes(view(to_bytes(v))); }

/// Counter-mode SHA-256 expansion of `seed` to an integer of `bits` bits.
mpz_class expand(ByteView seed, unsigned bits) {
  Bytes stream;
  for (std::uint32_t ctr = 0; stream.size() * 8 < bits; ++ctr) {
    Writer w;
    w.u32(ctr);
    w.fixed(seed);
    auto block = sha256(view(w.data()));
    stream.insert(stream.end(), block.bytes.begin(), block.bytes.end());
  }
  mpz_class out = from_bytes(view(stream));
  return out >> (stream.size() * 8 - bits);
}

mpz_class challenge_hash(const GroupKey& gk, const mpz_class& x_tilde, const mpz_class& vi,
                         const mpz_class& xi_sq, const mpz_class& v_prime, const mpz_class& x_prime) {
  Writer w;
  for (const auto* v : {&gk.verifier, &x_tilde, &vi, &xi_sq, &v_prime, &x_prime}) put_int(w, *v);
  return expand(view(w.data()), kChallengeBits);
}

void check_params(unsigned k, unsigned l, unsigned key_bits) {
  if (std::find(std::begin(kSupportedKeyBits), std::end(kSupportedKeyBits), key_bits) ==
      std::end(kSupportedKeyBits))
    throw ParameterError("unsupported key size " + std::to_string(key_bits));
  if (k < 1 || k > l) throw ParameterError("threshold k must lie in [1, l]");
  if (l >= 65537) throw ParameterError("too many players for e = 65537");
}

}  // namespace

Bytes to_bytes(const mpz_class& v) {
  if (v < 0) throw std::invalid_argument("negative integers have no byte encoding");
  if (v == 0) return {};
  Bytes out((mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8);
  std::size_t written = 0;
  mpz_export(out.data(), &written, 1, 1, 1, 0, v.get_mpz_t());
  out.resize(written);
  return out;
}

mpz_class from_bytes(ByteView b) {
  mpz_class out;
  if (!b.empty()) mpz_import(out.get_mpz_t(), b.size(), 1, 1, 1, 0, b.data());
  return out;
}

mpz_class GroupKey::delta() const { return factorial(l); }

Dealing deal(unsigned k, unsigned l, unsigned key_bits, std::uint64_t seed) {
  check_params(k, l, key_bits);
  gmp_randclass rng(gmp_randinit_mt);
  rng.seed(mpz_class(std::to_string(seed)));

  const mpz_class e = 65537;
  Dealing out;
  auto& gk = out.key;
  auto& sec = out.secret;
  for (;;) {
    auto [p, pp] = safe_prime(rng, key_bits / 2);
    auto [q, qq] = safe_prime(rng, key_bits / 2);
    if (p == q) continue;
    mpz_class m = pp * qq;
    if (gcd(e, m) != 1) continue;
    sec.p = p;
    sec.q = q;
    sec.order = m;
    break;
  }
  gk.modulus = sec.p * sec.q;
  gk.exponent = e;
  gk.k = k;
  gk.l = l;
  gk.key_bits = key_bits;
  mpz_invert(sec.signing_exponent.get_mpz_t(), e.get_mpz_t(), sec.order.get_mpz_t());

  std::vector<mpz_class> coeffs{sec.signing_exponent};
  for (unsigned j = 1; j < k; ++j) coeffs.push_back(rng.get_z_range(sec.order));

  for (;;) {
    mpz_class r = rng.get_z_range(gk.modulus);
    if (r <= 1 || gcd(r, gk.modulus) != 1) continue;
    gk.verifier = powm(r, 2, gk.modulus);
    if (gk.verifier != 1) break;
  }

  for (unsigned i = 1; i <= l; ++i) {
    mpz_class acc = 0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = (acc * i + *it) % sec.order;
    out.shares.push_back({i, acc});
    gk.share_verifiers.push_back(powm(gk.verifier, acc, gk.modulus));
  }
  return out;
}

mpz_class hash_to_group(const GroupKey& gk, ByteView msg) {
  for (std::uint32_t attempt = 0;; ++attempt) {
    Writer w;
    w.u32(attempt);
    w.fixed(msg);
    mpz_class x = expand(view(w.data()), gk.key_bits + 128) % gk.modulus;
    if (x > 1 && gcd(x, gk.modulus) == 1) return x;
  }
}

SignatureShare sign_share(const GroupKey& gk, const KeyShare& ks, ByteView msg) {
  const mpz_class& n = gk.modulus;
  const mpz_class delta = gk.delta();
  mpz_class x = hash_to_group(gk, msg);

  SignatureShare s;
  s.holder = ks.holder;
  s.value = powm(x, 2 * delta * ks.secret, n);

  mpz_class x_tilde = powm(x, 4 * delta, n);
  Writer seed;
  seed.u64(ks.holder);
  put_int(seed, ks.secret);
  seed.bytes(msg);
  mpz_class r = expand(view(seed.data()), static_cast<unsigned>(mpz_sizeinbase(n.get_mpz_t(), 2)) + 2 * kChallengeBits);
  mpz_class v_prime = powm(gk.verifier, r, n);
  mpz_class x_prime = powm(x_tilde, r, n);
  const auto& vi = gk.share_verifiers.at(ks.holder - 1);
  s.challenge = challenge_hash(gk, x_tilde, vi, powm(s.value, 2, n), v_prime, x_prime);
  s.response = ks.secret * s.challenge + r;
  return s;
}

bool verify_share(const GroupKey& gk, ByteView msg, const SignatureShare& s) {
  const mpz_class& n = gk.modulus;
  if (s.holder < 1 || s.holder > gk.l) return false;
  if (s.value <= 0 || s.value >= n || gcd(s.value, n) != 1) return false;
  if (s.challenge < 0 || s.response < 0) return false;
  if (mpz_sizeinbase(s.challenge.get_mpz_t(), 2) > kChallengeBits) return false;
  const auto& vi = gk.share_verifiers.at(s.holder - 1);
  if (gcd(vi, n) != 1) return false;

  mpz_class x = hash_to_group(gk, msg);
  mpz_class x_tilde = powm(x, 4 * gk.delta(), n);
  mpz_class xi_sq = powm(s.value, 2, n);
  mpz_class v_prime = (powm(gk.verifier, s.response, n) * powm(vi, -s.challenge, n)) % n;
  mpz_class x_prime = (powm(x_tilde, s.response, n) * powm(xi_sq, -s.challenge, n)) % n;
  return challenge_hash(gk, x_tilde, vi, xi_sq, v_prime, x_prime) == s.challenge;
}

GroupSignature interpolate(const GroupKey& gk, ByteView msg, const std::vector<SignatureShare>& shares) {
  const mpz_class& n = gk.modulus;
  const mpz_class delta = gk.delta();
  mpz_class x = hash_to_group(gk, msg);

  mpz_class w = 1;
  for (const auto& sj : shares) {
    mpz_class num = delta;
    mpz_class den = 1;
    for (const auto& other : shares) {
      if (other.holder == sj.holder) continue;
      num *= -static_cast<long>(other.holder);
      den *= static_cast<long>(sj.holder) - static_cast<long>(other.holder);
    }
    mpz_class lambda;
    mpz_divexact(lambda.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    w = (w * powm(sj.value, 2 * lambda, n)) % n;
  }

  // w^e = x^{e'} with e' = 4 delta^2; with a e' + b e = 1, y = w^a x^b is the e-th root of x.
  mpz_class e_prime = 4 * delta * delta;
  mpz_class g, a, b;
  mpz_gcdext(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t(), e_prime.get_mpz_t(), gk.exponent.get_mpz_t());
  if (g != 1) throw std::domain_error("exponent shares a factor with 4 delta^2");
  GroupSignature sig;
  sig.value = (powm(w, a, n) * powm(x, b, n)) % n;
  return sig;
}

GroupSignature combine(const GroupKey& gk, ByteView msg, const std::vector<SignatureShare>& shares) {
  std::vector<SignatureShare> chosen;
  std::set<unsigned> holders;
  for (const auto& s : shares) {
    if (chosen.size() == gk.k) break;
    if (holders.count(s.holder) != 0) continue;
    if (!verify_share(gk, msg, s)) continue;
    holders.insert(s.holder);
    chosen.push_back(s);
  }
  if (chosen.size() < gk.k)
    throw InsufficientShares("need " + std::to_string(gk.k) + " valid shares, have " + std::to_string(chosen.size()));
  return interpolate(gk, msg, chosen);
}

bool verify_signature(const GroupKey& gk, ByteView msg, const GroupSignature& sig) {
  if (sig.value <= 0 || sig.value >= gk.modulus) return false;
  return powm(sig.value, gk.exponent, gk.modulus) == hash_to_group(gk, msg);
}

std::uint64_t signature_to_random(const GroupSignature& sig, unsigned bits, MapHash hash) {
  auto encoded = to_bytes(sig.value);
  if (hash == MapHash::sha1) return truncate_bits(view(sha1(view(encoded))), bits);
  return truncate_bits(view(sha256(view(encoded)).bytes), bits);
}

namespace {

std::string hex_of(const mpz_class& v) { return v.get_str(16); }

mpz_class parse_hex(const std::string& s) {
  mpz_class out;
  if (s.empty() || out.set_str(s, 16) != 0) throw ParameterError("invalid hex integer '" + s + "'");
  return out;
}

std::map<std::string, std::string> parse_fields(std::istringstream& line) {
  std::map<std::string, std::string> out;
  std::string tok;
  while (line >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw ParameterError("expected field=value, got '" + tok + "'");
    out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

const std::string& field(const std::map<std::string, std::string>& f, const std::string& name) {
  auto it = f.find(name);
  if (it == f.end()) throw ParameterError("missing field '" + name + "'");
  return it->second;
}

unsigned parse_uint(const std::string& s) {
  try {
    std::size_t pos = 0;
    auto v = std::stoul(s, &pos);
    if (pos != s.size()) throw ParameterError("invalid integer '" + s + "'");
    return static_cast<unsigned>(v);
  } catch (const std::logic_error&) {
    throw ParameterError("invalid integer '" + s + "'");
  }
}

}  // namespace

void write_group_key(std::ostream& os, const GroupKey& gk) {
  os << "group k=" << gk.k << " l=" << gk.l << " key_bits=" << gk.key_bits << " n=" << hex_of(gk.modulus)
     << " e=" << hex_of(gk.exponent) << " v=" << hex_of(gk.verifier) << '\n';
  for (std::size_t i = 0; i < gk.share_verifiers.size(); ++i)
    os << "verifier i=" << (i + 1) << " vk=" << hex_of(gk.share_verifiers[i]) << '\n';
}

void write_key_share(std::ostream& os, const KeyShare& ks) {
  os << "share i=" << ks.holder << " s=" << hex_of(ks.secret) << '\n';
}

KeyRecords read_records(std::istream& is) {
  KeyRecords out;
  bool have_group = false;
  std::map<unsigned, mpz_class> verifiers;
  std::string raw;
  while (std::getline(is, raw)) {
    std::istringstream line(raw);
    std::string kind;
    if (!(line >> kind) || kind.front() == '#') continue;
    auto f = parse_fields(line);
    if (kind == "group") {
      out.key.k = parse_uint(field(f, "k"));
      out.key.l = parse_uint(field(f, "l"));
      out.key.key_bits = parse_uint(field(f, "key_bits"));
      out.key.modulus = parse_hex(field(f, "n"));
      out.key.exponent = parse_hex(field(f, "e"));
      out.key.verifier = parse_hex(field(f, "v"));
      have_group = true;
    } else if (kind == "verifier") {
      verifiers[parse_uint(field(f, "i"))] = parse_hex(field(f, "vk"));
    } else if (kind == "share") {
      out.shares.push_back({parse_uint(field(f, "i")), parse_hex(field(f, "s"))});
    } else {
      throw ParameterError("unknown record kind '" + kind + "'");
    }
  }
  if (!have_group) throw ParameterError("no group record");
  for (unsigned i = 1; i <= out.key.l; ++i) {
    auto it = verifiers.find(i);
    if (it == verifiers.end()) throw ParameterError("missing verifier for holder " + std::to_string(i));
    out.key.share_verifiers.push_back(it->second);
  }
  for (const auto& s : out.shares)
    if (s.holder < 1 || s.holder > out.key.l) throw ParameterError("share holder out of range");
  return out;
}

}  // namespace bftrand::threshold
