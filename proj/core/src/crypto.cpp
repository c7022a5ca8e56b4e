#include "bcdn/crypto.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

namespace bcdn::crypto {

namespace {

const char kHexDigits[] = "0123456789abcdef";

// Strict lowercase: every serializer here emits lowercase hex, and accepting
// the uppercase alias would let a case-flipping byte edit slip past verify().
int hex_val(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw std::runtime_error("sodium_init failed");
}

Digest sha256(std::span<const std::uint8_t> data) {
  ensure_sodium();
  Digest d;
  crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
  return d;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d9d49b94582575ULL;
  return z ^ (z >> 31);
}

Bytes expand_seed(std::uint64_t seed, std::size_t n) {
  Bytes out(n);
  std::uint64_t state = seed;
  for (std::size_t i = 0; i < n; i += 8) {
    std::uint64_t w = splitmix64(state);
    for (std::size_t j = 0; j < 8 && i + j < n; ++j)
      out[i + j] = static_cast<std::uint8_t>(w >> (8 * j));
  }
  return out;
}

Bytes cat(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  Bytes out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Hash-based scheme with no security claims: signatures and key streams are
// derived from the public key alone, so everything is reproducible from a
// 64-bit seed. Round-trip, tamper and wrong-key behavior match the real
// scheme, which is all the simulation observes.
class FastScheme : public Scheme {
 public:
  KeyPair generate_keypair(std::uint64_t seed) const override {
    KeyPair kp;
    kp.private_key = expand_seed(seed, 32);
    kp.public_key = pub_from_priv(kp.private_key);
    return kp;
  }

  Digest hash(std::span<const std::uint8_t> data) const override {
    return sha256(data);
  }

  Signature sign(const Bytes& private_key,
                 std::span<const std::uint8_t> message) const override {
    Bytes pub = pub_from_priv(private_key);
    Digest d = sha256(cat(as_span(pub), message));
    return Signature{Bytes(d.bytes.begin(), d.bytes.end())};
  }

  bool verify(const Bytes& public_key, std::span<const std::uint8_t> message,
              const Signature& signature) const override {
    Digest d = sha256(cat(as_span(public_key), message));
    return signature.sig == Bytes(d.bytes.begin(), d.bytes.end());
  }

  Ciphertext encrypt(const Bytes& public_key,
                     std::span<const std::uint8_t> message) const override {
    Digest tag = sha256(cat(as_span(public_key), message));
    Bytes out(tag.bytes.begin(), tag.bytes.end());
    Bytes stream = keystream(public_key, message.size());
    for (std::size_t i = 0; i < message.size(); ++i)
      out.push_back(message[i] ^ stream[i]);
    return Ciphertext{std::move(out)};
  }

  std::optional<Bytes> decrypt(const Bytes& private_key,
                               const Ciphertext& ciphertext) const override {
    if (ciphertext.ct.size() < kDigestLen) return std::nullopt;
    Bytes pub = pub_from_priv(private_key);
    std::size_t n = ciphertext.ct.size() - kDigestLen;
    Bytes stream = keystream(pub, n);
    Bytes plain(n);
    for (std::size_t i = 0; i < n; ++i)
      plain[i] = ciphertext.ct[kDigestLen + i] ^ stream[i];
    Digest tag = sha256(cat(as_span(pub), as_span(plain)));
    if (!std::equal(tag.bytes.begin(), tag.bytes.end(), ciphertext.ct.begin()))
      return std::nullopt;
    return plain;
  }

 private:
  static Bytes pub_from_priv(const Bytes& priv) {
    static const std::string label = "bcdn-pub";
    Digest d = sha256(cat(as_span(priv), as_span(label)));
    return Bytes(d.bytes.begin(), d.bytes.end());
  }

  static Bytes keystream(const Bytes& pub, std::size_t n) {
    Bytes out;
    out.reserve(n + kDigestLen);
    std::uint64_t ctr = 0;
    while (out.size() < n) {
      Bytes block = pub;
      for (int i = 0; i < 8; ++i)
        block.push_back(static_cast<std::uint8_t>(ctr >> (8 * i)));
      Digest d = sha256(as_span(block));
      out.insert(out.end(), d.bytes.begin(), d.bytes.end());
      ++ctr;
    }
    out.resize(n);
    return out;
  }
};

// ed25519 signatures, sealed-box encryption over the converted x25519 keys.
// private_key holds the 64-byte ed25519 secret key (seed || public).
class SodiumScheme : public Scheme {
 public:
  KeyPair generate_keypair(std::uint64_t seed) const override {
    ensure_sodium();
    Bytes sk_seed = expand_seed(seed, crypto_sign_SEEDBYTES);
    KeyPair kp;
    kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
    kp.private_key.resize(crypto_sign_SECRETKEYBYTES);
    crypto_sign_seed_keypair(kp.public_key.data(), kp.private_key.data(),
                             sk_seed.data());
    return kp;
  }

  Digest hash(std::span<const std::uint8_t> data) const override {
    return sha256(data);
  }

  Signature sign(const Bytes& private_key,
                 std::span<const std::uint8_t> message) const override {
    ensure_sodium();
    Signature s;
    s.sig.resize(crypto_sign_BYTES);
    crypto_sign_detached(s.sig.data(), nullptr, message.data(), message.size(),
                         private_key.data());
    return s;
  }

  bool verify(const Bytes& public_key, std::span<const std::uint8_t> message,
              const Signature& signature) const override {
    ensure_sodium();
    if (public_key.size() != crypto_sign_PUBLICKEYBYTES) return false;
    if (signature.sig.size() != crypto_sign_BYTES) return false;
    return crypto_sign_verify_detached(signature.sig.data(), message.data(),
                                       message.size(),
                                       public_key.data()) == 0;
  }

  Ciphertext encrypt(const Bytes& public_key,
                     std::span<const std::uint8_t> message) const override {
    ensure_sodium();
    std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> curve_pk;
    if (crypto_sign_ed25519_pk_to_curve25519(curve_pk.data(),
                                             public_key.data()) != 0)
      throw std::runtime_error("encrypt: bad public key");
    Ciphertext c;
    c.ct.resize(crypto_box_SEALBYTES + message.size());
    crypto_box_seal(c.ct.data(), message.data(), message.size(),
                    curve_pk.data());
    return c;
  }

  std::optional<Bytes> decrypt(const Bytes& private_key,
                               const Ciphertext& ciphertext) const override {
    ensure_sodium();
    if (private_key.size() != crypto_sign_SECRETKEYBYTES) return std::nullopt;
    if (ciphertext.ct.size() < crypto_box_SEALBYTES) return std::nullopt;
    std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> curve_sk;
    if (crypto_sign_ed25519_sk_to_curve25519(curve_sk.data(),
                                             private_key.data()) != 0)
      return std::nullopt;
    std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> curve_pk;
    crypto_scalarmult_base(curve_pk.data(), curve_sk.data());
    Bytes plain(ciphertext.ct.size() - crypto_box_SEALBYTES);
    if (crypto_box_seal_open(plain.data(), ciphertext.ct.data(),
                             ciphertext.ct.size(), curve_pk.data(),
                             curve_sk.data()) != 0)
      return std::nullopt;
    return plain;
  }
};

}  // namespace

bool Digest::is_zero() const {
  for (auto b : bytes)
    if (b != 0) return false;
  return true;
}

std::string Digest::hex() const { return to_hex({bytes.data(), bytes.size()}); }

std::optional<Digest> Digest::from_hex(const std::string& s) {
  auto raw = crypto::from_hex(s);
  if (!raw || raw->size() != kDigestLen) return std::nullopt;
  Digest d;
  std::memcpy(d.bytes.data(), raw->data(), kDigestLen);
  return d;
}

std::size_t DigestHash::operator()(const Digest& d) const {
  std::size_t h;
  std::memcpy(&h, d.bytes.data(), sizeof(h));
  return h;
}

std::shared_ptr<const Scheme> make_scheme(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::Fast:
      return std::make_shared<FastScheme>();
    case SchemeKind::Sodium:
      return std::make_shared<SodiumScheme>();
  }
  throw std::invalid_argument("unknown scheme kind");
}

VirtualIdentity derive_vid(const Scheme& scheme, const Bytes& public_key) {
  return scheme.hash(as_span(public_key));
}

std::string to_hex(std::span<const std::uint8_t> data) {
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0xf]);
  }
  return out;
}

std::optional<Bytes> from_hex(const std::string& s) {
  if (s.size() % 2 != 0) return std::nullopt;
  Bytes out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = hex_val(s[2 * i]);
    int lo = hex_val(s[2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

}  // namespace bcdn::crypto
