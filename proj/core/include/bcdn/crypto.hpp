#ifndef BCDN_CRYPTO_HPP
#define BCDN_CRYPTO_HPP

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bcdn::crypto {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kDigestLen = 32;

/// Fixed-length hash output. Also used as a virtual identity (vid).
struct Digest {
  std::array<std::uint8_t, kDigestLen> bytes{};

  bool operator==(const Digest&) const = default;
  auto operator<=>(const Digest&) const = default;

  bool is_zero() const;
  std::string hex() const;
  static std::optional<Digest> from_hex(const std::string& s);
};

struct DigestHash {
  std::size_t operator()(const Digest& d) const;
};

struct KeyPair {
  Bytes private_key;
  Bytes public_key;
};

struct Signature {
  Bytes sig;
  bool operator==(const Signature&) const = default;
};

struct Ciphertext {
  Bytes ct;
};

using VirtualIdentity = Digest;

enum class SchemeKind {
  Fast,    // deterministic hash-based toy scheme for simulation runs
  Sodium,  // ed25519 / sealed-box via libsodium
};

/// Abstract primitive set shared by every protocol message. All member
/// functions are pure with respect to the scheme object; instances are
/// safe to share across threads.
class Scheme {
 public:
  virtual ~Scheme() = default;

  virtual KeyPair generate_keypair(std::uint64_t seed) const = 0;
  virtual Digest hash(std::span<const std::uint8_t> data) const = 0;
  virtual Signature sign(const Bytes& private_key,
                         std::span<const std::uint8_t> message) const = 0;
  virtual bool verify(const Bytes& public_key,
                      std::span<const std::uint8_t> message,
                      const Signature& signature) const = 0;
  virtual Ciphertext encrypt(const Bytes& public_key,
                             std::span<const std::uint8_t> message) const = 0;
  // nullopt on any decryption failure (wrong key, truncated or altered
  // ciphertext); never returns garbage plaintext.
  virtual std::optional<Bytes> decrypt(const Bytes& private_key,
                                       const Ciphertext& ciphertext) const = 0;
};

std::shared_ptr<const Scheme> make_scheme(SchemeKind kind);

/// vid = hash(public_key)
VirtualIdentity derive_vid(const Scheme& scheme, const Bytes& public_key);

// hex helpers shared by ledger export and logs
std::string to_hex(std::span<const std::uint8_t> data);
std::optional<Bytes> from_hex(const std::string& s);

inline std::span<const std::uint8_t> as_span(const Bytes& b) {
  return {b.data(), b.size()};
}
inline std::span<const std::uint8_t> as_span(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace bcdn::crypto

#endif
