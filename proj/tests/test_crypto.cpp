#include "doctest.h"

#include <random>
#include <set>

#include "bcdn/crypto.hpp"

using namespace bcdn::crypto;

namespace {

Bytes random_message(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> len(0, 200);
  std::uniform_int_distribution<int> byte(0, 255);
  Bytes m(len(rng));
  for (auto& b : m) b = static_cast<std::uint8_t>(byte(rng));
  return m;
}

const SchemeKind kBoth[] = {SchemeKind::Fast, SchemeKind::Sodium};

}  // namespace

TEST_CASE("generate_keypair is deterministic and seed-sensitive") {
  for (auto kind : kBoth) {
    auto scheme = make_scheme(kind);
    auto a = scheme->generate_keypair(7);
    auto b = scheme->generate_keypair(7);
    auto c = scheme->generate_keypair(8);
    CHECK(a.public_key == b.public_key);
    CHECK(a.private_key == b.private_key);
    CHECK(a.public_key != c.public_key);
  }
}

TEST_CASE("sign/verify round-trip and tamper detection") {
  for (auto kind : kBoth) {
    auto scheme = make_scheme(kind);
    auto kp = scheme->generate_keypair(7);
    std::string msg = "hello ledger";
    auto sig = scheme->sign(kp.private_key, as_span(msg));
    CHECK(scheme->verify(kp.public_key, as_span(msg), sig));

    std::string tampered = msg;
    tampered[0] ^= 1;
    CHECK_FALSE(scheme->verify(kp.public_key, as_span(tampered), sig));

    auto other = scheme->generate_keypair(8);
    CHECK_FALSE(scheme->verify(other.public_key, as_span(msg), sig));
  }
}

TEST_CASE("encrypt/decrypt round-trip; wrong key is an explicit failure") {
  for (auto kind : kBoth) {
    auto scheme = make_scheme(kind);
    auto alice = scheme->generate_keypair(1);
    auto bob = scheme->generate_keypair(2);
    std::string msg = "the content key";
    auto ct = scheme->encrypt(alice.public_key, as_span(msg));
    auto back = scheme->decrypt(alice.private_key, ct);
    REQUIRE(back.has_value());
    CHECK(*back == Bytes(msg.begin(), msg.end()));
    CHECK_FALSE(scheme->decrypt(bob.private_key, ct).has_value());
  }
}

TEST_CASE("round-trip properties over random messages") {
  std::mt19937_64 rng(42);
  for (auto kind : kBoth) {
    auto scheme = make_scheme(kind);
    for (int i = 0; i < 50; ++i) {
      auto kp = scheme->generate_keypair(100 + i);
      auto msg = random_message(rng);
      auto sig = scheme->sign(kp.private_key, as_span(msg));
      CHECK(scheme->verify(kp.public_key, as_span(msg), sig));
      if (!msg.empty()) {
        auto tampered = msg;
        std::uniform_int_distribution<std::size_t> pos(0, msg.size() - 1);
        tampered[pos(rng)] ^= 0x40;
        CHECK_FALSE(scheme->verify(kp.public_key, as_span(tampered), sig));
      }
      auto ct = scheme->encrypt(kp.public_key, as_span(msg));
      auto back = scheme->decrypt(kp.private_key, ct);
      REQUIRE(back.has_value());
      CHECK(*back == msg);
    }
  }
}

TEST_CASE("derive_vid is pure, fixed-length, collision-free at scale") {
  auto scheme = make_scheme(SchemeKind::Fast);
  auto kp = scheme->generate_keypair(5);
  auto v1 = derive_vid(*scheme, kp.public_key);
  auto v2 = derive_vid(*scheme, kp.public_key);
  CHECK(v1 == v2);
  CHECK(v1.bytes.size() == kDigestLen);

  std::set<Digest> vids;
  for (int i = 0; i < 1000; ++i)
    vids.insert(derive_vid(*scheme, scheme->generate_keypair(i).public_key));
  CHECK(vids.size() == 1000);
}

TEST_CASE("truncated or altered ciphertext never decrypts silently") {
  for (auto kind : kBoth) {
    auto scheme = make_scheme(kind);
    auto kp = scheme->generate_keypair(3);
    std::string msg = "payload";
    auto ct = scheme->encrypt(kp.public_key, as_span(msg));

    auto truncated = ct;
    truncated.ct.resize(4);
    CHECK_FALSE(scheme->decrypt(kp.private_key, truncated).has_value());

    auto flipped = ct;
    flipped.ct[flipped.ct.size() / 2] ^= 1;
    CHECK_FALSE(scheme->decrypt(kp.private_key, flipped).has_value());
  }
}

TEST_CASE("hex round-trip") {
  Bytes data = {0x00, 0xde, 0xad, 0xbe, 0xef, 0xff};
  auto hex = to_hex(as_span(data));
  CHECK(hex == "00deadbeefff");
  auto back = from_hex(hex);
  REQUIRE(back.has_value());
  CHECK(*back == data);
  CHECK_FALSE(from_hex("abc").has_value());
  CHECK_FALSE(from_hex("zz").has_value());
}
