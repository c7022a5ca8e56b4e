#include "doctest.h"

#include <random>
#include <sstream>

#include "bcdn/ledger.hpp"

using namespace bcdn;
using namespace bcdn::ledger;

namespace {

struct Fixture {
  std::shared_ptr<const crypto::Scheme> scheme =
      crypto::make_scheme(crypto::SchemeKind::Fast);
  crypto::KeyPair node = scheme->generate_keypair(1000);
  Chain chain{scheme};

  Fixture() { chain.authorize_node_key(node.public_key); }

  CpRegistration cp_tx(const std::string& cp_id, std::uint64_t seed) {
    CpRegistration tx;
    tx.cp_id = cp_id;
    tx.cp_public_key = scheme->generate_keypair(seed).public_key;
    tx.address = "addr-" + cp_id;
    tx.public_info = "info";
    return tx;
  }

  UserRegistration user_tx(std::uint64_t seed) {
    auto kp = scheme->generate_keypair(seed);
    UserRegistration tx;
    tx.user_public_key = kp.public_key;
    tx.vid = crypto::derive_vid(*scheme, kp.public_key);
    auto payload = user_registration_payload(tx.user_public_key, tx.vid);
    tx.node_signature =
        scheme->sign(node.private_key, crypto::as_span(payload));
    return tx;
  }

  ContractRecord contract_tx(const crypto::Digest& vid,
                             const std::string& cp_id, const std::string& cid,
                             std::uint64_t ts) {
    ContractRecord tx;
    tx.contract_id = "c" + cid;
    tx.vid = vid;
    tx.cp_id = cp_id;
    ContentMetadata meta;
    meta.content_id = cid;
    meta.features = FeatureVector(3);
    meta.features.bits[0] = 1;
    meta.cp_id = cp_id;
    tx.content = meta;
    tx.timestamp = ts;
    return tx;
  }
};

}  // namespace

TEST_CASE("smallest append: genesis plus one registration verifies") {
  Fixture fx;
  CHECK(fx.chain.blocks().size() == 1);
  CHECK(fx.chain.blocks()[0].prev_digest.is_zero());

  fx.chain.append_block({fx.cp_tx("cp1", 1)}, 1);
  CHECK(fx.chain.blocks().size() == 2);
  CHECK(fx.chain.verify());
}

TEST_CASE("contract with unknown vid is rejected, chain unchanged") {
  Fixture fx;
  fx.chain.append_block({fx.cp_tx("cp1", 1)}, 1);
  crypto::Digest ghost;
  ghost.bytes[0] = 0xaa;
  auto before = fx.chain.blocks().size();
  CHECK_THROWS_AS(
      fx.chain.append_block({fx.contract_tx(ghost, "cp1", "42", 2)}, 2),
      ValidationError);
  CHECK(fx.chain.blocks().size() == before);
  CHECK(fx.chain.verify());
}

TEST_CASE("no partial append: one bad transaction rejects the whole batch") {
  Fixture fx;
  auto good = fx.cp_tx("cp1", 1);
  crypto::Digest ghost;
  auto before = fx.chain.blocks().size();
  CHECK_THROWS_AS(fx.chain.append_block(
                      {good, fx.contract_tx(ghost, "cp1", "1", 1)}, 1),
                  ValidationError);
  CHECK(fx.chain.blocks().size() == before);
  CHECK_FALSE(fx.chain.lookup_cp("cp1").has_value());
}

TEST_CASE("transactions appear in order across blocks") {
  Fixture fx;
  fx.chain.append_block({fx.cp_tx("cp1", 1)}, 0);
  auto u = fx.user_tx(50);
  fx.chain.append_block({u}, 1);
  for (int b = 0; b < 3; ++b)
    fx.chain.append_block(
        {fx.contract_tx(u.vid, "cp1", std::to_string(2 * b), 2 + b),
         fx.contract_tx(u.vid, "cp1", std::to_string(2 * b + 1), 2 + b)},
        2 + b);
  auto history = fx.chain.request_history_unchecked();
  REQUIRE(history.size() == 6);
  for (int i = 0; i < 6; ++i)
    CHECK(history[i].content_id == std::to_string(i));
}

TEST_CASE("lookup_vid: registered, missing, and two-user chains") {
  Fixture fx;
  auto u1 = fx.user_tx(11);
  auto u2 = fx.user_tx(22);
  fx.chain.append_block({u1, u2}, 1);
  CHECK(fx.chain.lookup_vid(u1.vid) == u1.user_public_key);
  CHECK(fx.chain.lookup_vid(u2.vid) == u2.user_public_key);
  crypto::Digest ghost;
  CHECK_FALSE(fx.chain.lookup_vid(ghost).has_value());
}

TEST_CASE("registration validation: forged vid and bad node signature") {
  Fixture fx;
  auto forged = fx.user_tx(1);
  forged.vid = crypto::derive_vid(
      *fx.scheme, fx.scheme->generate_keypair(2).public_key);
  CHECK_THROWS_AS(fx.chain.append_block({forged}, 1), ValidationError);

  auto bad_sig = fx.user_tx(3);
  bad_sig.node_signature.sig[0] ^= 1;
  CHECK_THROWS_AS(fx.chain.append_block({bad_sig}, 1), ValidationError);

  auto dup = fx.user_tx(4);
  fx.chain.append_block({dup}, 1);
  CHECK_THROWS_AS(fx.chain.append_block({dup}, 2), ValidationError);
}

TEST_CASE("verify_chain: reordering blocks breaks the links") {
  Fixture fx;
  fx.chain.append_block({fx.cp_tx("cp1", 1)}, 1);
  fx.chain.append_block({fx.cp_tx("cp2", 2)}, 2);
  CHECK(fx.chain.verify());

  std::ostringstream dump;
  fx.chain.export_to(dump);
  auto lines = dump.str();
  auto first_nl = lines.find('\n');
  auto second_nl = lines.find('\n', first_nl + 1);
  // swap block lines 2 and 3
  std::string swapped = lines.substr(0, first_nl + 1) +
                        lines.substr(second_nl + 1) +
                        lines.substr(first_nl + 1,
                                     second_nl - first_nl);
  std::istringstream in(swapped);
  auto imported = Chain::import_from(in, fx.scheme);
  if (imported) CHECK_FALSE(imported->verify());
}

TEST_CASE("export/import round-trip preserves integrity") {
  Fixture fx;
  fx.chain.append_block({fx.cp_tx("cp1", 1)}, 1);
  auto u = fx.user_tx(9);
  fx.chain.append_block({u}, 2);
  fx.chain.append_block({fx.contract_tx(u.vid, "cp1", "7", 3)}, 3);

  std::ostringstream dump;
  fx.chain.export_to(dump);
  std::istringstream in(dump.str());
  auto imported = Chain::import_from(in, fx.scheme);
  REQUIRE(imported.has_value());
  CHECK(imported->verify());
  CHECK(imported->blocks().size() == fx.chain.blocks().size());
  CHECK(imported->lookup_vid(u.vid) == u.user_public_key);

  std::ostringstream dump2;
  imported->export_to(dump2);
  CHECK(dump.str() == dump2.str());
}

TEST_CASE("tamper-evidence: any single-byte mutation is detected") {
  std::mt19937_64 rng(31337);
  Fixture fx;
  fx.chain.append_block({fx.cp_tx("cp1", 1)}, 1);
  auto u = fx.user_tx(8);
  fx.chain.append_block({u}, 2);
  for (int i = 0; i < 10; ++i)
    fx.chain.append_block(
        {fx.contract_tx(u.vid, "cp1", std::to_string(i), 3 + i)}, 3 + i);

  std::ostringstream dump;
  fx.chain.export_to(dump);
  std::string text = dump.str();

  std::uniform_int_distribution<std::size_t> pos(0, text.size() - 1);
  std::uniform_int_distribution<int> delta(1, 255);
  for (int trial = 0; trial < 200; ++trial) {
    std::string mutated = text;
    std::size_t p = pos(rng);
    mutated[p] = static_cast<char>(mutated[p] ^ delta(rng));
    std::istringstream in(mutated);
    auto imported = Chain::import_from(in, fx.scheme);
    // either the dump no longer parses or the chain no longer verifies
    if (imported) CHECK_FALSE(imported->verify());
  }
}

TEST_CASE("query_request_history: authorization and cross-CP visibility") {
  Fixture fx;
  auto cp1_keys = fx.scheme->generate_keypair(1);
  auto cp2_keys = fx.scheme->generate_keypair(2);
  fx.chain.append_block({fx.cp_tx("cp1", 1), fx.cp_tx("cp2", 2)}, 1);
  auto u = fx.user_tx(5);
  fx.chain.append_block({u}, 2);

  auto sig1 = fx.scheme->sign(cp1_keys.private_key,
                              crypto::as_span(history_query_payload("cp1")));
  CHECK(fx.chain.query_request_history("cp1", sig1).empty());

  fx.chain.append_block({fx.contract_tx(u.vid, "cp1", "10", 3),
                         fx.contract_tx(u.vid, "cp2", "20", 3)},
                        3);

  // both CPs' records visible to either CP
  auto seen_by_cp1 = fx.chain.query_request_history("cp1", sig1);
  REQUIRE(seen_by_cp1.size() == 2);
  CHECK(seen_by_cp1[0].cp_id == "cp1");
  CHECK(seen_by_cp1[1].cp_id == "cp2");

  auto sig2 = fx.scheme->sign(cp2_keys.private_key,
                              crypto::as_span(history_query_payload("cp2")));
  CHECK(fx.chain.query_request_history("cp2", sig2).size() == 2);

  CHECK_THROWS_AS(fx.chain.query_request_history("cp9", sig1),
                  AuthorizationError);
  CHECK_THROWS_AS(fx.chain.query_request_history("cp1", sig2),
                  AuthorizationError);
}

TEST_CASE("privacy projection: serialized history carries no key material") {
  Fixture fx;
  auto user_keys = fx.scheme->generate_keypair(77);
  fx.chain.append_block({fx.cp_tx("cp1", 1)}, 1);
  auto u = fx.user_tx(77);
  fx.chain.append_block({u}, 2);
  fx.chain.append_block({fx.contract_tx(u.vid, "cp1", "3", 3)}, 3);

  std::string serialized;
  for (const auto& meta : fx.chain.request_history_unchecked()) {
    serialized += meta.content_id + "|" + meta.cp_id + "|" +
                  feature_vector_to_string(meta.features) + "\n";
  }
  auto priv_hex = crypto::to_hex(crypto::as_span(user_keys.private_key));
  auto pub_hex = crypto::to_hex(crypto::as_span(user_keys.public_key));
  CHECK(serialized.find(priv_hex) == std::string::npos);
  CHECK(serialized.find(pub_hex) == std::string::npos);
}

TEST_CASE("payments adjust balances") {
  Fixture fx;
  fx.chain.append_block({fx.cp_tx("cp1", 1)}, 1);
  auto u = fx.user_tx(6);
  fx.chain.append_block({u}, 2);
  fx.chain.credit_vid(u.vid, 10);

  Payment payment;
  payment.contract_id = "c1";
  payment.vid = u.vid;
  payment.cp_id = "cp1";
  payment.amount = 4;
  fx.chain.append_block({payment}, 3);
  CHECK(fx.chain.balance_of_vid(u.vid) == 6);
}
