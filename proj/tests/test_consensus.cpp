#include "doctest.h"

#include "bcdn/consensus.hpp"

using namespace bcdn;
using namespace bcdn::consensus;

namespace {

crypto::Digest test_digest(const std::string& label) {
  auto scheme = crypto::make_scheme(crypto::SchemeKind::Fast);
  return scheme->hash(crypto::as_span(label));
}

PbftConfig config_with(std::uint64_t seed,
                       std::vector<Behavior> behaviors = {}) {
  PbftConfig config;
  config.n_val = 4;
  config.network.seed = seed;
  config.behaviors = std::move(behaviors);
  return config;
}

constexpr std::uint64_t kLivenessBound = 2 * 50 + 5;  // 2*timeout + max delay

}  // namespace

TEST_CASE("view-to-primary mapping and non-primary propose rejection") {
  PbftSim sim(config_with(0));
  CHECK(sim.validator(0).is_primary());  // view 0, N=4
  CHECK_FALSE(sim.validator(1).is_primary());
  CHECK_FALSE(sim.validator(2).is_primary());

  sim.validator(2).set_pending(0, test_digest("b"));
  CHECK_THROWS_AS(sim.validator(2).propose(0), ProtocolViolation);
}

TEST_CASE("n_val must be 3f+1") {
  PbftConfig config;
  config.n_val = 5;
  CHECK_THROWS_AS(PbftSim{config}, std::invalid_argument);
}

TEST_CASE("all-honest: one proposal commits on every validator") {
  PbftSim sim(config_with(1));
  auto digest = test_digest("block-0");
  auto seq = sim.submit_block(digest);
  auto committed = sim.run_until_committed(seq, kLivenessBound);
  REQUIRE(committed.has_value());
  CHECK(*committed == digest);
  for (int v = 0; v < 4; ++v) {
    REQUIRE(sim.validator(v).committed().count(seq) == 1);
    CHECK(sim.validator(v).committed().at(seq) == digest);
  }
  CHECK(sim.safety_holds());
}

TEST_CASE("no in-flight messages: advancing ticks changes nothing") {
  PbftSim sim(config_with(2));
  for (int i = 0; i < 10; ++i) sim.advance_tick();
  for (int v = 0; v < 4; ++v) {
    CHECK(sim.validator(v).committed().empty());
    CHECK(sim.validator(v).current_view() == 0);
  }
}

TEST_CASE("one silent non-primary: the remaining 2f+1 still commit") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto config = config_with(seed);
    config.behaviors = {Behavior::Honest, Behavior::Honest, Behavior::Silent,
                        Behavior::Honest};
    PbftSim sim(config);
    auto digest = test_digest("block");
    auto seq = sim.submit_block(digest);
    auto committed = sim.run_until_committed(seq, kLivenessBound);
    REQUIRE(committed.has_value());
    CHECK(*committed == digest);
    CHECK(sim.safety_holds());
  }
}

TEST_CASE("silent primary: view change elects validator 1 and commits") {
  auto config = config_with(3);
  config.behaviors = {Behavior::Silent};
  PbftSim sim(config);
  auto digest = test_digest("block");
  auto seq = sim.submit_block(digest);
  auto committed = sim.run_until_committed(seq, kLivenessBound);
  REQUIRE(committed.has_value());
  CHECK(*committed == digest);
  for (int v = 1; v < 4; ++v)
    CHECK(sim.validator(v).current_view() == 1);
  CHECK(sim.safety_holds());
}

TEST_CASE("equivocating validator: honest validators stay consistent") {
  for (int faulty = 0; faulty < 4; ++faulty) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto config = config_with(seed);
      config.behaviors.assign(4, Behavior::Honest);
      config.behaviors[faulty] = Behavior::Equivocating;
      PbftSim sim(config);
      auto digest = test_digest("block");
      auto seq = sim.submit_block(digest);
      auto committed = sim.run_until_committed(seq, 4 * kLivenessBound);
      CHECK(sim.safety_holds());
      if (committed) CHECK(*committed == digest);
    }
  }
}

TEST_CASE("multiple sequences commit in order") {
  PbftSim sim(config_with(4));
  for (int b = 0; b < 5; ++b) {
    auto digest = test_digest("block-" + std::to_string(b));
    auto seq = sim.submit_block(digest);
    auto committed = sim.run_until_committed(seq, kLivenessBound);
    REQUIRE(committed.has_value());
    CHECK(*committed == digest);
  }
  CHECK(sim.validator(0).committed().size() == 5);
}

TEST_CASE("determinism: identical seed yields identical event logs") {
  auto run = [](std::uint64_t seed) {
    auto config = config_with(seed);
    config.behaviors = {Behavior::Silent};
    PbftSim sim(config);
    auto seq = sim.submit_block(test_digest("x"));
    sim.run_until_committed(seq, kLivenessBound);
    return sim.event_log();
  };
  CHECK(run(11) == run(11));
  CHECK(run(11) != run(12));
}

TEST_CASE("bad signatures are dropped and counted") {
  PbftSim sim(config_with(5));
  ConsensusMessage forged;
  forged.phase = Phase::PrePrepare;
  forged.sender = 0;
  forged.block_digest = test_digest("forged");
  forged.signature.sig = {1, 2, 3};
  auto scheme = crypto::make_scheme(crypto::SchemeKind::Fast);
  std::vector<crypto::Bytes> keys;
  for (int v = 0; v < 4; ++v)
    keys.push_back(sim.validator(v).public_key());
  auto before = sim.validator(1).dropped_messages();
  auto out = sim.validator(1).handle_message(forged, keys);
  CHECK(out.empty());
  CHECK(sim.validator(1).dropped_messages() == before + 1);
}

TEST_CASE("liveness: single fault, no drops, commits within the bound") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (auto behavior : {Behavior::Silent, Behavior::Equivocating}) {
      auto config = config_with(seed);
      config.behaviors.assign(4, Behavior::Honest);
      config.behaviors[seed % 4] = behavior;
      PbftSim sim(config);
      auto start = sim.tick();
      auto seq = sim.submit_block(test_digest("block"));
      auto committed = sim.run_until_committed(seq, kLivenessBound);
      REQUIRE(committed.has_value());
      CHECK(sim.tick() - start <= kLivenessBound);
    }
  }
}
