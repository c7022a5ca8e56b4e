#include <benchmark/benchmark.h>

#include <random>

#include "bcdn/caching.hpp"
#include "bcdn/consensus.hpp"
#include "bcdn/trace.hpp"

namespace {

bcdn::caching::ContentLibrary random_library(std::size_t n,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> genre(0, bcdn::kGenreCount - 1);
  bcdn::caching::ContentLibrary lib;
  lib.cp_id = "cp1";
  for (std::size_t i = 0; i < n; ++i) {
    bcdn::FeatureVector f(bcdn::kGenreCount);
    f.bits[genre(rng)] = 1;
    if (i % 3 == 0) f.bits[genre(rng)] = 1;
    lib.contents.emplace_back(std::to_string(i + 1), std::move(f));
  }
  return lib;
}

void BM_rank_and_prefetch(benchmark::State& state) {
  auto lib = random_library(static_cast<std::size_t>(state.range(0)), 7);
  std::vector<bcdn::ledger::ContentMetadata> history;
  for (const auto& [id, f] : lib.contents)
    history.push_back({id, f, "cp1"});
  auto q = bcdn::caching::extract_feature_popularity(history,
                                                     bcdn::kGenreCount);
  for (auto _ : state) {
    auto cache = bcdn::caching::rank_and_prefetch(lib, q, lib.contents.size() / 2);
    benchmark::DoNotOptimize(cache);
  }
}
BENCHMARK(BM_rank_and_prefetch)->Range(64, 16384);

void BM_pbft_round(benchmark::State& state) {
  auto scheme = bcdn::crypto::make_scheme(bcdn::crypto::SchemeKind::Fast);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    bcdn::consensus::PbftConfig config;
    config.n_val = static_cast<int>(state.range(0));
    config.network.seed = seed++;
    bcdn::consensus::PbftSim sim(config);
    std::string payload = "block";
    auto digest = scheme->hash(bcdn::crypto::as_span(payload));
    auto sequence = sim.submit_block(digest);
    auto committed = sim.run_until_committed(sequence, 500);
    benchmark::DoNotOptimize(committed);
  }
}
BENCHMARK(BM_pbft_round)->Arg(4)->Arg(7);

void BM_synth_trace(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto trace = bcdn::trace::synth_trace(
        1000, static_cast<std::size_t>(state.range(0)), 1.0, seed++);
    benchmark::DoNotOptimize(trace);
  }
}
BENCHMARK(BM_synth_trace)->Range(1024, 262144);

}  // namespace

BENCHMARK_MAIN();
