// bcdn command line: scenario runs, ledger verification, consensus demo
// and MovieLens-format fixture generation.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "bcdn/consensus.hpp"
#include "bcdn/ledger.hpp"
#include "bcdn/sim.hpp"
#include "bcdn/trace.hpp"

namespace {

int cmd_run(const std::string& config_path, bcdn::sim::ScenarioConfig config,
            const std::string& z_sweep, const std::string& arch,
            const std::string& out_dir) {
  if (!config_path.empty()) bcdn::sim::apply_config_file(config_path, config);
  if (!z_sweep.empty()) config.z_sweep = bcdn::sim::parse_size_list(z_sweep);
  if (!arch.empty()) {
    auto a = bcdn::sim::architecture_from_name(arch);
    if (!a) {
      std::cerr << "unknown architecture '" << arch
                << "' (bcdn, conv-own, conv-random)\n";
      return 1;
    }
    config.forced_arch = a;
  }

  auto result = bcdn::sim::run_scenario(config);
  bcdn::sim::emit_report(result, out_dir);
  std::cout << "wrote " << result.report.rows.size() << " metric rows to "
            << out_dir << " (chain "
            << (result.chain_verified ? "verified" : "BROKEN") << ", "
            << result.committed_contracts << " contracts)\n";
  return result.chain_verified ? 0 : 1;
}

int cmd_verify_chain(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open " << path << "\n";
    return 1;
  }
  auto scheme = bcdn::crypto::make_scheme(bcdn::crypto::SchemeKind::Fast);
  auto chain = bcdn::ledger::Chain::import_from(in, scheme);
  if (!chain) {
    std::cout << path << ": unparseable chain dump\n";
    return 1;
  }
  bool ok = chain->verify();
  std::cout << path << ": " << chain->blocks().size() << " blocks, "
            << chain->transaction_count() << " transactions, integrity "
            << (ok ? "OK" : "BROKEN") << "\n";
  return ok ? 0 : 1;
}

int cmd_consensus_demo(int n_val, std::uint64_t seed, int faulty,
                       const std::string& behavior, int blocks, bool verbose) {
  bcdn::consensus::PbftConfig config;
  config.n_val = n_val;
  config.network.seed = seed;
  config.behaviors.assign(n_val, bcdn::consensus::Behavior::Honest);
  if (faulty >= 0) {
    if (faulty >= n_val) {
      std::cerr << "faulty validator id out of range\n";
      return 1;
    }
    config.behaviors[faulty] = behavior == "equivocating"
                                   ? bcdn::consensus::Behavior::Equivocating
                                   : bcdn::consensus::Behavior::Silent;
  }

  bcdn::consensus::PbftSim sim(config);
  auto scheme = bcdn::crypto::make_scheme(bcdn::crypto::SchemeKind::Fast);
  for (int b = 0; b < blocks; ++b) {
    std::string payload = "block-" + std::to_string(b);
    auto digest = scheme->hash(bcdn::crypto::as_span(payload));
    auto sequence = sim.submit_block(digest);
    auto committed = sim.run_until_committed(sequence, 500);
    std::cout << "sequence " << sequence << ": "
              << (committed ? "committed " + committed->hex().substr(0, 12)
                            : std::string("stalled"))
              << " at tick " << sim.tick() << "\n";
  }
  if (verbose)
    for (const auto& line : sim.event_log()) std::cout << line << "\n";
  std::cout << "safety " << (sim.safety_holds() ? "OK" : "VIOLATED") << "\n";
  return sim.safety_holds() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"blockchain-based CDN simulator"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run a caching scenario");
  std::string config_path, dataset_dir, z_sweep, arch, out_dir = "out";
  bcdn::sim::ScenarioConfig config;
  run->add_option("--config", config_path, "flat key=value config file");
  run->add_option("--dataset-dir", config.dataset_dir,
                  "directory with movies.csv and ratings.csv");
  run->add_flag("--synthetic", config.synthetic,
                "use the synthetic Zipf trace generator");
  run->add_option("--zipf-s", config.zipf_s, "synthetic Zipf exponent");
  run->add_option("--seed", config.seed, "scenario seed");
  run->add_option("--z-sweep", z_sweep, "comma-separated cache sizes");
  run->add_option("--tau-ratio", config.tau_ratio, "tau_BH / tau_AC");
  run->add_option("--arch", arch,
                  "force one architecture (bcdn, conv-own, conv-random)");
  run->add_option("--cp-count", config.cp_count, "number of CPs");
  run->add_option("--per-cp", config.per_cp, "library size per CP");
  run->add_option("--warmup-fraction", config.warmup_fraction,
                  "chronological warmup split in (0,1)");
  bool full = false;
  run->add_flag("--fast", config.fast,
                "skip per-request consensus, batch commits (default)");
  run->add_flag("--full", full, "full-fidelity protocol path");
  run->add_option("--out-dir", out_dir, "report output directory");

  // verify-chain
  auto* verify = app.add_subcommand("verify-chain",
                                    "replay and integrity-check a chain dump");
  std::string chain_path;
  verify->add_option("file", chain_path, "chain dump file")->required();

  // consensus-demo
  auto* demo = app.add_subcommand("consensus-demo", "run the PBFT harness");
  int n_val = 4, faulty = -1, blocks = 3;
  std::uint64_t demo_seed = 0;
  std::string behavior = "silent";
  bool verbose = false;
  demo->add_option("--n-val", n_val, "validator count (3f+1)");
  demo->add_option("--seed", demo_seed, "network seed");
  demo->add_option("--faulty", faulty, "id of the faulty validator");
  demo->add_option("--behavior", behavior, "silent or equivocating");
  demo->add_option("--blocks", blocks, "number of blocks to agree on");
  demo->add_flag("--verbose", verbose, "print the consensus event log");

  // gen-dataset
  auto* gen = app.add_subcommand(
      "gen-dataset", "write a deterministic MovieLens-format fixture");
  bcdn::trace::MovielensFixtureParams params;
  std::string gen_dir = "fixture";
  gen->add_option("--dir", gen_dir, "output directory");
  gen->add_option("--movies", params.n_movies, "catalog size");
  gen->add_option("--users", params.n_users, "user population");
  gen->add_option("--ratings", params.n_ratings, "request count");
  gen->add_option("--seed", params.seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (full) config.fast = false;
      return cmd_run(config_path, config, z_sweep, arch, out_dir);
    }
    if (verify->parsed()) return cmd_verify_chain(chain_path);
    if (demo->parsed())
      return cmd_consensus_demo(n_val, demo_seed, faulty, behavior, blocks,
                                verbose);
    if (gen->parsed()) {
      bcdn::trace::write_movielens_fixture(gen_dir, params);
      std::cout << "wrote " << gen_dir << "/movies.csv and ratings.csv\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
