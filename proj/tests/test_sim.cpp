#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "bcdn/sim.hpp"

using namespace bcdn;
using namespace bcdn::sim;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

ScenarioConfig small_synth(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.synthetic = true;
  cfg.synth_contents = 90;
  cfg.synth_requests = 4000;
  cfg.zipf_s = 1.0;
  cfg.cp_count = 3;
  cfg.per_cp = 30;
  cfg.z_sweep = {5, 10, 15, 20, 25, 30};
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("compute_chr on hand-worked counts") {
  CHECK(compute_chr(0, 100) == 0.0);
  CHECK(compute_chr(100, 100) == 1.0);
  CHECK(compute_chr(37, 100) == doctest::Approx(0.37).epsilon(1e-15));
  CHECK(compute_chr(0, 0) == 0.0);
  CHECK_THROWS_AS(compute_chr(3, 2), std::logic_error);
}

TEST_CASE("compute_norm_delivery_time on hand-worked values") {
  CHECK(compute_norm_delivery_time(1.0, 4.0) == doctest::Approx(1.0));
  CHECK(compute_norm_delivery_time(0.0, 4.0) == doctest::Approx(5.0));
  CHECK(compute_norm_delivery_time(0.6, 2.0) == doctest::Approx(1.8));
  CHECK_THROWS_AS(compute_norm_delivery_time(-0.1, 4.0), std::domain_error);
  CHECK_THROWS_AS(compute_norm_delivery_time(1.1, 4.0), std::domain_error);
  CHECK_THROWS_AS(compute_norm_delivery_time(0.5, -1.0), std::domain_error);
}

TEST_CASE("config validation rejects inconsistent setups") {
  ScenarioConfig cfg = small_synth(1);
  CHECK_NOTHROW(cfg.validate());

  auto bad = cfg;
  bad.cp_count = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = cfg;
  bad.warmup_fraction = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = cfg;
  bad.z_sweep.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = cfg;
  bad.synthetic = false;  // neither synthetic nor a dataset dir
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = cfg;
  bad.warm_cps = {7};  // out of range for cp_count = 3
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("config file parsing overrides only the keys present") {
  auto dir = fresh_dir("bcdn-sim-cfg");
  auto path = dir / "run.cfg";
  {
    std::ofstream out(path);
    out << "# comment line\n";
    out << "synthetic = true\n";
    out << "zipf_s = 1.25\n";
    out << "z_sweep = 10,20,30\n";
    out << "seed = 99\n";
    out << "arch = conv-random\n";
  }
  ScenarioConfig cfg;
  cfg.per_cp = 77;
  apply_config_file(path.string(), cfg);
  CHECK(cfg.synthetic);
  CHECK(cfg.zipf_s == doctest::Approx(1.25));
  CHECK(cfg.z_sweep == std::vector<std::size_t>{10, 20, 30});
  CHECK(cfg.seed == 99);
  CHECK(cfg.per_cp == 77);  // untouched
  REQUIRE(cfg.forced_arch.has_value());
  CHECK(*cfg.forced_arch == Architecture::ConventionalRandom);

  auto bad = dir / "bad.cfg";
  {
    std::ofstream out(bad);
    out << "no_such_key = 1\n";
  }
  CHECK_THROWS_AS(apply_config_file(bad.string(), cfg), std::runtime_error);
}

TEST_CASE("parse_size_list") {
  CHECK(parse_size_list("1,2,3") == std::vector<std::size_t>{1, 2, 3});
  CHECK(parse_size_list(" 10 , 20 ") == std::vector<std::size_t>{10, 20});
  CHECK_THROWS_AS(parse_size_list("1,x"), std::invalid_argument);
}

TEST_CASE("Z = 0 caches nothing; Z = library size caches everything") {
  ScenarioConfig cfg = small_synth(3);
  cfg.z_sweep = {0, cfg.per_cp};
  auto result = run_scenario(cfg);
  REQUIRE(result.chain_verified);
  for (const auto& row : result.report.rows) {
    if (row.requests == 0) continue;
    if (row.z == 0) {
      CHECK(row.chr == 0.0);
      CHECK(row.norm_delivery_time ==
            doctest::Approx(1.0 + cfg.tau_ratio));
    } else {
      CHECK(row.chr == 1.0);
      CHECK(row.norm_delivery_time == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("every row satisfies the delivery-time identity exactly") {
  auto result = run_scenario(small_synth(4));
  REQUIRE(!result.report.rows.empty());
  for (const auto& row : result.report.rows) {
    double expect = 1.0 + (1.0 - row.chr) * 4.0;
    CHECK(std::fabs(row.norm_delivery_time - expect) < 1e-12);
    CHECK(row.chr == doctest::Approx(compute_chr(row.hits, row.requests))
                         .epsilon(1e-15));
  }
}

TEST_CASE("single CP: the shared ledger equals the CP's own history") {
  ScenarioConfig cfg = small_synth(5);
  cfg.cp_count = 1;
  cfg.synth_contents = 30;
  cfg.warm_cps = {0};
  auto result = run_scenario(cfg);
  const auto& bcdn_cache = result.caches.at({0, "bcdn"});
  const auto& own_cache = result.caches.at({0, "conv-own"});
  CHECK(bcdn_cache.ranked == own_cache.ranked);
  CHECK(bcdn_cache.resident == own_cache.resident);
}

TEST_CASE("rankings agree with the committed ledger history") {
  ScenarioConfig cfg = small_synth(6);
  auto result = run_scenario(cfg);
  REQUIRE(result.chain_verified);
  CHECK(result.committed_contracts > 0);

  // every evaluation request was asked of its owning CP's library
  for (std::size_t m = 0; m < cfg.cp_count; ++m) {
    const auto& cache = result.caches.at({m, "bcdn"});
    for (const auto& id : result.eval_requests[m])
      CHECK(cache.owned.count(id) == 1);
  }
}

TEST_CASE("determinism: identical config and seed give identical reports") {
  ScenarioConfig cfg = small_synth(7);
  auto r1 = run_scenario(cfg);
  auto r2 = run_scenario(cfg);
  CHECK(r1.chain_export == r2.chain_export);
  REQUIRE(r1.report.rows.size() == r2.report.rows.size());
  for (std::size_t i = 0; i < r1.report.rows.size(); ++i) {
    CHECK(r1.report.rows[i].hits == r2.report.rows[i].hits);
    CHECK(r1.report.rows[i].requests == r2.report.rows[i].requests);
    CHECK(r1.report.rows[i].chr == r2.report.rows[i].chr);
  }

  auto d1 = fresh_dir("bcdn-sim-det1");
  auto d2 = fresh_dir("bcdn-sim-det2");
  emit_report(r1, d1.string());
  emit_report(r2, d2.string());
  for (const char* name :
       {"metrics.tsv", "chr_vs_z.tsv", "ndt_vs_z.tsv", "caches.tsv",
        "chain.txt"})
    CHECK(slurp(d1 / name) == slurp(d2 / name));

  ScenarioConfig other = cfg;
  other.seed = cfg.seed + 1;
  auto r3 = run_scenario(other);
  CHECK(r1.chain_export != r3.chain_export);
}

TEST_CASE("report files are written and the chain dump re-verifies") {
  ScenarioConfig cfg = small_synth(8);
  auto result = run_scenario(cfg);
  auto dir = fresh_dir("bcdn-sim-report");
  emit_report(result, dir.string());

  auto metrics = slurp(dir / "metrics.tsv");
  CHECK(metrics.find("cp\tarchitecture\tz\tchr") != std::string::npos);
  CHECK(metrics.find("bcdn") != std::string::npos);
  CHECK(metrics.find("conv-random") != std::string::npos);

  std::ifstream chain_in(dir / "chain.txt");
  auto scheme = crypto::make_scheme(crypto::SchemeKind::Fast);
  auto chain = ledger::Chain::import_from(chain_in, scheme);
  REQUIRE(chain.has_value());
  CHECK(chain->verify());
  std::uint64_t records = 0;
  for (const auto& block : chain->blocks())
    for (const auto& tx : block.transactions)
      if (std::holds_alternative<ledger::ContractRecord>(tx)) ++records;
  CHECK(records == result.committed_contracts);
}

TEST_CASE("CHR is nondecreasing in Z for every CP and architecture") {
  auto result = run_scenario(small_synth(9));
  std::map<std::pair<std::string, std::string>, double> last;
  for (const auto& row : result.report.rows) {
    auto key = std::make_pair(row.cp_id, row.architecture);
    auto it = last.find(key);
    if (it != last.end()) CHECK(row.chr >= it->second - 1e-15);
    last[key] = row.chr;  // rows are emitted in ascending Z
  }
}

TEST_CASE("forced architecture restricts the report") {
  ScenarioConfig cfg = small_synth(10);
  cfg.forced_arch = Architecture::BCdn;
  auto result = run_scenario(cfg);
  REQUIRE(!result.report.rows.empty());
  for (const auto& row : result.report.rows)
    CHECK(row.architecture == "bcdn");
}

TEST_CASE("fast and full-fidelity paths commit the same contract count") {
  ScenarioConfig cfg = small_synth(11);
  cfg.synth_requests = 400;
  cfg.synth_contents = 30;
  cfg.per_cp = 10;
  cfg.z_sweep = {5};
  auto fast = run_scenario(cfg);
  cfg.fast = false;
  auto full = run_scenario(cfg);
  CHECK(fast.committed_contracts == full.committed_contracts);
  CHECK(full.chain_verified);
}
