#ifndef BCDN_SIM_HPP
#define BCDN_SIM_HPP

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bcdn/caching.hpp"
#include "bcdn/crypto.hpp"
#include "bcdn/trace.hpp"

namespace bcdn::sim {

enum class Architecture { BCdn, ConventionalOwnHistory, ConventionalRandom };
const char* architecture_name(Architecture a);
std::optional<Architecture> architecture_from_name(const std::string& name);

struct ScenarioConfig {
  // Data source: a MovieLens-format directory or the synthetic generator.
  std::string dataset_dir;
  bool synthetic = false;
  std::size_t synth_contents = 700;
  std::size_t synth_requests = 40000;
  double zipf_s = 0.8;

  std::int64_t window_start = std::numeric_limits<std::int64_t>::min();
  std::int64_t window_end = std::numeric_limits<std::int64_t>::max();

  std::size_t cp_count = 3;
  std::size_t per_cp = 200;  // library size per CP
  std::vector<std::size_t> z_sweep = {20, 40, 60, 80, 100,
                                      120, 140, 160, 180, 200};
  double tau_ratio = 4.0;  // tau_BH / tau_AC
  std::uint64_t seed = 0;
  std::vector<std::size_t> warm_cps = {0};  // CPs already running services
  double warmup_fraction = 0.5;  // chronological split
  bool fast = true;  // skip per-request handshake/consensus, batch commits
  bool compare_conventional = true;
  std::optional<Architecture> forced_arch;  // evaluate only this one

  std::uint64_t fee = 1;
  std::int64_t initial_balance = 1'000'000;
  std::uint64_t block_interval = 10;
  crypto::SchemeKind scheme = crypto::SchemeKind::Fast;

  void validate() const;  // throws std::invalid_argument
};

struct MetricsRow {
  std::string cp_id;
  std::string architecture;
  std::size_t z = 0;
  double chr = 0.0;
  double norm_delivery_time = 1.0;
  std::uint64_t requests = 0;
  std::uint64_t hits = 0;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
};

struct ScenarioResult {
  MetricsReport report;
  // Evaluation-phase content ids, in request order, per CP.
  std::vector<std::vector<std::string>> eval_requests;
  // Full popularity ranking per (cp index, architecture name); any Z is the
  // prefix of ranked.
  std::map<std::pair<std::size_t, std::string>, caching::CacheState> caches;
  std::string chain_export;
  std::uint64_t committed_contracts = 0;  // on-chain ContractRecord count
  bool chain_verified = false;
};

ScenarioResult run_scenario(const ScenarioConfig& config);

/// hits / requests, 0 when there were no requests. Throws on hits > requests.
double compute_chr(std::uint64_t hits, std::uint64_t requests);

/// 1 + (1 - chr) * tau_ratio: per-request mean of tau_tot / tau_AC where a
/// hit costs tau_AC and a miss tau_AC + tau_BH.
double compute_norm_delivery_time(double chr, double tau_ratio);

/// Writes metrics.tsv plus per-figure plot data (chr_vs_z.tsv,
/// ndt_vs_z.tsv), a per-CP cache dump and the chain export under out_dir.
void emit_report(const ScenarioResult& result, const std::string& out_dir);

/// Flat key=value config file covering every ScenarioConfig field.
void apply_config_file(const std::string& path, ScenarioConfig& config);
std::vector<std::size_t> parse_size_list(const std::string& csv);

}  // namespace bcdn::sim

#endif
