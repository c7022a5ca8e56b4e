#include "bcdn/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "bcdn/protocol.hpp"

namespace bcdn::sim {

const char* architecture_name(Architecture a) {
  switch (a) {
    case Architecture::BCdn:
      return "bcdn";
    case Architecture::ConventionalOwnHistory:
      return "conv-own";
    case Architecture::ConventionalRandom:
      return "conv-random";
  }
  return "?";
}

std::optional<Architecture> architecture_from_name(const std::string& name) {
  if (name == "bcdn") return Architecture::BCdn;
  if (name == "conv-own") return Architecture::ConventionalOwnHistory;
  if (name == "conv-random") return Architecture::ConventionalRandom;
  return std::nullopt;
}

void ScenarioConfig::validate() const {
  if (dataset_dir.empty() && !synthetic)
    throw std::invalid_argument("need a dataset_dir or synthetic=true");
  if (!dataset_dir.empty() && synthetic)
    throw std::invalid_argument("dataset_dir and synthetic are exclusive");
  if (cp_count == 0) throw std::invalid_argument("cp_count must be >= 1");
  if (per_cp == 0) throw std::invalid_argument("per_cp must be >= 1");
  if (z_sweep.empty()) throw std::invalid_argument("z_sweep must be nonempty");
  for (auto z : z_sweep)
    if (z > per_cp)
      throw std::invalid_argument("z_sweep value " + std::to_string(z) +
                                  " exceeds per_cp library size");
  if (!(tau_ratio > 0)) throw std::invalid_argument("tau_ratio must be > 0");
  if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0))
    throw std::invalid_argument("warmup_fraction must be in (0,1)");
  for (auto w : warm_cps)
    if (w >= cp_count)
      throw std::invalid_argument("warm CP index out of range");
  if (window_start >= window_end)
    throw std::invalid_argument("empty trace window");
  if (zipf_s < 0) throw std::invalid_argument("zipf_s must be >= 0");
}

double compute_chr(std::uint64_t hits, std::uint64_t requests) {
  if (hits > requests)
    throw std::logic_error("hit count " + std::to_string(hits) +
                           " exceeds request count " +
                           std::to_string(requests));
  if (requests == 0) return 0.0;
  return static_cast<double>(hits) / static_cast<double>(requests);
}

double compute_norm_delivery_time(double chr, double tau_ratio) {
  if (!(chr >= 0.0 && chr <= 1.0))
    throw std::domain_error("chr out of [0,1]");
  if (!(tau_ratio > 0.0)) throw std::domain_error("tau_ratio must be > 0");
  return 1.0 + (1.0 - chr) * tau_ratio;
}

namespace {

struct RoutedEvent {
  std::int64_t user_id;
  int cp;
  std::string content_id;
  const FeatureVector* features;
};

/// Drives the full protocol path for one request: lazy user registration,
/// one handshake per (user, CP) pair, then the smart-contract lifecycle.
class ProtocolRunner {
 public:
  ProtocolRunner(const ScenarioConfig& config,
                 std::vector<protocol::CpAccount>& cps, protocol::Bcn& bcn)
      : config_(config),
        cps_(cps),
        bcn_(bcn),
        nonce_rng_(config.seed ^ 0xa0a0a0a0ULL) {}

  void serve(const RoutedEvent& ev) {
    auto& user = ensure_user(ev.user_id);
    authenticate(user, ev.cp);

    ledger::ContentMetadata meta;
    meta.content_id = ev.content_id;
    meta.features = *ev.features;
    meta.cp_id = cps_[ev.cp].cp_id;
    protocol::ServiceRequest service;
    service.content = std::move(meta);
    service.fee = config_.fee;

    auto contract = protocol::run_contract(
        user, cps_[ev.cp], service, bcn_,
        "c" + std::to_string(contract_counter_++), /*flush=*/!config_.fast);
    if (contract.failure)
      throw std::runtime_error("contract failed: " + *contract.failure);
    bcn_.tick();
  }

 private:
  protocol::UserAccount& ensure_user(std::int64_t user_id) {
    auto it = users_.find(user_id);
    if (it != users_.end()) return it->second;
    std::uint64_t key_seed =
        (config_.seed + 0x5151) * 1000003ULL + static_cast<std::uint64_t>(user_id);
    auto user = protocol::UserAccount::create(bcn_.scheme(), key_seed);
    protocol::register_user(user, bcn_);
    bcn_.chain().credit_vid(user.vid, config_.initial_balance);
    return users_.emplace(user_id, std::move(user)).first->second;
  }

  void authenticate(const protocol::UserAccount& user, int cp) {
    auto key = std::make_pair(user.vid, cp);
    if (authenticated_.count(key)) return;
    protocol::UserSession us;
    protocol::CpSession cs;
    auto v1 = protocol::auth_initiate(user, us, nonce_rng_(), bcn_.scheme());
    auto v2 = protocol::auth_respond(cps_[cp], cs, v1, bcn_);
    auto* v2msg = std::get_if<protocol::V2>(&v2);
    if (!v2msg) throw std::runtime_error("handshake rejected at V2");
    auto v3 = protocol::auth_confirm(user, us, *v2msg, bcn_.scheme());
    auto* v3msg = std::get_if<protocol::V3>(&v3);
    if (!v3msg) throw std::runtime_error("handshake rejected at V3");
    auto done = protocol::auth_finalize(cps_[cp], cs, *v3msg, bcn_.scheme());
    if (!std::holds_alternative<protocol::AuthState>(done))
      throw std::runtime_error("handshake rejected at finalize");
    authenticated_.insert(key);
  }

  const ScenarioConfig& config_;
  std::vector<protocol::CpAccount>& cps_;
  protocol::Bcn& bcn_;
  std::mt19937_64 nonce_rng_;
  std::map<std::int64_t, protocol::UserAccount> users_;
  std::set<std::pair<crypto::Digest, int>> authenticated_;
  std::uint64_t contract_counter_ = 0;
};

caching::CacheState random_ranking(const caching::ContentLibrary& library,
                                   std::uint64_t seed, std::size_t capacity) {
  caching::CacheState cache;
  cache.cp_id = library.cp_id;
  for (const auto& [id, f] : library.contents) {
    cache.ranked.push_back(id);
    cache.owned.insert(id);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(cache.ranked.begin(), cache.ranked.end(), rng);
  cache.scores.assign(cache.ranked.size(), 0.0);
  caching::resize_cache(cache, capacity);
  return cache;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10f", v);
  return buf;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config) {
  config.validate();

  // --- Trace ingestion ---
  std::vector<trace::MovieRecord> catalog;
  trace::TraceWindow window;
  if (config.synthetic) {
    auto synth = trace::synth_trace(config.synth_contents,
                                    config.synth_requests, config.zipf_s,
                                    config.seed);
    catalog = std::move(synth.catalog);
    window = std::move(synth.window);
  } else {
    catalog = trace::parse_movies_file(config.dataset_dir + "/movies.csv");
    window = trace::parse_ratings_file(config.dataset_dir + "/ratings.csv",
                                       config.window_start, config.window_end);
  }

  auto assignment = trace::partition_libraries(catalog, config.cp_count,
                                               config.per_cp, config.seed);

  std::unordered_map<std::int64_t, const trace::MovieRecord*> by_id;
  for (const auto& m : catalog) by_id.emplace(m.movie_id, &m);

  std::vector<caching::ContentLibrary> libraries(config.cp_count);
  for (std::size_t m = 0; m < config.cp_count; ++m) {
    libraries[m].cp_id = "cp" + std::to_string(m + 1);
    for (auto id : assignment.per_cp_ids[m])
      libraries[m].contents.emplace_back(std::to_string(id),
                                         by_id.at(id)->features);
  }

  // A request for movie x is routed to the unique CP owning x; events for
  // unassigned movies are dropped.
  std::vector<RoutedEvent> routed;
  routed.reserve(window.events.size());
  for (const auto& ev : window.events) {
    int owner = assignment.owner_of(ev.movie_id);
    if (owner < 0) continue;
    routed.push_back({ev.user_id, owner, std::to_string(ev.movie_id),
                      &by_id.at(ev.movie_id)->features});
  }

  std::size_t warm_count = static_cast<std::size_t>(
      config.warmup_fraction * static_cast<double>(routed.size()));

  // --- BCN and CP registration ---
  protocol::Bcn::Options bcn_options;
  bcn_options.scheme = config.scheme;
  bcn_options.block_interval = config.block_interval;
  bcn_options.use_consensus = !config.fast;
  bcn_options.consensus_config.network.seed = config.seed;
  protocol::Bcn bcn(bcn_options);

  std::vector<protocol::CpAccount> cps(config.cp_count);
  for (std::size_t m = 0; m < config.cp_count; ++m) {
    cps[m].cp_id = libraries[m].cp_id;
    cps[m].keypair = bcn.scheme().generate_keypair(0xc900 + m);
    cps[m].address = "edge-node-" + std::to_string(m + 1);
    cps[m].public_info = "content provider " + std::to_string(m + 1);
    protocol::register_cp(cps[m], bcn);
  }

  std::vector<bool> warm(config.cp_count, false);
  for (auto w : config.warm_cps) warm[w] = true;

  // --- Phase 1: warmup replay (only already-launched CPs serve) ---
  ProtocolRunner runner(config, cps, bcn);
  for (std::size_t i = 0; i < warm_count; ++i) {
    if (!warm[routed[i].cp]) continue;
    runner.serve(routed[i]);
  }
  bcn.flush();

  // --- Phase 2: cache construction per architecture ---
  ScenarioResult result;
  std::size_t max_z = 0;
  for (auto z : config.z_sweep) max_z = std::max(max_z, z);

  auto history_for = [&](std::size_t m) {
    auto sig = bcn.scheme().sign(
        cps[m].keypair.private_key,
        crypto::as_span(ledger::history_query_payload(cps[m].cp_id)));
    return bcn.chain().query_request_history(cps[m].cp_id, sig);
  };

  for (std::size_t m = 0; m < config.cp_count; ++m) {
    std::vector<Architecture> archs;
    if (config.forced_arch) {
      archs = {*config.forced_arch};
    } else {
      archs = {Architecture::BCdn};
      if (config.compare_conventional)
        archs.push_back(warm[m] ? Architecture::ConventionalOwnHistory
                                : Architecture::ConventionalRandom);
    }
    auto full_history = history_for(m);
    for (auto arch : archs) {
      caching::CacheState cache;
      switch (arch) {
        case Architecture::BCdn: {
          auto q = caching::extract_feature_popularity(full_history,
                                                       kGenreCount);
          cache = caching::rank_and_prefetch(libraries[m], q, max_z);
          break;
        }
        case Architecture::ConventionalOwnHistory: {
          std::vector<ledger::ContentMetadata> own;
          for (const auto& meta : full_history)
            if (meta.cp_id == cps[m].cp_id) own.push_back(meta);
          auto q = caching::extract_feature_popularity(own, kGenreCount);
          cache = caching::rank_and_prefetch(libraries[m], q, max_z);
          break;
        }
        case Architecture::ConventionalRandom:
          cache = random_ranking(libraries[m],
                                 config.seed * 7919 + 0xcace + m, max_z);
          break;
      }
      result.caches.emplace(std::make_pair(m, architecture_name(arch)),
                            std::move(cache));
    }
  }

  // --- Phase 3: evaluation replay, every CP serving ---
  result.eval_requests.assign(config.cp_count, {});
  for (std::size_t i = warm_count; i < routed.size(); ++i) {
    runner.serve(routed[i]);
    result.eval_requests[routed[i].cp].push_back(routed[i].content_id);
  }
  bcn.flush();

  // --- Metrics ---
  for (std::size_t m = 0; m < config.cp_count; ++m) {
    for (const auto& [key, cache] : result.caches) {
      if (key.first != m) continue;
      for (auto z : config.z_sweep) {
        caching::CacheState at_z = cache;
        caching::resize_cache(at_z, z);
        MetricsRow row;
        row.cp_id = cps[m].cp_id;
        row.architecture = key.second;
        row.z = z;
        row.requests = result.eval_requests[m].size();
        for (const auto& id : result.eval_requests[m])
          if (caching::cache_lookup(at_z, id) == caching::LookupResult::Hit)
            ++row.hits;
        row.chr = compute_chr(row.hits, row.requests);
        row.norm_delivery_time =
            compute_norm_delivery_time(row.chr, config.tau_ratio);
        result.report.rows.push_back(std::move(row));
      }
    }
  }

  result.committed_contracts = 0;
  for (const auto& block : bcn.chain().blocks())
    for (const auto& tx : block.transactions)
      if (std::holds_alternative<ledger::ContractRecord>(tx))
        ++result.committed_contracts;
  result.chain_verified = bcn.chain().verify();
  std::ostringstream chain_dump;
  bcn.chain().export_to(chain_dump);
  result.chain_export = chain_dump.str();
  return result;
}

void emit_report(const ScenarioResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);

  auto open = [&](const std::string& name) {
    std::ofstream out(out_dir + "/" + name);
    if (!out) throw std::runtime_error("cannot write " + out_dir + "/" + name);
    return out;
  };

  {
    auto out = open("metrics.tsv");
    out << "cp\tarchitecture\tz\tchr\tnorm_delivery_time\trequests\thits\n";
    for (const auto& r : result.report.rows)
      out << r.cp_id << '\t' << r.architecture << '\t' << r.z << '\t'
          << format_double(r.chr) << '\t'
          << format_double(r.norm_delivery_time) << '\t' << r.requests << '\t'
          << r.hits << '\n';
  }

  // Plot data, one curve column per (cp, architecture).
  std::vector<std::size_t> zs;
  std::vector<std::pair<std::string, std::string>> curves;
  for (const auto& r : result.report.rows) {
    if (std::find(zs.begin(), zs.end(), r.z) == zs.end()) zs.push_back(r.z);
    auto curve = std::make_pair(r.cp_id, r.architecture);
    if (std::find(curves.begin(), curves.end(), curve) == curves.end())
      curves.push_back(curve);
  }
  std::sort(zs.begin(), zs.end());
  auto value_at = [&](const std::pair<std::string, std::string>& curve,
                      std::size_t z, bool ndt) {
    for (const auto& r : result.report.rows)
      if (r.cp_id == curve.first && r.architecture == curve.second &&
          r.z == z)
        return ndt ? r.norm_delivery_time : r.chr;
    return std::nan("");
  };
  for (bool ndt : {false, true}) {
    auto out = open(ndt ? "ndt_vs_z.tsv" : "chr_vs_z.tsv");
    out << "z";
    for (const auto& c : curves) out << '\t' << c.first << ':' << c.second;
    out << '\n';
    for (auto z : zs) {
      out << z;
      for (const auto& c : curves)
        out << '\t' << format_double(value_at(c, z, ndt));
      out << '\n';
    }
  }

  {
    auto out = open("caches.tsv");
    out << "cp\tarchitecture\tcontent_id\tcorrelation\tcached\n";
    for (const auto& [key, cache] : result.caches)
      for (std::size_t i = 0; i < cache.ranked.size(); ++i)
        out << cache.cp_id << '\t' << key.second << '\t' << cache.ranked[i]
            << '\t' << format_double(cache.scores[i]) << '\t'
            << (cache.resident.count(cache.ranked[i]) ? 1 : 0) << '\n';
  }

  {
    auto out = open("chain.txt");
    out << result.chain_export;
  }
}

std::vector<std::size_t> parse_size_list(const std::string& csv) {
  std::vector<std::size_t> out;
  std::istringstream in(csv);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(static_cast<std::size_t>(std::stoull(tok)));
  }
  return out;
}

void apply_config_file(const std::string& path, ScenarioConfig& config) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::string line;
  std::size_t line_no = 0;
  auto as_bool = [](const std::string& v) {
    return v == "1" || v == "true" || v == "yes";
  };
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r'))
      line.pop_back();
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected key=value");
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t");
      auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));

    if (key == "dataset_dir") config.dataset_dir = value;
    else if (key == "synthetic") config.synthetic = as_bool(value);
    else if (key == "synth_contents") config.synth_contents = std::stoull(value);
    else if (key == "synth_requests") config.synth_requests = std::stoull(value);
    else if (key == "zipf_s") config.zipf_s = std::stod(value);
    else if (key == "window_start") config.window_start = std::stoll(value);
    else if (key == "window_end") config.window_end = std::stoll(value);
    else if (key == "cp_count") config.cp_count = std::stoull(value);
    else if (key == "per_cp") config.per_cp = std::stoull(value);
    else if (key == "z_sweep") config.z_sweep = parse_size_list(value);
    else if (key == "tau_ratio") config.tau_ratio = std::stod(value);
    else if (key == "seed") config.seed = std::stoull(value);
    else if (key == "warm_cps") {
      config.warm_cps.clear();
      for (auto v : parse_size_list(value)) config.warm_cps.push_back(v);
    } else if (key == "warmup_fraction") {
      config.warmup_fraction = std::stod(value);
    } else if (key == "fast") {
      config.fast = as_bool(value);
    } else if (key == "compare_conventional") {
      config.compare_conventional = as_bool(value);
    } else if (key == "arch") {
      auto a = architecture_from_name(value);
      if (!a) throw std::runtime_error("unknown architecture " + value);
      config.forced_arch = a;
    } else if (key == "fee") {
      config.fee = std::stoull(value);
    } else if (key == "initial_balance") {
      config.initial_balance = std::stoll(value);
    } else if (key == "block_interval") {
      config.block_interval = std::stoull(value);
    } else if (key == "scheme") {
      if (value == "fast") config.scheme = crypto::SchemeKind::Fast;
      else if (value == "sodium") config.scheme = crypto::SchemeKind::Sodium;
      else throw std::runtime_error("unknown scheme " + value);
    } else {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": unknown key '" + key + "'");
    }
  }
}

}  // namespace bcdn::sim
