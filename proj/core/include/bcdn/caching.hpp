#ifndef BCDN_CACHING_HPP
#define BCDN_CACHING_HPP

#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "bcdn/features.hpp"
#include "bcdn/ledger.hpp"

namespace bcdn::caching {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Normalized per-feature request counts over a ledger history.
struct FeaturePopularity {
  std::vector<double> q;               // L1-normalized counts
  std::vector<std::size_t> sorted_view;  // indices of q, descending; report
                                         // ranking only, never fed to the
                                         // correlation (see content_correlation)
  bool cold = false;  // empty history, normalization skipped
};

struct ContentLibrary {
  std::string cp_id;
  std::vector<std::pair<std::string, FeatureVector>> contents;
};

/// Cache contents for one CP at capacity Z, plus the full popularity
/// ranking so any smaller capacity is a prefix.
struct CacheState {
  std::string cp_id;
  std::size_t capacity = 0;
  std::vector<std::string> ranked;  // library ids, most popular first
  std::vector<double> scores;       // correlation per ranked entry
  std::unordered_set<std::string> resident;  // first min(Z, N_m) of ranked
  std::unordered_set<std::string> owned;     // whole library id set
};

enum class LookupResult { Hit, Miss };

struct OwnershipError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Accumulates feature counts over the history and L1-normalizes
/// (q = q / |q|). An empty history yields the zero vector with cold set.
FeaturePopularity extract_feature_popularity(
    std::span<const ledger::ContentMetadata> history, std::size_t length);

/// Cosine similarity (f . q) / (||f|| ||q||) against the unsorted q;
/// 0 when either vector is all-zero. Throws DimensionError on length
/// mismatch.
double content_correlation(const FeatureVector& f,
                           const FeaturePopularity& q);

/// Scores the whole library, sorts descending (ties: lower content id
/// first) and caches the first min(Z, N_m) contents.
CacheState rank_and_prefetch(const ContentLibrary& library,
                             const FeaturePopularity& q, std::size_t capacity);

/// Hit iff resident. Throws OwnershipError for ids outside the CP's library.
LookupResult cache_lookup(const CacheState& cache,
                          const std::string& content_id);

/// Re-residents the same ranking at a different capacity (top-Z prefix).
void resize_cache(CacheState& cache, std::size_t capacity);

}  // namespace bcdn::caching

#endif
