#include "bcdn/caching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bcdn::caching {

namespace {

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

// "Lower content id first": numeric order for decimal ids, lexicographic
// otherwise.
bool id_less(const std::string& a, const std::string& b) {
  if (all_digits(a) && all_digits(b)) {
    if (a.size() != b.size()) return a.size() < b.size();
  }
  return a < b;
}

}  // namespace

FeaturePopularity extract_feature_popularity(
    std::span<const ledger::ContentMetadata> history, std::size_t length) {
  FeaturePopularity pop;
  pop.q.assign(length, 0.0);
  for (const auto& meta : history) {
    if (meta.features.length() != length)
      throw DimensionError("feature vector of content " + meta.content_id +
                           " has length " +
                           std::to_string(meta.features.length()) +
                           ", expected " + std::to_string(length));
    for (std::size_t l = 0; l < length; ++l)
      pop.q[l] += meta.features.bits[l];
  }

  double total = std::accumulate(pop.q.begin(), pop.q.end(), 0.0);
  if (total == 0.0) {
    pop.cold = true;  // no requests counted; leave q as the zero vector
  } else {
    for (auto& v : pop.q) v /= total;
  }

  pop.sorted_view.resize(length);
  std::iota(pop.sorted_view.begin(), pop.sorted_view.end(), 0);
  std::stable_sort(pop.sorted_view.begin(), pop.sorted_view.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (pop.q[a] != pop.q[b]) return pop.q[a] > pop.q[b];
                     return a < b;  // ties: lower feature index
                   });
  return pop;
}

double content_correlation(const FeatureVector& f, const FeaturePopularity& q) {
  if (f.length() != q.q.size())
    throw DimensionError("feature vector length " +
                         std::to_string(f.length()) + " vs popularity length " +
                         std::to_string(q.q.size()));
  double dot = 0.0, f_sq = 0.0, q_sq = 0.0;
  for (std::size_t l = 0; l < q.q.size(); ++l) {
    dot += f.bits[l] * q.q[l];
    f_sq += static_cast<double>(f.bits[l]) * f.bits[l];
    q_sq += q.q[l] * q.q[l];
  }
  if (f_sq == 0.0 || q_sq == 0.0) return 0.0;
  return dot / (std::sqrt(f_sq) * std::sqrt(q_sq));
}

CacheState rank_and_prefetch(const ContentLibrary& library,
                             const FeaturePopularity& q,
                             std::size_t capacity) {
  CacheState cache;
  cache.cp_id = library.cp_id;

  std::vector<std::size_t> order(library.contents.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> score(library.contents.size());
  for (std::size_t i = 0; i < library.contents.size(); ++i)
    score[i] = content_correlation(library.contents[i].second, q);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return id_less(library.contents[a].first, library.contents[b].first);
  });

  cache.ranked.reserve(order.size());
  cache.scores.reserve(order.size());
  for (auto i : order) {
    cache.ranked.push_back(library.contents[i].first);
    cache.scores.push_back(score[i]);
    cache.owned.insert(library.contents[i].first);
  }
  resize_cache(cache, capacity);
  return cache;
}

void resize_cache(CacheState& cache, std::size_t capacity) {
  cache.capacity = capacity;
  cache.resident.clear();
  std::size_t n = std::min(capacity, cache.ranked.size());
  for (std::size_t i = 0; i < n; ++i) cache.resident.insert(cache.ranked[i]);
}

LookupResult cache_lookup(const CacheState& cache,
                          const std::string& content_id) {
  if (!cache.owned.count(content_id))
    throw OwnershipError("content " + content_id + " is not in " +
                         cache.cp_id + "'s library");
  return cache.resident.count(content_id) ? LookupResult::Hit
                                          : LookupResult::Miss;
}

}  // namespace bcdn::caching
