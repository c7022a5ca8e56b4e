#ifndef BCDN_TRACE_HPP
#define BCDN_TRACE_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcdn/features.hpp"

namespace bcdn::trace {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fixed genre index map, indices 0..17.
extern const std::array<const char*, kGenreCount> kGenreNames;

/// Index for a genre token (case-insensitive; accepts both "Children" and
/// "Children's"). nullopt for unknown tokens.
std::optional<std::size_t> genre_index(const std::string& token);

struct MovieRecord {
  std::int64_t movie_id = 0;
  std::string title;
  FeatureVector features;  // length kGenreCount
};

struct RatingEvent {
  std::int64_t user_id = 0;
  std::int64_t movie_id = 0;
  std::int64_t timestamp = 0;  // epoch seconds
};

struct TraceWindow {
  std::int64_t start = 0;
  std::int64_t end = 0;  // exclusive
  std::vector<RatingEvent> events;  // nondecreasing timestamps
};

/// Per-CP disjoint content id sets drawn uniformly from the catalog.
struct CpAssignment {
  std::vector<std::vector<std::int64_t>> per_cp_ids;
  std::uint64_t seed = 0;

  /// CP index owning a movie, or -1 when unassigned.
  int owner_of(std::int64_t movie_id) const;

 private:
  mutable std::vector<std::pair<std::int64_t, int>> owner_index_;
  void build_index() const;
};

/// movies.csv: header `movieId,title,genres`, quoted titles permitted,
/// genres pipe-separated, "(no genres listed)" yields the zero vector.
/// Throws ParseError with the 1-based line number.
std::vector<MovieRecord> parse_movies(std::istream& in);
std::vector<MovieRecord> parse_movies_file(const std::string& path);

/// ratings.csv: header `userId,movieId,rating,timestamp`. The rating value
/// is discarded; only events with start <= t < end are kept, sorted by
/// timestamp (stable on ties).
TraceWindow parse_ratings(std::istream& in, std::int64_t start,
                          std::int64_t end);
TraceWindow parse_ratings_file(const std::string& path, std::int64_t start,
                               std::int64_t end);

/// M pairwise-disjoint uniform random subsets of size per_cp, reproducible
/// from the seed. Throws std::invalid_argument when the catalog is too
/// small.
CpAssignment partition_libraries(const std::vector<MovieRecord>& catalog,
                                 std::size_t cp_count, std::size_t per_cp,
                                 std::uint64_t seed);

struct SyntheticTrace {
  std::vector<MovieRecord> catalog;
  TraceWindow window;
};

/// Dataset-free path: random feature vectors and request frequencies
/// following a Zipf law with the given exponent over a shuffled content
/// ranking.
SyntheticTrace synth_trace(std::size_t n_contents, std::size_t n_requests,
                           double zipf_s, std::uint64_t seed);

struct MovielensFixtureParams {
  std::size_t n_movies = 700;
  std::size_t n_users = 400;
  std::size_t n_ratings = 40000;
  double genre_zipf_s = 1.2;  // skew of genre popularity
  std::uint64_t seed = 1;
  std::int64_t t_start = 1'000'000;
  std::int64_t t_end = 2'000'000;
};

/// Writes a deterministic MovieLens-format movies.csv / ratings.csv pair
/// where request popularity is driven by genre popularity, so the
/// feature-based estimator has signal to find.
void write_movielens_fixture(const std::string& dir,
                             const MovielensFixtureParams& params);

}  // namespace bcdn::trace

#endif
