#include "bcdn/trace.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace bcdn::trace {

const std::array<const char*, kGenreCount> kGenreNames = {
    "action",   "adventure", "animation", "children's", "comedy",
    "crime",    "documentary", "drama",   "fantasy",    "film-noir",
    "horror",   "musical",   "mystery",   "romance",    "sci-fi",
    "thriller", "war",       "western"};

std::optional<std::size_t> genre_index(const std::string& token) {
  std::string t;
  t.reserve(token.size());
  for (char c : token) t.push_back(static_cast<char>(std::tolower(c)));
  if (t == "children") t = "children's";  // both spellings appear in the wild
  if (t == "scifi") t = "sci-fi";
  for (std::size_t i = 0; i < kGenreNames.size(); ++i)
    if (t == kGenreNames[i]) return i;
  return std::nullopt;
}

namespace {

[[noreturn]] void fail_line(std::size_t line_no, const std::string& why) {
  throw ParseError("line " + std::to_string(line_no) + ": " + why);
}

// One CSV record: comma-separated, double-quoted fields may contain commas,
// "" inside a quoted field is a literal quote.
std::vector<std::string> split_csv(const std::string& line,
                                   std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) fail_line(line_no, "unterminated quoted field");
  fields.push_back(cur);
  return fields;
}

std::optional<std::int64_t> parse_i64(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t pos = 0;
    std::int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

FeatureVector parse_genres(const std::string& field, std::size_t line_no) {
  FeatureVector f(kGenreCount);
  if (field == "(no genres listed)") return f;
  std::string token;
  std::istringstream in(field);
  while (std::getline(in, token, '|')) {
    auto idx = genre_index(token);
    if (!idx) fail_line(line_no, "unknown genre token '" + token + "'");
    f.bits[*idx] = 1;
  }
  return f;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::vector<MovieRecord> parse_movies(std::istream& in) {
  std::vector<MovieRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) continue;  // header
    if (line.empty()) continue;
    auto fields = split_csv(line, line_no);
    if (fields.size() != 3) fail_line(line_no, "expected 3 fields");
    MovieRecord rec;
    auto id = parse_i64(fields[0]);
    if (!id) fail_line(line_no, "bad movieId '" + fields[0] + "'");
    rec.movie_id = *id;
    rec.title = fields[1];
    rec.features = parse_genres(fields[2], line_no);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<MovieRecord> parse_movies_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_movies(in);
}

TraceWindow parse_ratings(std::istream& in, std::int64_t start,
                          std::int64_t end) {
  TraceWindow window;
  window.start = start;
  window.end = end;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) continue;
    if (line.empty()) continue;
    auto fields = split_csv(line, line_no);
    if (fields.size() != 4) fail_line(line_no, "expected 4 fields");
    auto user = parse_i64(fields[0]);
    auto movie = parse_i64(fields[1]);
    auto ts = parse_i64(fields[3]);  // rating column discarded
    if (!user || !movie || !ts)
      fail_line(line_no, "bad numeric field");
    if (*ts < start || *ts >= end) continue;
    window.events.push_back({*user, *movie, *ts});
  }
  std::stable_sort(window.events.begin(), window.events.end(),
                   [](const RatingEvent& a, const RatingEvent& b) {
                     return a.timestamp < b.timestamp;
                   });
  return window;
}

TraceWindow parse_ratings_file(const std::string& path, std::int64_t start,
                               std::int64_t end) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_ratings(in, start, end);
}

void CpAssignment::build_index() const {
  if (!owner_index_.empty()) return;
  for (std::size_t m = 0; m < per_cp_ids.size(); ++m)
    for (auto id : per_cp_ids[m])
      owner_index_.emplace_back(id, static_cast<int>(m));
  std::sort(owner_index_.begin(), owner_index_.end());
}

int CpAssignment::owner_of(std::int64_t movie_id) const {
  build_index();
  auto it = std::lower_bound(owner_index_.begin(), owner_index_.end(),
                             std::make_pair(movie_id, -1));
  if (it == owner_index_.end() || it->first != movie_id) return -1;
  return it->second;
}

CpAssignment partition_libraries(const std::vector<MovieRecord>& catalog,
                                 std::size_t cp_count, std::size_t per_cp,
                                 std::uint64_t seed) {
  if (catalog.size() < cp_count * per_cp)
    throw std::invalid_argument(
        "catalog of " + std::to_string(catalog.size()) +
        " movies cannot supply " + std::to_string(cp_count) + " x " +
        std::to_string(per_cp) + " disjoint libraries");
  std::vector<std::int64_t> ids;
  ids.reserve(catalog.size());
  for (const auto& m : catalog) ids.push_back(m.movie_id);
  std::sort(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  CpAssignment assignment;
  assignment.seed = seed;
  for (std::size_t m = 0; m < cp_count; ++m)
    assignment.per_cp_ids.emplace_back(ids.begin() + m * per_cp,
                                       ids.begin() + (m + 1) * per_cp);
  return assignment;
}

SyntheticTrace synth_trace(std::size_t n_contents, std::size_t n_requests,
                           double zipf_s, std::uint64_t seed) {
  if (zipf_s < 0) throw std::invalid_argument("zipf_s must be >= 0");
  std::mt19937_64 rng(seed);
  SyntheticTrace trace;

  std::uniform_int_distribution<std::size_t> genre(0, kGenreCount - 1);
  std::uniform_int_distribution<int> extra(0, 9);
  for (std::size_t i = 0; i < n_contents; ++i) {
    MovieRecord rec;
    rec.movie_id = static_cast<std::int64_t>(i + 1);
    rec.title = "content " + std::to_string(i + 1);
    rec.features = FeatureVector(kGenreCount);
    rec.features.bits[genre(rng)] = 1;
    if (extra(rng) < 3) rec.features.bits[genre(rng)] = 1;
    trace.catalog.push_back(std::move(rec));
  }

  // Zipf weights over a shuffled content ranking.
  std::vector<std::size_t> rank_of(n_contents);
  std::iota(rank_of.begin(), rank_of.end(), 0);
  std::shuffle(rank_of.begin(), rank_of.end(), rng);
  std::vector<double> weights(n_contents);
  for (std::size_t i = 0; i < n_contents; ++i)
    weights[i] = 1.0 / std::pow(static_cast<double>(rank_of[i] + 1), zipf_s);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::uniform_int_distribution<std::int64_t> user(1, 1000);

  trace.window.start = 0;
  trace.window.end = static_cast<std::int64_t>(n_requests);
  for (std::size_t i = 0; i < n_requests; ++i) {
    RatingEvent ev;
    ev.user_id = user(rng);
    ev.movie_id = trace.catalog[pick(rng)].movie_id;
    ev.timestamp = static_cast<std::int64_t>(i);
    trace.window.events.push_back(ev);
  }
  return trace;
}

void write_movielens_fixture(const std::string& dir,
                             const MovielensFixtureParams& params) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::mt19937_64 rng(params.seed);

  // Genre popularity: Zipf over a shuffled genre ranking.
  std::vector<std::size_t> genre_rank(kGenreCount);
  std::iota(genre_rank.begin(), genre_rank.end(), 0);
  std::shuffle(genre_rank.begin(), genre_rank.end(), rng);
  std::vector<double> genre_weight(kGenreCount);
  for (std::size_t g = 0; g < kGenreCount; ++g)
    genre_weight[g] = 1.0 / std::pow(
        static_cast<double>(genre_rank[g] + 1), params.genre_zipf_s);
  std::discrete_distribution<std::size_t> pick_genre(genre_weight.begin(),
                                                     genre_weight.end());

  std::vector<MovieRecord> movies;
  std::vector<std::vector<std::size_t>> by_genre(kGenreCount);
  std::uniform_int_distribution<std::size_t> any_genre(0, kGenreCount - 1);
  std::uniform_int_distribution<int> pct(0, 99);
  for (std::size_t i = 0; i < params.n_movies; ++i) {
    MovieRecord rec;
    rec.movie_id = static_cast<std::int64_t>(i + 1);
    rec.title = "Movie " + std::to_string(i + 1);
    if (pct(rng) < 5) rec.title += ", the";  // exercise quoted titles
    rec.features = FeatureVector(kGenreCount);
    rec.features.bits[any_genre(rng)] = 1;
    if (pct(rng) < 30) rec.features.bits[any_genre(rng)] = 1;
    if (pct(rng) < 10) rec.features.bits[any_genre(rng)] = 1;
    for (std::size_t g = 0; g < kGenreCount; ++g)
      if (rec.features.bits[g]) by_genre[g].push_back(i);
    movies.push_back(std::move(rec));
  }

  std::ofstream mf(dir + "/movies.csv");
  mf << "movieId,title,genres\n";
  for (const auto& m : movies) {
    std::string genres;
    for (std::size_t g = 0; g < kGenreCount; ++g) {
      if (!m.features.bits[g]) continue;
      if (!genres.empty()) genres.push_back('|');
      std::string name = kGenreNames[g];
      name[0] = static_cast<char>(std::toupper(name[0]));
      genres += name;
    }
    if (genres.empty()) genres = "(no genres listed)";
    mf << m.movie_id << ',' << csv_quote(m.title) << ',' << genres << '\n';
  }

  // Requests: genre drawn from the popularity law, movie uniform within
  // the genre. Timestamps uniform in the window, emitted sorted.
  std::uniform_int_distribution<std::int64_t> ts(params.t_start,
                                                 params.t_end - 1);
  std::uniform_int_distribution<std::int64_t> uid(
      1, static_cast<std::int64_t>(params.n_users));
  std::uniform_int_distribution<int> stars(1, 5);
  std::vector<RatingEvent> events;
  events.reserve(params.n_ratings);
  for (std::size_t i = 0; i < params.n_ratings; ++i) {
    std::size_t g = pick_genre(rng);
    while (by_genre[g].empty()) g = (g + 1) % kGenreCount;
    std::uniform_int_distribution<std::size_t> pick_movie(
        0, by_genre[g].size() - 1);
    RatingEvent ev;
    ev.user_id = uid(rng);
    ev.movie_id = movies[by_genre[g][pick_movie(rng)]].movie_id;
    ev.timestamp = ts(rng);
    events.push_back(ev);
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const RatingEvent& a, const RatingEvent& b) {
                     return a.timestamp < b.timestamp;
                   });

  std::ofstream rf(dir + "/ratings.csv");
  rf << "userId,movieId,rating,timestamp\n";
  for (const auto& ev : events)
    rf << ev.user_id << ',' << ev.movie_id << ',' << stars(rng) << ','
       << ev.timestamp << '\n';
}

}  // namespace bcdn::trace
