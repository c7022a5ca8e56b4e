#ifndef BCDN_FEATURES_HPP
#define BCDN_FEATURES_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace bcdn {

/// Number of MovieLens genre features.
inline constexpr std::size_t kGenreCount = 18;

/// Binary indicator vector: bits[l] = 1 iff the content has feature l.
struct FeatureVector {
  std::vector<std::uint8_t> bits;

  FeatureVector() = default;
  explicit FeatureVector(std::size_t length) : bits(length, 0) {}

  std::size_t length() const { return bits.size(); }
  bool all_zero() const {
    for (auto b : bits)
      if (b) return false;
    return true;
  }
  bool operator==(const FeatureVector&) const = default;
};

std::string feature_vector_to_string(const FeatureVector& f);

}  // namespace bcdn

#endif
