#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace cefe::model {

inline constexpr std::size_t kDefaultFeatureDim = std::size_t{1} << 18;

// Sparse L2-normalized feature vector over a fixed hashing dimension.
struct FeatureVector {
  std::size_t dim = 0;
  // Sorted by index, indices unique. Empty for the zero vector.
  std::vector<std::pair<std::size_t, double>> entries;

  bool operator==(const FeatureVector&) const = default;
};

// Character n-gram hashing (n = 1..3) into `dim` buckets, L2-normalized.
// Deterministic across platforms. dim must be a power of two
// (CefeError(Config) otherwise); empty text gives the zero vector.
FeatureVector featurize(const std::string& text, std::size_t dim = kDefaultFeatureDim);

}  // namespace cefe::model
