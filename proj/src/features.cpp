#include "cefe/features.hpp"

#include <cmath>
#include <map>

#include "cefe/errors.hpp"
#include "cefe/rng.hpp"
#include "cefe/utf8.hpp"

namespace cefe::model {

FeatureVector featurize(const std::string& text, std::size_t dim) {
  if (dim == 0 || (dim & (dim - 1)) != 0) {
    throw CefeError(ErrorCode::Config,
                    "feature dimension must be a power of two, got " + std::to_string(dim));
  }

  FeatureVector out;
  out.dim = dim;
  if (text.empty()) return out;

  std::vector<char32_t> cps = utf8::decode(text);
  std::map<std::size_t, double> counts;
  std::string key;
  for (std::size_t n = 1; n <= 3; ++n) {
    if (cps.size() < n) break;
    for (std::size_t i = 0; i + n <= cps.size(); ++i) {
      // Prefix the n-gram bytes with the order so that, e.g., the unigram
      // "好" and a trigram containing it never collide by construction.
      key.clear();
      key.push_back(static_cast<char>('0' + n));
      for (std::size_t j = 0; j < n; ++j) utf8::append(key, cps[i + j]);
      counts[fnv1a64(key) & (dim - 1)] += 1.0;
    }
  }

  double norm_sq = 0.0;
  for (const auto& [idx, count] : counts) norm_sq += count * count;
  double inv_norm = 1.0 / std::sqrt(norm_sq);

  out.entries.reserve(counts.size());
  for (const auto& [idx, count] : counts) {
    out.entries.emplace_back(idx, count * inv_norm);
  }
  return out;
}

}  // namespace cefe::model
