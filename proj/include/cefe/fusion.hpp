#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "cefe/dataset.hpp"
#include "cefe/pairs.hpp"
#include "cefe/types.hpp"

namespace cefe::fusion {

// Per-sentence output of the four coarse recognizers. Categories absent from
// `probs` count as probability 0.
struct CoarsePrediction {
  std::string id;
  std::string text;  // optional passthrough for the fused dataset
  std::map<CoarseError, double> probs;

  void validate() const;  // CefeError(Domain) when a probability leaves [0,1]
  bool operator==(const CoarsePrediction&) const = default;
};

// Per-sentence output of the fine-grained binary models, tagged with the
// pair-building strategy that trained them.
struct FinePrediction {
  std::string id;
  std::map<FineError, double> probs;
  pairs::PairStrategy strategy = pairs::PairStrategy::WrongCorrect;

  void validate() const;  // CefeError(Domain) when a probability leaves [0,1]
  bool operator==(const FinePrediction&) const = default;
};

nlohmann::json coarse_to_json(const CoarsePrediction& prediction);
CoarsePrediction coarse_from_json(const nlohmann::json& record);
nlohmann::json fine_to_json(const FinePrediction& prediction);
FinePrediction fine_from_json(const nlohmann::json& record);

struct FusionConfig {
  double coarse_threshold = 0.5;
  double fine_threshold = 0.5;
  bool fine_requires_coarse = true;
  CategoryMap mapping;  // fine -> coarse ownership used by the gate

  void validate() const;  // CefeError(Config): thresholds must lie in (0,1)
};

// Fused per-sentence label set.
struct FusedLabels {
  std::set<CoarseError> coarse;
  std::set<FineError> fine;

  bool operator==(const FusedLabels&) const = default;
};

// Gated union with closed thresholds: a coarse label enters iff its
// probability >= coarse_threshold; a fine label enters iff its probability
// >= fine_threshold and, when fine_requires_coarse is set, its mapped coarse
// parent entered too. A fine type without a mapped parent (default Misorder)
// is ungated.
FusedLabels fuse(const CoarsePrediction& coarse, const FinePrediction& fine,
                 const FusionConfig& cfg);

struct FuseCorpusResult {
  Dataset dataset;  // LabeledSentences records {"id","text","labels":[...]}
  std::map<std::string, std::size_t> label_counts;

  nlohmann::json summary_json() const;
};

// Applies fuse to position-aligned prediction lists. Throws
// CefeError(Alignment) when lengths differ or ids disagree at any position.
FuseCorpusResult fuse_corpus(const std::vector<CoarsePrediction>& coarse,
                             const std::vector<FinePrediction>& fine,
                             const FusionConfig& cfg);

}  // namespace cefe::fusion
