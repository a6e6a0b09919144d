#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cefe/dataset.hpp"
#include "cefe/rng.hpp"
#include "cefe/types.hpp"

namespace cefe::pairs {

enum class PairStrategy { WrongCorrect, VariantError };

const char* to_string(PairStrategy strategy);
PairStrategy strategy_from_string(std::string_view name);

// One binary-classification row. Both strategies emit single-text rows
// (text_b unset): the classifier decides per sentence, and the "pair" is the
// construction recipe, not the input shape.
struct PairExample {
  std::string id;
  std::string text_a;
  std::optional<std::string> text_b;
  int label = 0;  // 1 = carries the target error, 0 = counterpart/negative
  PairStrategy strategy = PairStrategy::WrongCorrect;
  FineError target_fine;

  bool operator==(const PairExample&) const = default;
};

nlohmann::json pair_to_json(const PairExample& example);
PairExample pair_from_json(const nlohmann::json& record);

struct SkippedRecord {
  std::string id;
  std::string reason;

  bool operator==(const SkippedRecord&) const = default;
};

struct PairBuildReport {
  std::size_t input_records = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::vector<SkippedRecord> skipped;

  nlohmann::json to_json() const;
};

struct PairBuildResult {
  std::vector<PairExample> examples;
  PairBuildReport report;
};

struct CorrectionPair {
  std::string id;
  std::string source;  // erroneous sentence
  std::string target;  // corrected counterpart
};

// Wrong-Correct strategy: each usable input pair yields the erroneous
// sentence with label 1 and its correction with label 0, so the class ratio
// is exactly 1:1. Pairs whose halves are identical, missing, or whose text
// would appear under both labels are skipped and reported.
PairBuildResult build_wrong_correct(const std::vector<CorrectionPair>& input,
                                    const FineError& target_fine);

// Variant-Error strategy: target-error sentences get label 1, negatives are
// drawn without replacement from sentences with other error types. Counts
// follow neg = min(|others|, |target|), pos = min(|target|, neg + 1), so the
// split is 1:1 except when the negative pool is one short. Negatives whose
// text also occurs in the target pool are filtered out first. Throws
// CefeError(EmptyPool) when either pool (after filtering) is empty.
PairBuildResult build_variant_error(const std::vector<Sentence>& target,
                                    const std::vector<Sentence>& others,
                                    const FineError& target_fine, Rng& rng);

struct SentencePools {
  std::vector<Sentence> target;
  std::vector<Sentence> others;
};

// Splits a LabeledSentences dataset into the two Variant-Error pools:
// sentences labeled with target_fine vs. sentences with only other error
// labels. Unlabeled (clean) sentences belong to neither pool.
SentencePools split_pools(const Dataset& sentences, const FineError& target_fine);

}  // namespace cefe::pairs
