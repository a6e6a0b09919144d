#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cefe/rng.hpp"
#include "cefe/types.hpp"

namespace cefe::inject {

// Corruption categories: the four coarse recognition categories plus
// misorder, which manipulates word order rather than characters.
enum class ErrorCategory { Char, Miss, Redu, Coll, Misorder };

inline constexpr ErrorCategory kAllCategories[] = {
    ErrorCategory::Char, ErrorCategory::Miss, ErrorCategory::Redu,
    ErrorCategory::Coll, ErrorCategory::Misorder};

const char* to_string(ErrorCategory category);
ErrorCategory category_from_string(std::string_view name);

enum class OpKind {
  CharReplace,
  CharDelete,
  CharInsert,
  SpanDelete,
  SpanDuplicate,
  WordSwap,
  AdjacentSegmentSwap,
};

const char* to_string(OpKind kind);
OpKind op_kind_from_string(std::string_view name);

// One corruption step. begin/end are code-point indices into the text the op
// was applied to (the intermediate state during a cascade), so replaying the
// recorded ops in order reproduces the corrupted text exactly.
//   CharReplace         [i, i+1)   replacement = new character
//   CharDelete          [i, i+1)
//   CharInsert          [i, i)     replacement inserted at i
//   SpanDelete          [b, e)
//   SpanDuplicate       [b, e)     the span is repeated after itself
//   WordSwap            [i, j+1)   characters at i and j change places
//   AdjacentSegmentSwap [0, pivot) the two segments around pivot swap
struct ErrorOp {
  ErrorCategory category = ErrorCategory::Char;
  OpKind kind = OpKind::CharReplace;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string replacement;

  bool operator==(const ErrorOp&) const = default;
};

// Replays one op. Throws CefeError(Domain) when the span does not fit text.
std::string apply_op(const ErrorOp& op, const std::string& text);

struct InjectedSentence {
  Sentence source;
  std::string corrupted;
  std::vector<ErrorOp> ops;  // ordered; one per distinct category
  int error_count = 0;       // == ops.size()

  bool operator==(const InjectedSentence&) const = default;
};

nlohmann::json injected_to_json(const InjectedSentence& item);
InjectedSentence injected_from_json(const nlohmann::json& record);

struct CascadeConfig {
  double p = 0.2;      // chance of each additional error
  int max_errors = 4;  // error_count ranges over 1..max_errors
  std::uint64_t seed = 0;
  // Unset means equal weight 1 for every category; zero-weight categories
  // are never drawn.
  std::map<ErrorCategory, double> category_weights;

  void validate() const;
};

// Eq. proportions of i = 1..4 errors: C(3, i-1) * (1-p)^(4-i) * p^(i-1).
// Throws CefeError(Domain) when p is outside [0, 1].
std::array<double, 4> expected_proportions(double p);

// Draws 1 + Binomial(max_errors - 1, p) from the given stream.
int sample_error_count(const CascadeConfig& cfg, Rng& rng);

struct SingleInjection {
  ErrorOp op;
  std::string corrupted;
};

// Applies one category-appropriate corruption. The result always differs
// from the input and stays non-blank. Throws CefeError(InjectionInfeasible)
// when the sentence cannot support the category (too short, or no suitable
// character positions).
SingleInjection inject_single(const Sentence& sentence, ErrorCategory category, Rng& rng);

struct InjectionReport {
  std::size_t requested = 0;
  std::size_t produced = 0;
  std::size_t skipped = 0;
  // histogram[i] counts items with error_count == i + 1.
  std::vector<std::int64_t> histogram;

  nlohmann::json to_json() const;
};

struct InjectionResult {
  std::vector<InjectedSentence> items;
  InjectionReport report;
};

// Corrupts every sentence with a freshly drawn error count, using distinct
// categories within each sentence. Sentences that cannot support their plan
// are skipped and counted. Deterministic for a given (corpus, cfg): each
// sentence derives its own stream from hash(cfg.seed, id), so `jobs` only
// changes wall time, never output. Sentence ids must be unique
// (CefeError(Schema) otherwise); the corpus must be non-empty
// (CefeError(EmptyInput)).
InjectionResult generate_multi_error(const std::vector<Sentence>& corpus,
                                     const CascadeConfig& cfg, int jobs = 1);

}  // namespace cefe::inject
