#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cefe {

// Fluency scale with fixed ordinals: Excellent=0 < Moderate=1 < Failing=2.
// The ordinal mapping is load-bearing for QWK weights and for argmax
// tie-breaking, and must not change.
enum class FluencyLabel : int { Excellent = 0, Moderate = 1, Failing = 2 };

inline constexpr int kNumFluencyClasses = 3;

const char* to_string(FluencyLabel label);
FluencyLabel fluency_from_string(std::string_view name);

// True when text contains only whitespace (ASCII blanks plus U+3000).
bool is_blank_text(std::string_view text);

struct Sentence {
  std::string id;    // unique within its essay
  std::string text;  // non-empty after trimming, no '\n'
  bool operator==(const Sentence&) const = default;
};

struct Essay {
  std::string id;
  std::vector<Sentence> sentences;  // at least one
  std::optional<FluencyLabel> label;
  bool operator==(const Essay&) const = default;

  std::string joined_text() const;
};

// Throws CefeError(Schema) on duplicate sentence ids, empty sentence list,
// blank sentence text, or embedded newlines.
void validate(const Essay& essay);

// Coarse error categories of the recognition pipeline.
enum class CoarseError { Char, Miss, Redu, Coll };

inline constexpr CoarseError kCoarseErrors[] = {CoarseError::Char, CoarseError::Miss,
                                                CoarseError::Redu, CoarseError::Coll};

const char* to_string(CoarseError category);
CoarseError coarse_from_string(std::string_view name);

// Fine-grained error types. Misorder and redundancy-of-other-constituents are
// first-class; anything else rides along as a named Other.
struct FineError {
  enum class Kind { Misorder, ReduOther, Other };

  Kind kind = Kind::Other;
  std::string name;

  static FineError misorder() { return {Kind::Misorder, "misorder"}; }
  static FineError redu_other() { return {Kind::ReduOther, "redu-other"}; }
  static FineError other(std::string custom_name) {
    return {Kind::Other, std::move(custom_name)};
  }

  bool operator==(const FineError&) const = default;
  bool operator<(const FineError& rhs) const { return name < rhs.name; }
};

FineError fine_from_string(std::string_view name);

// Fine -> coarse ownership table. ReduOther always belongs to Redu. Misorder
// has no stated owner; by default it sits in its own bucket next to the four
// coarse categories (parent_of returns nullopt) and can be reassigned via
// misorder_parent. Other types resolve through `custom`.
struct CategoryMap {
  std::optional<CoarseError> misorder_parent;
  std::map<std::string, CoarseError> custom;

  std::optional<CoarseError> parent_of(const FineError& fine) const;
};

// Normalized distribution over classes: non-negative, sums to 1 within 1e-9.
struct ProbDist {
  std::vector<double> probs;

  void validate() const;  // CefeError(Domain) on violation
  bool operator==(const ProbDist&) const = default;
};

}  // namespace cefe
