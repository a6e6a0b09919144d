#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cefe/types.hpp"

namespace cefe::nsp {

// One neighboring-sentence window. Essays with n >= 2 sentences produce the
// overlapping windows (s_i, s_{i+1}) for i = 0..n-2; a single-sentence essay
// produces one pair with an empty right half. `index` is the 0-based window
// position within the essay.
struct NspPair {
  Sentence left;
  std::optional<Sentence> right;
  std::string essay_id;
  std::size_t index = 0;

  bool operator==(const NspPair&) const = default;
};

enum class GranularityMode { EssayLevel, SentenceLevel, NspLevel };

const char* to_string(GranularityMode mode);
GranularityMode granularity_from_string(std::string_view name);

// Overlapping-window pairing; |result| == max(n - 1, 1).
std::vector<NspPair> make_pairs(const Essay& essay);

// Reserved separator used by NspLevel rendering.
inline constexpr std::string_view kSeparator = "[SEP]";

// Escapes text so a literal separator cannot be confused with the real one:
// "\" becomes "\\" and "[SEP]" becomes "\[SEP]". unescape_separator inverts it.
std::string escape_separator(std::string_view text);
std::string unescape_separator(std::string_view text);

// NspLevel: escape(left) + "[SEP]" + escape(right), right rendering as ""
// when absent. SentenceLevel: left text alone. EssayLevel: plain
// concatenation of both halves (used with pairs that carry full essay text).
std::string render_input(const NspPair& pair, GranularityMode mode);

// One classifier input row produced by chunking an essay at a granularity.
struct InputRow {
  std::string id;
  std::string essay_id;
  std::string text;
  std::optional<FluencyLabel> label;  // copied from the essay when present

  bool operator==(const InputRow&) const = default;
};

// EssayLevel -> one row with the full text; SentenceLevel -> one row per
// sentence; NspLevel -> one row per neighboring pair.
std::vector<InputRow> chunk_essay(const Essay& essay, GranularityMode mode);

// How per-row distributions combine into the essay-level distribution.
// MeanProb averages probabilities (default); MajorityVote counts each row's
// decided label and returns the vote fractions.
enum class AggregateMode { MeanProb, MajorityVote };

// Component-wise combination of per-row distributions. Throws
// CefeError(EmptyAggregation) on an empty list and CefeError(Shape) when the
// distributions disagree on dimension.
ProbDist aggregate(const std::vector<ProbDist>& dists,
                   AggregateMode mode = AggregateMode::MeanProb);

// Argmax over the three fluency classes; ties break toward the lower ordinal
// (better fluency).
FluencyLabel decide(const ProbDist& dist);

}  // namespace cefe::nsp
