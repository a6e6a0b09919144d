#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace cefe::metrics {

// Rows are true labels, columns are predictions.
struct ConfusionMatrix {
  int k = 0;
  std::vector<std::int64_t> counts;

  explicit ConfusionMatrix(int num_classes);
  static ConfusionMatrix from_labels(std::span<const int> y_true,
                                     std::span<const int> y_pred, int num_classes);

  void add(int true_label, int predicted, std::int64_t n = 1);
  std::int64_t at(int true_label, int predicted) const;
  std::int64_t total() const;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool flagged = false;  // a denominator was zero and the value was pinned
};

double accuracy(const ConfusionMatrix& cm);

// Micro-averaged over classes; equals accuracy for single-label inputs.
Prf micro_f1(const ConfusionMatrix& cm);

// Unweighted mean of per-class F1; zero-support classes score 0 and flag.
Prf macro_f1(const ConfusionMatrix& cm);

struct QwkResult {
  double value = 0.0;
  bool degenerate = false;  // zero expected disagreement; value pinned to 1
};

// Quadratic weighted kappa over ordinal labels in [0, k).
QwkResult qwk(std::span<const int> y_true, std::span<const int> y_pred, int k);

// Unicode NFC normalization (ICU-backed).
std::string nfc(const std::string& text);

// 1 iff the strings are byte-identical after NFC normalization.
int exact_match(const std::string& hyp, const std::string& ref);

// Character-level BLEU, orders 1..4. Stats accumulate across segments for
// corpus scores. Orders with no hypothesis n-grams are dropped from the
// geometric mean (weights renormalized); zero-match orders are floored at
// 1e-9 so disjoint strings score near zero instead of exactly zero.
struct BleuStats {
  std::int64_t matches[4] = {0, 0, 0, 0};
  std::int64_t totals[4] = {0, 0, 0, 0};
  std::int64_t hyp_len = 0;
  std::int64_t ref_len = 0;  // closest reference length, ties toward shorter

  BleuStats& operator+=(const BleuStats& rhs);
};

BleuStats bleu_stats(const std::string& hyp, const std::vector<std::string>& refs);
double bleu_score(const BleuStats& stats);
double bleu(const std::string& hyp, const std::vector<std::string>& refs);

// Minimal character edit distance, unit costs.
std::size_t levenshtein(const std::string& a, const std::string& b);

enum class EditKind { Insert, Delete, Substitute };

// One edit against the source string; positions are source code-point
// indices. Substitute content is the single replacement character; runs of
// inserts at one position and runs of deletes over consecutive positions are
// merged into span edits.
struct Edit {
  std::size_t position = 0;
  EditKind kind = EditKind::Substitute;
  std::string content;

  auto operator<=>(const Edit&) const = default;
};

// Edits from the minimal alignment src -> dst, walked left to right with
// substitute > delete > insert on cost ties. Returned in application order.
std::vector<Edit> extract_edits(const std::string& src, const std::string& dst);

// Replays edits (in extraction order) onto src.
std::string apply_edits(const std::string& src, const std::vector<Edit>& edits);

struct EditCounts {
  std::int64_t matched = 0;
  std::int64_t hyp_edits = 0;
  std::int64_t ref_edits = 0;

  EditCounts& operator+=(const EditCounts& rhs);
};

EditCounts edit_counts(const std::string& src, const std::string& hyp,
                       const std::string& ref);

struct EditF05 {
  double precision = 0.0;
  double recall = 0.0;
  double f05 = 0.0;
  bool flagged = false;  // an empty edit set pinned P or R to 1
};

EditF05 f05_from_counts(const EditCounts& counts);

// Edit-based F0.5 of hyp against ref, both relative to src.
EditF05 edit_f05(const std::string& src, const std::string& hyp, const std::string& ref);

enum class Direction { HigherBetter, LowerBetter };

struct MetricReport {
  std::map<std::string, double> values;
  std::vector<std::string> flags;
  std::map<std::string, double> weights_used;
  std::optional<double> avg_score;
};

// Weighted mean of direction-normalized metric values. LowerBetter metrics
// contribute (1 - value) and are assumed to live on a [0,1] scale; the
// built-in defaults exclude them. Unknown metric names in `weights` raise
// CefeError(Config).
double avg_score(const MetricReport& report, const std::map<std::string, double>& weights,
                 const std::map<std::string, Direction>& directions);

const std::map<std::string, Direction>& default_directions();
std::map<std::string, double> default_classify_weights();  // acc, f1, qwk
std::map<std::string, double> default_correct_weights();   // em, bleu, f0.5

}  // namespace cefe::metrics
