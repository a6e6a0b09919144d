#include "cefe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "cefe/errors.hpp"
#include "cefe/utf8.hpp"

namespace cefe::metrics {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : k(num_classes), counts(static_cast<std::size_t>(num_classes) * num_classes, 0) {
  if (num_classes <= 0) {
    throw CefeError(ErrorCode::Domain, "confusion matrix needs k >= 1");
  }
}

ConfusionMatrix ConfusionMatrix::from_labels(std::span<const int> y_true,
                                             std::span<const int> y_pred,
                                             int num_classes) {
  if (y_true.size() != y_pred.size()) {
    throw CefeError(ErrorCode::Shape, "label vectors differ in length");
  }
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < y_true.size(); ++i) cm.add(y_true[i], y_pred[i]);
  return cm;
}

void ConfusionMatrix::add(int true_label, int predicted, std::int64_t n) {
  if (true_label < 0 || true_label >= k || predicted < 0 || predicted >= k) {
    throw CefeError(ErrorCode::Domain, "label outside [0, k)");
  }
  counts[static_cast<std::size_t>(true_label) * k + predicted] += n;
}

std::int64_t ConfusionMatrix::at(int true_label, int predicted) const {
  return counts[static_cast<std::size_t>(true_label) * k + predicted];
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (std::int64_t c : counts) t += c;
  return t;
}

double accuracy(const ConfusionMatrix& cm) {
  std::int64_t n = cm.total();
  if (n == 0) return 0.0;
  std::int64_t hits = 0;
  for (int c = 0; c < cm.k; ++c) hits += cm.at(c, c);
  return static_cast<double>(hits) / static_cast<double>(n);
}

Prf micro_f1(const ConfusionMatrix& cm) {
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (int c = 0; c < cm.k; ++c) {
    tp += cm.at(c, c);
    for (int o = 0; o < cm.k; ++o) {
      if (o == c) continue;
      fp += cm.at(o, c);
      fn += cm.at(c, o);
    }
  }
  Prf out;
  if (tp + fp == 0 || tp + fn == 0) {
    out.flagged = true;
    return out;
  }
  out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  out.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  double denom = out.precision + out.recall;
  if (denom > 0) {
    out.f1 = 2.0 * out.precision * out.recall / denom;
  } else {
    out.flagged = true;
  }
  return out;
}

Prf macro_f1(const ConfusionMatrix& cm) {
  Prf out;
  double p_sum = 0, r_sum = 0, f_sum = 0;
  for (int c = 0; c < cm.k; ++c) {
    std::int64_t tp = cm.at(c, c), col = 0, row = 0;
    for (int o = 0; o < cm.k; ++o) {
      col += cm.at(o, c);
      row += cm.at(c, o);
    }
    if (col == 0 || row == 0 || tp == 0) {
      out.flagged = out.flagged || col == 0 || row == 0;
      double p = col > 0 ? static_cast<double>(tp) / col : 0.0;
      double r = row > 0 ? static_cast<double>(tp) / row : 0.0;
      p_sum += p;
      r_sum += r;
      continue;  // F1 contribution is 0
    }
    double p = static_cast<double>(tp) / col;
    double r = static_cast<double>(tp) / row;
    p_sum += p;
    r_sum += r;
    f_sum += 2.0 * p * r / (p + r);
  }
  out.precision = p_sum / cm.k;
  out.recall = r_sum / cm.k;
  out.f1 = f_sum / cm.k;
  return out;
}

QwkResult qwk(std::span<const int> y_true, std::span<const int> y_pred, int k) {
  if (y_true.empty() || y_true.size() != y_pred.size()) {
    throw CefeError(ErrorCode::Shape, "qwk needs equal-length non-empty vectors");
  }
  ConfusionMatrix cm = ConfusionMatrix::from_labels(y_true, y_pred, k);
  const double n = static_cast<double>(cm.total());

  std::vector<double> row(k, 0.0), col(k, 0.0);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      row[i] += static_cast<double>(cm.at(i, j));
      col[j] += static_cast<double>(cm.at(i, j));
    }
  }

  double observed = 0.0, expected = 0.0;
  const double denom = k > 1 ? static_cast<double>(k - 1) * (k - 1) : 1.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      double w = static_cast<double>(i - j) * (i - j) / denom;
      observed += w * static_cast<double>(cm.at(i, j));
      expected += w * row[i] * col[j] / n;
    }
  }
  if (expected == 0.0) {
    return {1.0, true};
  }
  return {1.0 - observed / expected, false};
}

std::string nfc(const std::string& text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    throw CefeError(ErrorCode::Domain, "ICU NFC instance unavailable");
  }
  icu::UnicodeString input = icu::UnicodeString::fromUTF8(text);
  icu::UnicodeString normalized = norm->normalize(input, status);
  if (U_FAILURE(status)) {
    throw CefeError(ErrorCode::Domain, "NFC normalization failed");
  }
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

int exact_match(const std::string& hyp, const std::string& ref) {
  return nfc(hyp) == nfc(ref) ? 1 : 0;
}

BleuStats& BleuStats::operator+=(const BleuStats& rhs) {
  for (int n = 0; n < 4; ++n) {
    matches[n] += rhs.matches[n];
    totals[n] += rhs.totals[n];
  }
  hyp_len += rhs.hyp_len;
  ref_len += rhs.ref_len;
  return *this;
}

namespace {

std::map<std::u32string, std::int64_t> ngram_counts(const std::vector<char32_t>& cps,
                                                    std::size_t n) {
  std::map<std::u32string, std::int64_t> counts;
  if (cps.size() < n) return counts;
  for (std::size_t i = 0; i + n <= cps.size(); ++i) {
    counts[std::u32string(cps.begin() + i, cps.begin() + i + n)] += 1;
  }
  return counts;
}

}  // namespace

BleuStats bleu_stats(const std::string& hyp, const std::vector<std::string>& refs) {
  if (refs.empty()) {
    throw CefeError(ErrorCode::Domain, "bleu needs at least one reference");
  }
  BleuStats stats;
  std::vector<char32_t> hyp_cps = utf8::decode(hyp);
  stats.hyp_len = static_cast<std::int64_t>(hyp_cps.size());

  std::vector<std::vector<char32_t>> ref_cps;
  ref_cps.reserve(refs.size());
  for (const std::string& r : refs) ref_cps.push_back(utf8::decode(r));

  // closest reference length; ties toward the shorter reference
  std::int64_t best_len = static_cast<std::int64_t>(ref_cps[0].size());
  for (const auto& r : ref_cps) {
    auto len = static_cast<std::int64_t>(r.size());
    auto diff = std::llabs(len - stats.hyp_len);
    auto best_diff = std::llabs(best_len - stats.hyp_len);
    if (diff < best_diff || (diff == best_diff && len < best_len)) best_len = len;
  }
  stats.ref_len = best_len;

  for (std::size_t n = 1; n <= 4; ++n) {
    auto hyp_counts = ngram_counts(hyp_cps, n);
    std::map<std::u32string, std::int64_t> max_ref;
    for (const auto& r : ref_cps) {
      for (const auto& [gram, count] : ngram_counts(r, n)) {
        max_ref[gram] = std::max(max_ref[gram], count);
      }
    }
    for (const auto& [gram, count] : hyp_counts) {
      stats.totals[n - 1] += count;
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) stats.matches[n - 1] += std::min(count, it->second);
    }
  }
  return stats;
}

double bleu_score(const BleuStats& stats) {
  constexpr double kFloor = 1e-9;
  double log_sum = 0.0;
  int used = 0;
  for (int n = 0; n < 4; ++n) {
    if (stats.totals[n] == 0) continue;
    double p = stats.matches[n] > 0
                   ? static_cast<double>(stats.matches[n]) / stats.totals[n]
                   : kFloor;
    log_sum += std::log(p);
    ++used;
  }
  if (used == 0) return 0.0;
  double mean_log = log_sum / used;
  double bp = 1.0;
  if (stats.hyp_len < stats.ref_len && stats.hyp_len > 0) {
    bp = std::exp(1.0 - static_cast<double>(stats.ref_len) / stats.hyp_len);
  }
  return bp * std::exp(mean_log);
}

double bleu(const std::string& hyp, const std::vector<std::string>& refs) {
  if (hyp.empty()) return 0.0;
  return bleu_score(bleu_stats(hyp, refs));
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
  std::vector<char32_t> ca = utf8::decode(a);
  std::vector<char32_t> cb = utf8::decode(b);
  if (ca.size() < cb.size()) ca.swap(cb);
  // cb is the shorter string; one rolling row
  std::vector<std::size_t> row(cb.size() + 1);
  for (std::size_t j = 0; j <= cb.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= ca.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= cb.size(); ++j) {
      std::size_t sub = diag + (ca[i - 1] == cb[j - 1] ? 0 : 1);
      diag = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, sub});
    }
  }
  return row[cb.size()];
}

std::vector<Edit> extract_edits(const std::string& src, const std::string& dst) {
  std::vector<char32_t> s = utf8::decode(src);
  std::vector<char32_t> d = utf8::decode(dst);
  const std::size_t n = s.size(), m = d.size();

  // suffix table: dist[i][j] = edit distance between s[i:] and d[j:]
  std::vector<std::size_t> dist((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& {
    return dist[i * (m + 1) + j];
  };
  for (std::size_t j = 0; j <= m; ++j) at(n, j) = m - j;
  for (std::size_t i = 0; i <= n; ++i) at(i, m) = n - i;
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      std::size_t best = at(i + 1, j + 1) + (s[i] == d[j] ? 0 : 1);
      best = std::min(best, at(i + 1, j) + 1);
      best = std::min(best, at(i, j + 1) + 1);
      at(i, j) = best;
    }
  }

  std::vector<Edit> edits;
  auto emit = [&](EditKind kind, std::size_t pos, char32_t cp) {
    std::string content;
    utf8::append(content, cp);
    if (!edits.empty()) {
      Edit& last = edits.back();
      if (kind == EditKind::Insert && last.kind == EditKind::Insert &&
          last.position == pos) {
        last.content += content;
        return;
      }
      if (kind == EditKind::Delete && last.kind == EditKind::Delete &&
          last.position + utf8::length(last.content) == pos) {
        last.content += content;
        return;
      }
    }
    edits.push_back({pos, kind, std::move(content)});
  };

  // forward walk: match when free, otherwise substitute > delete > insert
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && s[i] == d[j]) {
      ++i;
      ++j;
      continue;
    }
    std::size_t cur = at(i, j);
    if (i < n && j < m && at(i + 1, j + 1) + 1 == cur) {
      emit(EditKind::Substitute, i, d[j]);
      ++i;
      ++j;
    } else if (i < n && at(i + 1, j) + 1 == cur) {
      emit(EditKind::Delete, i, s[i]);
      ++i;
    } else {
      emit(EditKind::Insert, i, d[j]);
      ++j;
    }
  }
  return edits;
}

std::string apply_edits(const std::string& src, const std::vector<Edit>& edits) {
  std::vector<char32_t> out = utf8::decode(src);
  std::ptrdiff_t offset = 0;
  for (const Edit& e : edits) {
    std::size_t pos = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(e.position) + offset);
    std::vector<char32_t> content = utf8::decode(e.content);
    switch (e.kind) {
      case EditKind::Insert:
        out.insert(out.begin() + pos, content.begin(), content.end());
        offset += static_cast<std::ptrdiff_t>(content.size());
        break;
      case EditKind::Delete:
        out.erase(out.begin() + pos, out.begin() + pos + content.size());
        offset -= static_cast<std::ptrdiff_t>(content.size());
        break;
      case EditKind::Substitute:
        out[pos] = content[0];
        break;
    }
  }
  return utf8::encode(out);
}

EditCounts& EditCounts::operator+=(const EditCounts& rhs) {
  matched += rhs.matched;
  hyp_edits += rhs.hyp_edits;
  ref_edits += rhs.ref_edits;
  return *this;
}

EditCounts edit_counts(const std::string& src, const std::string& hyp,
                       const std::string& ref) {
  std::vector<Edit> hyp_vec = extract_edits(src, hyp);
  std::vector<Edit> ref_vec = extract_edits(src, ref);
  std::set<Edit> hyp_set(hyp_vec.begin(), hyp_vec.end());
  std::set<Edit> ref_set(ref_vec.begin(), ref_vec.end());

  EditCounts counts;
  counts.hyp_edits = static_cast<std::int64_t>(hyp_set.size());
  counts.ref_edits = static_cast<std::int64_t>(ref_set.size());
  for (const Edit& e : hyp_set) {
    if (ref_set.contains(e)) ++counts.matched;
  }
  return counts;
}

EditF05 f05_from_counts(const EditCounts& counts) {
  EditF05 out;
  if (counts.hyp_edits == 0) {
    out.precision = 1.0;
    out.flagged = true;
  } else {
    out.precision = static_cast<double>(counts.matched) / counts.hyp_edits;
  }
  if (counts.ref_edits == 0) {
    out.recall = 1.0;
    out.flagged = true;
  } else {
    out.recall = static_cast<double>(counts.matched) / counts.ref_edits;
  }
  double denom = 0.25 * out.precision + out.recall;
  out.f05 = denom > 0 ? 1.25 * out.precision * out.recall / denom : 0.0;
  return out;
}

EditF05 edit_f05(const std::string& src, const std::string& hyp, const std::string& ref) {
  return f05_from_counts(edit_counts(src, hyp, ref));
}

double avg_score(const MetricReport& report, const std::map<std::string, double>& weights,
                 const std::map<std::string, Direction>& directions) {
  double weight_sum = 0.0, value_sum = 0.0;
  for (const auto& [name, weight] : weights) {
    auto it = report.values.find(name);
    if (it == report.values.end()) {
      throw CefeError(ErrorCode::Config, "avg_score weight for unknown metric '" + name + "'");
    }
    if (weight < 0.0) {
      throw CefeError(ErrorCode::Config, "negative weight for metric '" + name + "'");
    }
    double value = it->second;
    auto dir = directions.find(name);
    if (dir != directions.end() && dir->second == Direction::LowerBetter) {
      value = 1.0 - value;
    }
    weight_sum += weight;
    value_sum += weight * value;
  }
  if (weight_sum == 0.0) {
    throw CefeError(ErrorCode::Config, "avg_score weights sum to zero");
  }
  return value_sum / weight_sum;
}

const std::map<std::string, Direction>& default_directions() {
  static const std::map<std::string, Direction> kDirections = {
      {"acc", Direction::HigherBetter},      {"precision", Direction::HigherBetter},
      {"recall", Direction::HigherBetter},   {"f1", Direction::HigherBetter},
      {"macro_f1", Direction::HigherBetter}, {"qwk", Direction::HigherBetter},
      {"em", Direction::HigherBetter},       {"bleu", Direction::HigherBetter},
      {"f0.5", Direction::HigherBetter},     {"leven", Direction::LowerBetter},
      {"ppl", Direction::LowerBetter},
  };
  return kDirections;
}

std::map<std::string, double> default_classify_weights() {
  return {{"acc", 1.0}, {"f1", 1.0}, {"qwk", 1.0}};
}

std::map<std::string, double> default_correct_weights() {
  return {{"em", 1.0}, {"bleu", 1.0}, {"f0.5", 1.0}};
}

}  // namespace cefe::metrics
