#include "cefe/injection.hpp"

#include <algorithm>
#include <optional>
#include <string_view>
#include <thread>
#include <unordered_set>

#include "cefe/errors.hpp"
#include "cefe/utf8.hpp"

namespace cefe::inject {

namespace {

constexpr int kOpRetries = 16;    // draws per operator before giving up
constexpr int kPlanRetries = 8;   // whole-sentence attempts before skipping

constexpr std::u32string_view kHanPool =
    U"的了是在我有和就不人都一大来说要去能会好中国时年生上面多发当于";
constexpr std::u32string_view kLatinPool = U"abcdefghijklmnopqrstuvwxyz";

bool is_ascii_alpha(char32_t cp) {
  return (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z');
}

char32_t pick_replacement(char32_t original, Rng& rng) {
  std::u32string_view pool = is_ascii_alpha(original) ? kLatinPool : kHanPool;
  std::size_t idx = rng.pick_index(pool.size());
  if (pool[idx] == original) idx = (idx + 1) % pool.size();
  return pool[idx];
}

std::string one_char(char32_t cp) {
  std::string out;
  utf8::append(out, cp);
  return out;
}

[[noreturn]] void bad_op(const char* why) {
  throw CefeError(ErrorCode::Domain, std::string("invalid error op: ") + why);
}

// Single corruption attempt; nullopt when the category cannot apply.
std::optional<SingleInjection> try_inject(const std::string& text, ErrorCategory category,
                                          Rng& rng) {
  std::vector<char32_t> cps = utf8::decode(text);
  std::size_t n = cps.size();

  auto finish = [&](ErrorOp op) -> std::optional<SingleInjection> {
    return SingleInjection{op, apply_op(op, text)};
  };

  switch (category) {
    case ErrorCategory::Char: {
      if (n == 0) return std::nullopt;
      for (int attempt = 0; attempt < kOpRetries; ++attempt) {
        switch (rng.next_below(3)) {
          case 0: {  // replace with a same-script character
            std::size_t i = rng.pick_index(n);
            char32_t repl = pick_replacement(cps[i], rng);
            if (repl == cps[i]) continue;
            return finish({category, OpKind::CharReplace, i, i + 1, one_char(repl)});
          }
          case 1: {  // delete one character
            if (n < 2) continue;
            std::size_t i = rng.pick_index(n);
            ErrorOp op{category, OpKind::CharDelete, i, i + 1, ""};
            std::string out = apply_op(op, text);
            if (is_blank_text(out)) continue;
            return SingleInjection{op, std::move(out)};
          }
          default: {  // duplicate one character
            std::size_t i = rng.pick_index(n);
            return finish({category, OpKind::CharInsert, i + 1, i + 1, one_char(cps[i])});
          }
        }
      }
      return std::nullopt;
    }

    case ErrorCategory::Miss: {
      if (n < 2) return std::nullopt;
      for (int attempt = 0; attempt < kOpRetries; ++attempt) {
        std::size_t len = 1 + rng.pick_index(std::min<std::size_t>(3, n - 1));
        ErrorOp op{category, OpKind::SpanDelete, 0, len, ""};
        std::string out = apply_op(op, text);
        if (is_blank_text(out)) continue;
        return SingleInjection{op, std::move(out)};
      }
      return std::nullopt;
    }

    case ErrorCategory::Redu: {
      if (n == 0) return std::nullopt;
      std::size_t len = 1 + rng.pick_index(std::min<std::size_t>(3, n));
      std::size_t start = rng.pick_index(n - len + 1);
      return finish({category, OpKind::SpanDuplicate, start, start + len, ""});
    }

    case ErrorCategory::Coll: {
      if (n < 3) return std::nullopt;
      for (int attempt = 0; attempt < kOpRetries; ++attempt) {
        std::size_t i = rng.pick_index(n - 2);
        std::size_t j = i + 2 + rng.pick_index(n - i - 2);
        if (cps[i] == cps[j]) continue;
        return finish({category, OpKind::WordSwap, i, j + 1, ""});
      }
      return std::nullopt;
    }

    case ErrorCategory::Misorder: {
      if (n < 2) return std::nullopt;
      for (int attempt = 0; attempt < kOpRetries; ++attempt) {
        std::size_t pivot = 1 + rng.pick_index(n - 1);
        ErrorOp op{category, OpKind::AdjacentSegmentSwap, 0, pivot, ""};
        std::string out = apply_op(op, text);
        if (out == text) continue;  // periodic strings rotate onto themselves
        return SingleInjection{op, std::move(out)};
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

// Positive-weight categories in a weighted random order (sampling without
// replacement). An empty weight map means every category at weight 1.
std::vector<ErrorCategory> weighted_order(const CascadeConfig& cfg, Rng& rng) {
  std::vector<std::pair<ErrorCategory, double>> pool;
  for (ErrorCategory cat : kAllCategories) {
    double w = cfg.category_weights.empty() ? 1.0 : 0.0;
    if (auto it = cfg.category_weights.find(cat); it != cfg.category_weights.end()) {
      w = it->second;
    }
    if (w > 0.0) pool.emplace_back(cat, w);
  }

  std::vector<ErrorCategory> order;
  order.reserve(pool.size());
  while (!pool.empty()) {
    double total = 0.0;
    for (const auto& [cat, w] : pool) total += w;
    double r = rng.next_unit() * total;
    std::size_t chosen = pool.size() - 1;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      r -= pool[i].second;
      if (r < 0.0) {
        chosen = i;
        break;
      }
    }
    order.push_back(pool[chosen].first);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(chosen));
  }
  return order;
}

std::optional<InjectedSentence> corrupt_one(const Sentence& sentence,
                                            const CascadeConfig& cfg) {
  Rng rng(hash_combine(cfg.seed, fnv1a64(sentence.id)));
  int target = sample_error_count(cfg, rng);

  for (int attempt = 0; attempt < kPlanRetries; ++attempt) {
    InjectedSentence item{sentence, sentence.text, {}, 0};
    for (ErrorCategory cat : weighted_order(cfg, rng)) {
      if (static_cast<int>(item.ops.size()) == target) break;
      std::optional<SingleInjection> si = try_inject(item.corrupted, cat, rng);
      if (!si) continue;
      item.corrupted = std::move(si->corrupted);
      item.ops.push_back(si->op);
    }
    item.error_count = static_cast<int>(item.ops.size());
    // Ops can compose to the identity in rare cases; such plans are retried.
    if (item.error_count == target && item.corrupted != sentence.text) {
      return item;
    }
  }
  return std::nullopt;
}

}  // namespace

const char* to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Char: return "char";
    case ErrorCategory::Miss: return "miss";
    case ErrorCategory::Redu: return "redu";
    case ErrorCategory::Coll: return "coll";
    case ErrorCategory::Misorder: return "misorder";
  }
  throw CefeError(ErrorCode::Domain, "unknown error category");
}

ErrorCategory category_from_string(std::string_view name) {
  for (ErrorCategory cat : kAllCategories) {
    if (name == to_string(cat)) return cat;
  }
  throw CefeError(ErrorCode::Schema, "unknown error category: " + std::string(name));
}

const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::CharReplace: return "char_replace";
    case OpKind::CharDelete: return "char_delete";
    case OpKind::CharInsert: return "char_insert";
    case OpKind::SpanDelete: return "span_delete";
    case OpKind::SpanDuplicate: return "span_duplicate";
    case OpKind::WordSwap: return "word_swap";
    case OpKind::AdjacentSegmentSwap: return "adjacent_segment_swap";
  }
  throw CefeError(ErrorCode::Domain, "unknown op kind");
}

OpKind op_kind_from_string(std::string_view name) {
  for (OpKind kind : {OpKind::CharReplace, OpKind::CharDelete, OpKind::CharInsert,
                      OpKind::SpanDelete, OpKind::SpanDuplicate, OpKind::WordSwap,
                      OpKind::AdjacentSegmentSwap}) {
    if (name == to_string(kind)) return kind;
  }
  throw CefeError(ErrorCode::Schema, "unknown op kind: " + std::string(name));
}

std::string apply_op(const ErrorOp& op, const std::string& text) {
  std::vector<char32_t> cps = utf8::decode(text);
  std::size_t n = cps.size();
  if (op.begin > op.end || op.end > n) bad_op("span out of bounds");

  switch (op.kind) {
    case OpKind::CharReplace: {
      if (op.end != op.begin + 1) bad_op("replace span must cover one character");
      std::vector<char32_t> repl = utf8::decode(op.replacement);
      if (repl.size() != 1) bad_op("replace needs a single replacement character");
      cps[op.begin] = repl[0];
      break;
    }
    case OpKind::CharDelete: {
      if (op.end != op.begin + 1) bad_op("delete span must cover one character");
      cps.erase(cps.begin() + static_cast<std::ptrdiff_t>(op.begin));
      break;
    }
    case OpKind::CharInsert: {
      if (op.begin != op.end) bad_op("insert span must be empty");
      std::vector<char32_t> repl = utf8::decode(op.replacement);
      if (repl.empty()) bad_op("insert needs replacement text");
      cps.insert(cps.begin() + static_cast<std::ptrdiff_t>(op.begin), repl.begin(),
                 repl.end());
      break;
    }
    case OpKind::SpanDelete: {
      if (op.begin == op.end) bad_op("span delete needs a non-empty span");
      cps.erase(cps.begin() + static_cast<std::ptrdiff_t>(op.begin),
                cps.begin() + static_cast<std::ptrdiff_t>(op.end));
      break;
    }
    case OpKind::SpanDuplicate: {
      if (op.begin == op.end) bad_op("span duplicate needs a non-empty span");
      std::vector<char32_t> span(cps.begin() + static_cast<std::ptrdiff_t>(op.begin),
                                 cps.begin() + static_cast<std::ptrdiff_t>(op.end));
      cps.insert(cps.begin() + static_cast<std::ptrdiff_t>(op.end), span.begin(),
                 span.end());
      break;
    }
    case OpKind::WordSwap: {
      if (op.end < op.begin + 2) bad_op("word swap needs two positions");
      std::swap(cps[op.begin], cps[op.end - 1]);
      break;
    }
    case OpKind::AdjacentSegmentSwap: {
      if (op.begin != 0 || op.end == 0 || op.end >= n) bad_op("segment swap pivot out of range");
      std::vector<char32_t> rotated(cps.begin() + static_cast<std::ptrdiff_t>(op.end),
                                    cps.end());
      rotated.insert(rotated.end(), cps.begin(),
                     cps.begin() + static_cast<std::ptrdiff_t>(op.end));
      cps = std::move(rotated);
      break;
    }
  }
  return utf8::encode(cps);
}

nlohmann::json injected_to_json(const InjectedSentence& item) {
  nlohmann::json ops = nlohmann::json::array();
  for (const ErrorOp& op : item.ops) {
    nlohmann::json rec{{"category", to_string(op.category)},
                       {"kind", to_string(op.kind)},
                       {"begin", op.begin},
                       {"end", op.end}};
    if (!op.replacement.empty()) rec["replacement"] = op.replacement;
    ops.push_back(std::move(rec));
  }
  return nlohmann::json{{"id", item.source.id},
                        {"source", item.source.text},
                        {"corrupted", item.corrupted},
                        {"error_count", item.error_count},
                        {"ops", std::move(ops)}};
}

InjectedSentence injected_from_json(const nlohmann::json& record) {
  if (!record.is_object() || !record.contains("id") || !record.contains("source") ||
      !record.contains("corrupted") || !record.contains("ops")) {
    throw CefeError(ErrorCode::Schema, "injected record needs id/source/corrupted/ops");
  }
  InjectedSentence item;
  try {
    item.source.id = record.at("id").get<std::string>();
    item.source.text = record.at("source").get<std::string>();
    item.corrupted = record.at("corrupted").get<std::string>();
    for (const nlohmann::json& rec : record.at("ops")) {
      ErrorOp op;
      op.category = category_from_string(rec.at("category").get<std::string>());
      op.kind = op_kind_from_string(rec.at("kind").get<std::string>());
      op.begin = rec.at("begin").get<std::size_t>();
      op.end = rec.at("end").get<std::size_t>();
      op.replacement = rec.value("replacement", "");
      item.ops.push_back(std::move(op));
    }
    item.error_count = record.value("error_count", static_cast<int>(item.ops.size()));
  } catch (const nlohmann::json::exception& e) {
    throw CefeError(ErrorCode::Schema, std::string("bad injected record: ") + e.what());
  }
  if (item.error_count != static_cast<int>(item.ops.size())) {
    throw CefeError(ErrorCode::Schema, "error_count does not match the op list");
  }
  return item;
}

void CascadeConfig::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw CefeError(ErrorCode::Domain, "cascade p must lie in [0, 1]");
  }
  int positive = 0;
  for (ErrorCategory cat : kAllCategories) {
    double w = category_weights.empty() ? 1.0 : 0.0;
    if (auto it = category_weights.find(cat); it != category_weights.end()) w = it->second;
    if (w < 0.0) {
      throw CefeError(ErrorCode::Config, "category weights must be non-negative");
    }
    positive += w > 0.0 ? 1 : 0;
  }
  if (positive == 0) {
    throw CefeError(ErrorCode::Config, "at least one category weight must be positive");
  }
  if (max_errors < 1 || max_errors > positive) {
    throw CefeError(ErrorCode::Config,
                    "max_errors must lie in [1, " + std::to_string(positive) +
                        "] so ops can use distinct categories");
  }
}

std::array<double, 4> expected_proportions(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw CefeError(ErrorCode::Domain, "p must lie in [0, 1]");
  }
  constexpr double kChoose3[4] = {1.0, 3.0, 3.0, 1.0};
  std::array<double, 4> out{};
  for (int i = 1; i <= 4; ++i) {
    double v = kChoose3[i - 1];
    for (int f = 0; f < 4 - i; ++f) v *= 1.0 - p;
    for (int f = 0; f < i - 1; ++f) v *= p;
    out[static_cast<std::size_t>(i - 1)] = v;
  }
  return out;
}

int sample_error_count(const CascadeConfig& cfg, Rng& rng) {
  cfg.validate();
  int count = 1;
  for (int i = 1; i < cfg.max_errors; ++i) {
    count += rng.bernoulli(cfg.p) ? 1 : 0;
  }
  return count;
}

SingleInjection inject_single(const Sentence& sentence, ErrorCategory category, Rng& rng) {
  std::optional<SingleInjection> si = try_inject(sentence.text, category, rng);
  if (!si) {
    throw CefeError(ErrorCode::InjectionInfeasible,
                    "sentence '" + sentence.id + "' cannot take a '" +
                        to_string(category) + "' error");
  }
  return *std::move(si);
}

nlohmann::json InjectionReport::to_json() const {
  nlohmann::json hist = nlohmann::json::array();
  for (std::int64_t count : histogram) hist.push_back(count);
  return nlohmann::json{{"requested", requested},
                        {"produced", produced},
                        {"skipped", skipped},
                        {"error_count_histogram", std::move(hist)}};
}

InjectionResult generate_multi_error(const std::vector<Sentence>& corpus,
                                     const CascadeConfig& cfg, int jobs) {
  cfg.validate();
  if (corpus.empty()) {
    throw CefeError(ErrorCode::EmptyInput, "injection corpus is empty");
  }
  if (jobs < 1) {
    throw CefeError(ErrorCode::Config, "jobs must be at least 1");
  }
  std::unordered_set<std::string> ids;
  for (const Sentence& s : corpus) {
    if (!ids.insert(s.id).second) {
      throw CefeError(ErrorCode::Schema, "duplicate sentence id '" + s.id + "'");
    }
  }

  // Per-item seeding makes every slot independent of evaluation order, so
  // sharding across threads cannot change the result.
  std::vector<std::optional<InjectedSentence>> slots(corpus.size());
  auto run_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) slots[i] = corrupt_one(corpus[i], cfg);
  };

  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), corpus.size());
  if (workers <= 1) {
    run_range(0, corpus.size());
  } else {
    std::vector<std::thread> threads;
    std::size_t chunk = (corpus.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      std::size_t lo = w * chunk;
      std::size_t hi = std::min(corpus.size(), lo + chunk);
      if (lo >= hi) break;
      threads.emplace_back(run_range, lo, hi);
    }
    for (std::thread& t : threads) t.join();
  }

  InjectionResult result;
  result.report.requested = corpus.size();
  result.report.histogram.assign(static_cast<std::size_t>(cfg.max_errors), 0);
  for (std::optional<InjectedSentence>& slot : slots) {
    if (!slot) {
      ++result.report.skipped;
      continue;
    }
    ++result.report.produced;
    ++result.report.histogram[static_cast<std::size_t>(slot->error_count - 1)];
    result.items.push_back(*std::move(slot));
  }
  return result;
}

}  // namespace cefe::inject
