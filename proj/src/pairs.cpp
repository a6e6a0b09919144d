#include "cefe/pairs.hpp"

#include <algorithm>
#include <string>
#include <unordered_set>
#include <utility>

#include "cefe/errors.hpp"

namespace cefe::pairs {

using nlohmann::json;

const char* to_string(PairStrategy strategy) {
  switch (strategy) {
    case PairStrategy::WrongCorrect: return "wrong-correct";
    case PairStrategy::VariantError: return "variant-error";
  }
  throw CefeError(ErrorCode::Domain, "unknown pair strategy");
}

PairStrategy strategy_from_string(std::string_view name) {
  if (name == "wrong-correct") return PairStrategy::WrongCorrect;
  if (name == "variant-error") return PairStrategy::VariantError;
  throw CefeError(ErrorCode::Domain,
                  "unknown pair strategy '" + std::string(name) + "'");
}

json pair_to_json(const PairExample& example) {
  json record{{"id", example.id},
              {"text_a", example.text_a},
              {"label", example.label},
              {"strategy", to_string(example.strategy)},
              {"target_fine", example.target_fine.name}};
  if (example.text_b) record["text_b"] = *example.text_b;
  return record;
}

namespace {

void require_field(const json& record, const char* key, const char* expected) {
  if (!record.contains(key)) {
    throw CefeError(ErrorCode::Schema,
                    std::string("pair example is missing '") + key + "'");
  }
  bool ok = false;
  if (std::string_view(expected) == "string") ok = record[key].is_string();
  if (std::string_view(expected) == "integer") ok = record[key].is_number_integer();
  if (!ok) {
    throw CefeError(ErrorCode::Schema,
                    std::string("pair example field '") + key + "' must be a " +
                        expected);
  }
}

}  // namespace

PairExample pair_from_json(const json& record) {
  if (!record.is_object()) {
    throw CefeError(ErrorCode::Schema, "pair example is not a JSON object");
  }
  require_field(record, "id", "string");
  require_field(record, "text_a", "string");
  require_field(record, "label", "integer");
  require_field(record, "strategy", "string");
  require_field(record, "target_fine", "string");

  PairExample example;
  example.id = record["id"].get<std::string>();
  example.text_a = record["text_a"].get<std::string>();
  example.label = record["label"].get<int>();
  if (example.label != 0 && example.label != 1) {
    throw CefeError(ErrorCode::Schema, "pair example label must be 0 or 1");
  }
  example.strategy = strategy_from_string(record["strategy"].get<std::string>());
  example.target_fine = fine_from_string(record["target_fine"].get<std::string>());
  if (record.contains("text_b")) {
    if (!record["text_b"].is_string()) {
      throw CefeError(ErrorCode::Schema, "pair example field 'text_b' must be a string");
    }
    example.text_b = record["text_b"].get<std::string>();
  }
  return example;
}

json PairBuildReport::to_json() const {
  json skipped_json = json::array();
  for (const SkippedRecord& s : skipped) {
    skipped_json.push_back(json{{"id", s.id}, {"reason", s.reason}});
  }
  return json{{"input_records", input_records},
              {"positives", positives},
              {"negatives", negatives},
              {"skipped", std::move(skipped_json)}};
}

PairBuildResult build_wrong_correct(const std::vector<CorrectionPair>& input,
                                    const FineError& target_fine) {
  PairBuildResult result;
  result.report.input_records = input.size();

  // First pass: drop pairs that cannot form a labeled example on their own.
  std::vector<const CorrectionPair*> candidates;
  candidates.reserve(input.size());
  for (const CorrectionPair& pair : input) {
    if (is_blank_text(pair.source) || is_blank_text(pair.target)) {
      result.report.skipped.push_back({pair.id, "missing counterpart"});
      continue;
    }
    if (pair.source == pair.target) {
      result.report.skipped.push_back({pair.id, "identical halves"});
      continue;
    }
    candidates.push_back(&pair);
  }

  // Second pass: a text that occurs as some pair's wrong half and some other
  // pair's correct half would end up under both labels; dropping every pair
  // that touches such a text keeps the remaining pools disjoint while
  // preserving the exact 1:1 ratio.
  std::unordered_set<std::string> wrong_texts;
  std::unordered_set<std::string> correct_texts;
  for (const CorrectionPair* pair : candidates) {
    wrong_texts.insert(pair->source);
    correct_texts.insert(pair->target);
  }
  auto conflicted = [&](const std::string& text) {
    return wrong_texts.count(text) != 0 && correct_texts.count(text) != 0;
  };

  for (const CorrectionPair* pair : candidates) {
    if (conflicted(pair->source) || conflicted(pair->target)) {
      result.report.skipped.push_back({pair->id, "text appears under both labels"});
      continue;
    }
    result.examples.push_back({pair->id + "#w", pair->source, std::nullopt, 1,
                               PairStrategy::WrongCorrect, target_fine});
    result.examples.push_back({pair->id + "#c", pair->target, std::nullopt, 0,
                               PairStrategy::WrongCorrect, target_fine});
    ++result.report.positives;
    ++result.report.negatives;
  }
  return result;
}

PairBuildResult build_variant_error(const std::vector<Sentence>& target,
                                    const std::vector<Sentence>& others,
                                    const FineError& target_fine, Rng& rng) {
  if (target.empty()) {
    throw CefeError(ErrorCode::EmptyPool, "target pool is empty");
  }
  if (others.empty()) {
    throw CefeError(ErrorCode::EmptyPool, "negative pool is empty");
  }

  PairBuildResult result;
  result.report.input_records = target.size() + others.size();

  std::unordered_set<std::string> target_texts;
  for (const Sentence& s : target) target_texts.insert(s.text);

  std::vector<const Sentence*> pool;
  pool.reserve(others.size());
  for (const Sentence& s : others) {
    if (target_texts.count(s.text) != 0) {
      result.report.skipped.push_back({s.id, "text also occurs in the target pool"});
      continue;
    }
    pool.push_back(&s);
  }
  if (pool.empty()) {
    throw CefeError(ErrorCode::EmptyPool,
                    "negative pool is empty after removing target-pool texts");
  }

  // 1:1 split, except that a short negative pool may leave one extra positive.
  std::size_t neg = std::min(pool.size(), target.size());
  std::size_t pos = std::min(target.size(), neg + 1);

  for (std::size_t i = 0; i < target.size(); ++i) {
    if (i >= pos) {
      result.report.skipped.push_back({target[i].id, "dropped to keep class balance"});
      continue;
    }
    result.examples.push_back({target[i].id, target[i].text, std::nullopt, 1,
                               PairStrategy::VariantError, target_fine});
  }
  result.report.positives = pos;

  rng.shuffle(pool);
  for (std::size_t i = 0; i < neg; ++i) {
    result.examples.push_back({pool[i]->id, pool[i]->text, std::nullopt, 0,
                               PairStrategy::VariantError, target_fine});
  }
  result.report.negatives = neg;
  return result;
}

SentencePools split_pools(const Dataset& sentences, const FineError& target_fine) {
  if (sentences.kind != DatasetKind::LabeledSentences) {
    throw CefeError(ErrorCode::Schema,
                    "pair pools require a labeled-sentences dataset");
  }
  SentencePools pools;
  for (const json& record : sentences.items) {
    const json& labels = record["labels"];
    if (labels.empty()) continue;  // clean sentence: belongs to neither pool
    bool has_target = false;
    for (const json& label : labels) {
      if (label.contains("fine") &&
          fine_from_string(label["fine"].get<std::string>()) == target_fine) {
        has_target = true;
        break;
      }
    }
    Sentence sentence{record["id"].get<std::string>(),
                      record["text"].get<std::string>()};
    (has_target ? pools.target : pools.others).push_back(std::move(sentence));
  }
  return pools;
}

}  // namespace cefe::pairs
