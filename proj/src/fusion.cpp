#include "cefe/fusion.hpp"

#include <utility>

#include "cefe/errors.hpp"

namespace cefe::fusion {

using nlohmann::json;

namespace {

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw CefeError(ErrorCode::Domain,
                    what + " probability must be in [0, 1]");
  }
}

std::string require_id(const json& record, const char* what) {
  if (!record.is_object() || !record.contains("id") || !record["id"].is_string()) {
    throw CefeError(ErrorCode::Schema,
                    std::string(what) + " prediction needs a string 'id'");
  }
  return record["id"].get<std::string>();
}

const json& require_probs(const json& record, const char* what) {
  if (!record.contains("probs") || !record["probs"].is_object()) {
    throw CefeError(ErrorCode::Schema,
                    std::string(what) + " prediction needs a 'probs' object");
  }
  return record["probs"];
}

double number_or_throw(const json& value, const char* what) {
  if (!value.is_number()) {
    throw CefeError(ErrorCode::Schema,
                    std::string(what) + " probabilities must be numbers");
  }
  return value.get<double>();
}

}  // namespace

void CoarsePrediction::validate() const {
  for (const auto& [category, p] : probs) {
    check_probability(p, std::string("coarse '") + cefe::to_string(category) + "'");
  }
}

void FinePrediction::validate() const {
  for (const auto& [fine, p] : probs) {
    check_probability(p, "fine '" + fine.name + "'");
  }
}

json coarse_to_json(const CoarsePrediction& prediction) {
  json probs = json::object();
  for (const auto& [category, p] : prediction.probs) {
    probs[cefe::to_string(category)] = p;
  }
  json record{{"id", prediction.id}, {"probs", std::move(probs)}};
  if (!prediction.text.empty()) record["text"] = prediction.text;
  return record;
}

CoarsePrediction coarse_from_json(const json& record) {
  CoarsePrediction out;
  out.id = require_id(record, "coarse");
  if (record.contains("text")) {
    if (!record["text"].is_string()) {
      throw CefeError(ErrorCode::Schema, "'text' must be a string");
    }
    out.text = record["text"].get<std::string>();
  }
  for (const auto& [key, value] : require_probs(record, "coarse").items()) {
    out.probs[coarse_from_string(key)] = number_or_throw(value, "coarse");
  }
  out.validate();
  return out;
}

json fine_to_json(const FinePrediction& prediction) {
  json probs = json::object();
  for (const auto& [fine, p] : prediction.probs) probs[fine.name] = p;
  return json{{"id", prediction.id},
              {"probs", std::move(probs)},
              {"strategy", pairs::to_string(prediction.strategy)}};
}

FinePrediction fine_from_json(const json& record) {
  FinePrediction out;
  out.id = require_id(record, "fine");
  for (const auto& [key, value] : require_probs(record, "fine").items()) {
    out.probs[fine_from_string(key)] = number_or_throw(value, "fine");
  }
  if (record.contains("strategy")) {
    if (!record["strategy"].is_string()) {
      throw CefeError(ErrorCode::Schema, "'strategy' must be a string");
    }
    out.strategy = pairs::strategy_from_string(record["strategy"].get<std::string>());
  }
  out.validate();
  return out;
}

void FusionConfig::validate() const {
  if (!(coarse_threshold > 0.0 && coarse_threshold < 1.0)) {
    throw CefeError(ErrorCode::Config, "coarse_threshold must lie in (0, 1)");
  }
  if (!(fine_threshold > 0.0 && fine_threshold < 1.0)) {
    throw CefeError(ErrorCode::Config, "fine_threshold must lie in (0, 1)");
  }
}

FusedLabels fuse(const CoarsePrediction& coarse, const FinePrediction& fine,
                 const FusionConfig& cfg) {
  cfg.validate();
  coarse.validate();
  fine.validate();

  FusedLabels fused;
  for (const auto& [category, p] : coarse.probs) {
    if (p >= cfg.coarse_threshold) fused.coarse.insert(category);
  }
  for (const auto& [fine_type, p] : fine.probs) {
    if (p < cfg.fine_threshold) continue;
    if (cfg.fine_requires_coarse) {
      std::optional<CoarseError> parent = cfg.mapping.parent_of(fine_type);
      if (parent && fused.coarse.count(*parent) == 0) continue;
    }
    fused.fine.insert(fine_type);
  }
  return fused;
}

nlohmann::json FuseCorpusResult::summary_json() const {
  json counts = json::object();
  for (const auto& [label, count] : label_counts) counts[label] = count;
  return json{{"records", dataset.items.size()}, {"label_counts", std::move(counts)}};
}

FuseCorpusResult fuse_corpus(const std::vector<CoarsePrediction>& coarse,
                             const std::vector<FinePrediction>& fine,
                             const FusionConfig& cfg) {
  cfg.validate();
  if (coarse.size() != fine.size()) {
    throw CefeError(ErrorCode::Alignment,
                    "coarse and fine prediction lists differ in length (" +
                        std::to_string(coarse.size()) + " vs " +
                        std::to_string(fine.size()) + ")");
  }

  FuseCorpusResult result;
  result.dataset.kind = DatasetKind::LabeledSentences;
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    if (coarse[i].id != fine[i].id) {
      throw CefeError(ErrorCode::Alignment,
                      "prediction id mismatch at position " + std::to_string(i) +
                          ": '" + coarse[i].id + "' vs '" + fine[i].id + "'");
    }
    FusedLabels fused = fuse(coarse[i], fine[i], cfg);

    json labels = json::array();
    for (CoarseError category : fused.coarse) {
      labels.push_back(json{{"coarse", cefe::to_string(category)}});
      ++result.label_counts[cefe::to_string(category)];
    }
    for (const FineError& fine_type : fused.fine) {
      json entry{{"fine", fine_type.name}};
      if (std::optional<CoarseError> parent = cfg.mapping.parent_of(fine_type)) {
        entry["coarse"] = cefe::to_string(*parent);
      }
      labels.push_back(std::move(entry));
      ++result.label_counts[fine_type.name];
    }
    result.dataset.items.push_back(json{{"id", coarse[i].id},
                                        {"text", coarse[i].text},
                                        {"labels", std::move(labels)}});
  }
  return result;
}

}  // namespace cefe::fusion
