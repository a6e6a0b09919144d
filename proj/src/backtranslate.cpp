#include "cefe/backtranslate.hpp"

#include <algorithm>
#include <chrono>
#include <thread>
#include <utility>

#include "httplib.h"

#include "cefe/errors.hpp"
#include "cefe/segment.hpp"
#include "cefe/utf8.hpp"

namespace cefe::backtrans {

using nlohmann::json;

json record_to_json(const TranslationRecord& record) {
  return json{{"source_text", record.source_text},
              {"pivot_lang", record.pivot_lang},
              {"forward_text", record.forward_text},
              {"back_text", record.back_text},
              {"provider_id", record.provider_id},
              {"timestamp", record.timestamp}};
}

namespace {

const json& require_string_field(const json& record, const char* key) {
  if (!record.contains(key) || !record[key].is_string()) {
    throw CefeError(ErrorCode::Schema,
                    std::string("translation record needs string '") + key + "'");
  }
  return record[key];
}

std::int64_t now_unix_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

TranslationRecord record_from_json(const json& record) {
  if (!record.is_object()) {
    throw CefeError(ErrorCode::Schema, "translation record is not a JSON object");
  }
  TranslationRecord out;
  out.source_text = require_string_field(record, "source_text").get<std::string>();
  out.pivot_lang = require_string_field(record, "pivot_lang").get<std::string>();
  out.forward_text = require_string_field(record, "forward_text").get<std::string>();
  out.back_text = require_string_field(record, "back_text").get<std::string>();
  out.provider_id = require_string_field(record, "provider_id").get<std::string>();
  if (record.contains("timestamp")) {
    if (!record["timestamp"].is_number_integer()) {
      throw CefeError(ErrorCode::Schema, "'timestamp' must be an integer");
    }
    out.timestamp = record["timestamp"].get<std::int64_t>();
  }
  return out;
}

std::uint64_t cache_key(std::string_view source_text, std::string_view pivot_lang,
                        std::string_view provider_id) {
  std::uint64_t key = fnv1a64(source_text);
  key = hash_combine(key, fnv1a64(pivot_lang));
  key = hash_combine(key, fnv1a64(provider_id));
  return key;
}

std::string RoundTripper::round_trip(const std::string& text,
                                     const std::string& pivot_lang) {
  if (text.empty()) {
    throw CefeError(ErrorCode::EmptyInput, "cannot round-trip empty text");
  }
  const std::uint64_t key = cache_key(text, pivot_lang, translator_.id());
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second.back_text;
  }

  TranslationRecord record;
  record.source_text = text;
  record.pivot_lang = pivot_lang;
  record.provider_id = translator_.id();
  record.forward_text = translator_.translate(text, "zh", pivot_lang);
  record.back_text = translator_.translate(record.forward_text, pivot_lang, "zh");
  record.timestamp = now_unix_seconds();

  std::lock_guard<std::mutex> lock(mutex_);
  provider_calls_ += 2;
  // First writer wins so every caller sees one canonical record per key.
  auto [it, inserted] = cache_.emplace(key, std::move(record));
  (void)inserted;
  return it->second.back_text;
}

std::size_t RoundTripper::provider_calls() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return provider_calls_;
}

std::vector<TranslationRecord> RoundTripper::records() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<TranslationRecord> out;
  out.reserve(cache_.size());
  for (const auto& [key, record] : cache_) out.push_back(record);
  return out;
}

void RoundTripper::load_cache(const std::filesystem::path& path) {
  Dataset rows = load_dataset(path, DatasetKind::Rows);
  std::lock_guard<std::mutex> lock(mutex_);
  for (const json& item : rows.items) {
    TranslationRecord record = record_from_json(item);
    std::uint64_t key =
        cache_key(record.source_text, record.pivot_lang, record.provider_id);
    cache_.emplace(key, std::move(record));
  }
}

void RoundTripper::save_cache(const std::filesystem::path& path) const {
  Dataset rows;
  rows.kind = DatasetKind::Rows;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (const auto& [key, record] : cache_) {
      rows.items.push_back(record_to_json(record));
    }
  }
  save_dataset(rows, path);
}

namespace {

// Small CJK pool for substitutions; pick_replacement guarantees the result
// differs from the original even when the pool draw collides.
constexpr char32_t kSubstitutePool[] = {U'的', U'是', U'了', U'在', U'有',
                                        U'我', U'他', U'天', U'大', U'好'};
constexpr std::size_t kPoolSize = sizeof(kSubstitutePool) / sizeof(char32_t);

char32_t pick_substitute(char32_t original, Rng& rng) {
  std::size_t idx = rng.pick_index(kPoolSize);
  if (kSubstitutePool[idx] == original) idx = (idx + 1) % kPoolSize;
  return kSubstitutePool[idx];
}

}  // namespace

std::string simulate_translation(const std::string& text, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw CefeError(ErrorCode::Domain, "noise rate must be in [0, 1]");
  }
  std::vector<char32_t> cps = utf8::decode(text);
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : cps) {
    if (!rng.bernoulli(rate)) {
      utf8::append(out, cp);
      continue;
    }
    switch (rng.pick_index(3)) {
      case 0:  // substitute with a different character
        utf8::append(out, pick_substitute(cp, rng));
        break;
      case 1:  // drop
        break;
      default:  // duplicate
        utf8::append(out, cp);
        utf8::append(out, cp);
        break;
    }
  }
  return out;
}

SimTranslator::SimTranslator(std::map<std::string, double> lang_rates,
                             std::uint64_t seed)
    : lang_rates_(std::move(lang_rates)), seed_(seed) {
  for (const auto& [lang, rate] : lang_rates_) {
    if (!(rate >= 0.0 && rate <= 1.0)) {
      throw CefeError(ErrorCode::Config,
                      "noise rate for '" + lang + "' must be in [0, 1]");
    }
  }
}

std::string SimTranslator::translate(const std::string& text,
                                     const std::string& source_lang,
                                     const std::string& target_lang) {
  if (text.empty()) {
    throw CefeError(ErrorCode::Translation, "cannot translate empty text");
  }
  // Forward leg: the pivot-language rendition is represented by the text
  // itself; all simulated damage happens on the way back.
  if (target_lang != "zh") {
    if (lang_rates_.find(target_lang) == lang_rates_.end()) {
      throw CefeError(ErrorCode::Translation,
                      "no noise rate configured for pivot '" + target_lang + "'");
    }
    return text;
  }
  auto it = lang_rates_.find(source_lang);
  if (it == lang_rates_.end()) {
    throw CefeError(ErrorCode::Translation,
                    "no noise rate configured for pivot '" + source_lang + "'");
  }
  Rng rng(hash_combine(seed_,
                       hash_combine(fnv1a64(text), fnv1a64(source_lang))));
  return simulate_translation(text, it->second, rng);
}

CacheReplayTranslator::CacheReplayTranslator(std::vector<TranslationRecord> records)
    : records_(std::move(records)) {}

std::string CacheReplayTranslator::translate(const std::string& text,
                                             const std::string& source_lang,
                                             const std::string& target_lang) {
  if (target_lang != "zh") {
    for (const TranslationRecord& r : records_) {
      if (r.source_text == text && r.pivot_lang == target_lang) {
        return r.forward_text;
      }
    }
  } else {
    for (const TranslationRecord& r : records_) {
      if (r.forward_text == text && r.pivot_lang == source_lang) {
        return r.back_text;
      }
    }
  }
  throw CefeError(ErrorCode::Translation,
                  "cache replay miss for " + source_lang + "->" + target_lang);
}

void HttpConfig::validate() const {
  if (base_url.empty()) {
    throw CefeError(ErrorCode::Config, "http provider needs a base_url");
  }
  if (path.empty() || path[0] != '/') {
    throw CefeError(ErrorCode::Config, "http path must start with '/'");
  }
  if (timeout_ms <= 0) {
    throw CefeError(ErrorCode::Config, "http timeout must be positive");
  }
  if (retries < 0) {
    throw CefeError(ErrorCode::Config, "http retries must be non-negative");
  }
}

HttpTranslator::HttpTranslator(HttpConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
}

std::string HttpTranslator::translate(const std::string& text,
                                      const std::string& source_lang,
                                      const std::string& target_lang) {
  if (text.empty()) {
    throw CefeError(ErrorCode::Translation, "cannot translate empty text");
  }
  json payload{{"text", text},
               {"source_lang", source_lang},
               {"target_lang", target_lang}};
  const std::string body = payload.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(0, cfg_.timeout_ms * 1000);
    client.set_read_timeout(0, cfg_.timeout_ms * 1000);
    if (!cfg_.auth_token.empty()) {
      client.set_default_headers({{cfg_.auth_header, cfg_.auth_token}});
    }
    httplib::Result result = client.Post(cfg_.path, body, "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status != 200) {
      last_error = "status " + std::to_string(result->status);
      continue;
    }
    json response = json::parse(result->body, nullptr, false);
    if (response.is_discarded() || !response.contains("translation") ||
        !response["translation"].is_string()) {
      last_error = "malformed response body";
      continue;
    }
    return response["translation"].get<std::string>();
  }
  throw CefeError(ErrorCode::Translation,
                  "translation failed after " + std::to_string(cfg_.retries + 1) +
                      " attempts (" + last_error + ")");
}

void BacktransConfig::validate() const {
  if (lang_rich.empty() || lang_limit.empty()) {
    throw CefeError(ErrorCode::Config, "pivot language codes must be non-empty");
  }
  if (lang_rich == lang_limit) {
    throw CefeError(ErrorCode::Config,
                    "rich and limited pivot languages must differ");
  }
  if (!(rich_rate >= 0.0 && rich_rate <= 1.0) ||
      !(limit_rate >= 0.0 && limit_rate <= 1.0)) {
    throw CefeError(ErrorCode::Config, "noise rates must be in [0, 1]");
  }
  if (!(rich_rate < limit_rate)) {
    throw CefeError(ErrorCode::Config,
                    "rich_rate must be below limit_rate");
  }
  if (jobs < 1) {
    throw CefeError(ErrorCode::Config, "jobs must be at least 1");
  }
}

json LabelReport::to_json() const {
  json histogram_json = json::object();
  for (const auto& [label, count] : histogram) {
    histogram_json[cefe::to_string(label)] = count;
  }
  json skipped_json = json::array();
  for (const LabelSkip& s : skipped) {
    skipped_json.push_back(json{
        {"essay_id", s.essay_id}, {"pivot_lang", s.pivot_lang}, {"reason", s.reason}});
  }
  return json{{"input_essays", input_essays},
              {"produced", produced},
              {"histogram", std::move(histogram_json)},
              {"skipped", std::move(skipped_json)}};
}

namespace {

struct EssayOutcome {
  std::vector<std::pair<Essay, FluencyLabel>> essays;
  std::vector<LabelSkip> skipped;
};

EssayOutcome label_one(const Essay& essay, const BacktransConfig& cfg,
                       RoundTripper& rt) {
  EssayOutcome outcome;

  Essay original = essay;
  original.id = essay.id + "#orig";
  original.label = FluencyLabel::Excellent;
  outcome.essays.emplace_back(std::move(original), FluencyLabel::Excellent);

  const std::string source = essay.joined_text();
  const std::pair<std::string, FluencyLabel> legs[] = {
      {cfg.lang_rich, FluencyLabel::Moderate},
      {cfg.lang_limit, FluencyLabel::Failing}};
  const char* suffixes[] = {"#rich", "#limit"};
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& [pivot, label] = legs[i];
    std::string back = rt.round_trip(source, pivot);
    if (is_blank_text(back)) {
      outcome.skipped.push_back(
          {essay.id, pivot, "round trip produced empty text"});
      continue;
    }
    Essay minted = make_essay(essay.id + suffixes[i], back);
    minted.label = label;
    outcome.essays.emplace_back(std::move(minted), label);
  }
  return outcome;
}

}  // namespace

LabelResult label_corpus(const std::vector<Essay>& essays,
                         const BacktransConfig& cfg, RoundTripper& rt) {
  cfg.validate();
  if (essays.empty()) {
    throw CefeError(ErrorCode::EmptyInput, "no essays to label");
  }
  for (const Essay& essay : essays) validate(essay);

  std::vector<EssayOutcome> outcomes(essays.size());
  const std::size_t jobs = std::min(cfg.jobs, essays.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < essays.size(); ++i) {
      outcomes[i] = label_one(essays[i], cfg, rt);
    }
  } else {
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < essays.size(); i += jobs) {
            outcomes[i] = label_one(essays[i], cfg, rt);
          }
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (std::thread& worker : workers) worker.join();
    if (failure) std::rethrow_exception(failure);
  }

  LabelResult result;
  result.dataset.kind = DatasetKind::Essays;
  result.report.input_essays = essays.size();
  for (EssayOutcome& outcome : outcomes) {
    for (auto& [essay, label] : outcome.essays) {
      result.dataset.items.push_back(essay_to_json(essay));
      ++result.report.histogram[label];
      ++result.report.produced;
    }
    for (LabelSkip& skip : outcome.skipped) {
      result.report.skipped.push_back(std::move(skip));
    }
  }
  return result;
}

}  // namespace cefe::backtrans
