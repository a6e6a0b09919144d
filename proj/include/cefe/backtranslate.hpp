#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cefe/dataset.hpp"
#include "cefe/rng.hpp"
#include "cefe/types.hpp"

namespace cefe::backtrans {

// Minimal machine-translation provider interface. Implementations must either
// return a translation for non-empty input or throw CefeError(Translation).
class Translator {
 public:
  virtual ~Translator() = default;
  virtual std::string translate(const std::string& text,
                                const std::string& source_lang,
                                const std::string& target_lang) = 0;
  virtual std::string id() const = 0;
};

// One completed round trip, as persisted in the cache file.
struct TranslationRecord {
  std::string source_text;
  std::string pivot_lang;
  std::string forward_text;
  std::string back_text;
  std::string provider_id;
  std::int64_t timestamp = 0;  // unix seconds; metadata, not part of the key

  bool operator==(const TranslationRecord&) const = default;
};

nlohmann::json record_to_json(const TranslationRecord& record);
TranslationRecord record_from_json(const nlohmann::json& record);

// Cache key; replays for the same key are byte-identical.
std::uint64_t cache_key(std::string_view source_text, std::string_view pivot_lang,
                        std::string_view provider_id);

// Drives zh -> pivot -> zh round trips through a Translator, caching each
// result by (source_text, pivot_lang, provider_id). Thread-safe: the cache is
// the only shared state and writes are serialized; concurrent misses on the
// same key both call the provider, but the first stored record wins so
// replays stay byte-identical.
class RoundTripper {
 public:
  explicit RoundTripper(Translator& translator) : translator_(translator) {}

  // Throws CefeError(EmptyInput) on empty text; provider errors propagate.
  std::string round_trip(const std::string& text, const std::string& pivot_lang);

  // Number of Translator::translate invocations so far (two per uncached
  // round trip, zero for cache hits).
  std::size_t provider_calls() const;

  std::vector<TranslationRecord> records() const;

  // Cache persistence as a Rows JSONL of TranslationRecords.
  void load_cache(const std::filesystem::path& path);
  void save_cache(const std::filesystem::path& path) const;

 private:
  Translator& translator_;
  mutable std::mutex mutex_;
  std::map<std::uint64_t, TranslationRecord> cache_;
  std::size_t provider_calls_ = 0;
};

// Deterministic per-character noise: each code point is independently
// perturbed (substitute/drop/duplicate, equally likely) with probability
// rate. Throws CefeError(Domain) when rate is outside [0, 1].
std::string simulate_translation(const std::string& text, double rate, Rng& rng);

// Offline stand-in for MT. The forward leg (zh -> pivot) passes text through
// unchanged; the backward leg applies simulate_translation at the rate
// configured for the pivot language, seeded by (seed, text, pivot) so output
// is deterministic and independent of call order. Unknown pivot languages
// raise CefeError(Translation).
class SimTranslator : public Translator {
 public:
  SimTranslator(std::map<std::string, double> lang_rates, std::uint64_t seed);

  std::string translate(const std::string& text, const std::string& source_lang,
                        const std::string& target_lang) override;
  std::string id() const override { return "sim"; }

 private:
  std::map<std::string, double> lang_rates_;
  std::uint64_t seed_;
};

// Serves translations from previously persisted TranslationRecords and
// throws CefeError(Translation) on any cache miss; never contacts a network.
class CacheReplayTranslator : public Translator {
 public:
  explicit CacheReplayTranslator(std::vector<TranslationRecord> records);

  std::string translate(const std::string& text, const std::string& source_lang,
                        const std::string& target_lang) override;
  std::string id() const override { return "cache"; }

 private:
  std::vector<TranslationRecord> records_;
};

struct HttpConfig {
  std::string base_url;            // e.g. "http://127.0.0.1:8080"
  std::string path = "/translate";
  std::string auth_header = "Authorization";
  std::string auth_token;          // sent verbatim when non-empty
  int timeout_ms = 5000;
  int retries = 2;                 // additional attempts after the first

  void validate() const;  // CefeError(Config) on violation
};

// JSON-over-HTTP adapter: POST {text, source_lang, target_lang} to
// base_url+path, expecting {"translation": "..."}. Failed requests are
// retried up to cfg.retries times; persistent failure raises
// CefeError(Translation) with the last status or transport error.
class HttpTranslator : public Translator {
 public:
  explicit HttpTranslator(HttpConfig cfg);

  std::string translate(const std::string& text, const std::string& source_lang,
                        const std::string& target_lang) override;
  std::string id() const override { return "http:" + cfg_.base_url + cfg_.path; }

 private:
  HttpConfig cfg_;
};

struct BacktransConfig {
  std::string lang_rich = "en";
  std::string lang_limit = "ja";
  double rich_rate = 0.05;   // simulator noise for the resource-rich pivot
  double limit_rate = 0.25;  // simulator noise for the resource-limited pivot
  std::size_t jobs = 1;

  void validate() const;  // CefeError(Config) on violation
};

struct LabelSkip {
  std::string essay_id;
  std::string pivot_lang;
  std::string reason;

  bool operator==(const LabelSkip&) const = default;
};

struct LabelReport {
  std::size_t input_essays = 0;
  std::size_t produced = 0;
  std::map<FluencyLabel, std::size_t> histogram;
  std::vector<LabelSkip> skipped;

  nlohmann::json to_json() const;
};

struct LabelResult {
  Dataset dataset;  // Essays kind, every record labeled
  LabelReport report;
};

// Mints three labeled essays per input: the original as Excellent, the
// rich-pivot round trip as Moderate, and the limited-pivot round trip as
// Failing. Round-trip text is re-segmented into fresh sentences; round trips
// that come back blank are skipped and reported. With cfg.jobs > 1 essays
// are processed concurrently and merged back in input order.
LabelResult label_corpus(const std::vector<Essay>& essays,
                         const BacktransConfig& cfg, RoundTripper& rt);

}  // namespace cefe::backtrans
