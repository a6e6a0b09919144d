// cefe command line entry point.  Subcommand wiring lives in this file;
// all real work is delegated to the cefe library so behaviour stays
// testable without spawning processes.
#include <CLI11.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cefe/backtranslate.hpp"
#include "cefe/dataset.hpp"
#include "cefe/errors.hpp"
#include "cefe/fusion.hpp"
#include "cefe/injection.hpp"
#include "cefe/metrics.hpp"
#include "cefe/model.hpp"
#include "cefe/nsp.hpp"
#include "cefe/pairs.hpp"
#include "cefe/rng.hpp"
#include "cefe/segment.hpp"
#include "cefe/types.hpp"

namespace {

using nlohmann::json;
using namespace cefe;

// ---------------------------------------------------------------------------
// Config file support: a JSON file selected with --config supplies defaults;
// explicitly passed flags always win. Sections are named after subcommands;
// "seed" and "jobs" may also sit at the top level as global fallbacks.
// ---------------------------------------------------------------------------

struct FileConfig {
  json root = json::object();

  json section(const std::string& name) const {
    if (root.contains(name) && root[name].is_object()) return root[name];
    return json::object();
  }
};

FileConfig load_file_config(const std::string& path) {
  FileConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) {
    throw CefeError(ErrorCode::Io, "cannot open config file '" + path + "'");
  }
  json parsed = json::parse(in, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw CefeError(ErrorCode::Config,
                    "config file '" + path + "' is not a JSON object");
  }
  cfg.root = std::move(parsed);
  return cfg;
}

// Applies a config-file value unless the flag was given on the command line.
template <typename T>
void apply(const CLI::App& cmd, const char* flag, const json& section,
           const char* key, T& value) {
  if (cmd.count(flag) > 0) return;
  if (!section.contains(key)) return;
  try {
    value = section[key].get<T>();
  } catch (const json::exception&) {
    throw CefeError(ErrorCode::Config,
                    std::string("config key '") + key + "' has the wrong type");
  }
}

// seed/jobs fall back to the top-level config when the section lacks them.
template <typename T>
void apply_global(const CLI::App& cmd, const char* flag, const FileConfig& file,
                  const json& section, const char* key, T& value) {
  if (cmd.count(flag) > 0) return;
  if (section.contains(key)) {
    apply(cmd, flag, section, key, value);
  } else {
    apply(cmd, flag, file.root, key, value);
  }
}

// ---------------------------------------------------------------------------
// Small shared helpers
// ---------------------------------------------------------------------------

void write_json_file(const std::filesystem::path& path, const json& value) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw CefeError(ErrorCode::Io, "cannot write '" + path.string() + "'");
  }
  out << value.dump(2) << '\n';
}

std::string require_string(const json& record, const char* key, std::size_t index) {
  if (!record.contains(key) || !record[key].is_string()) {
    throw CefeError(ErrorCode::Schema, "record " + std::to_string(index + 1) +
                                           " needs a string '" + key + "'");
  }
  return record[key].get<std::string>();
}

std::vector<Sentence> rows_to_sentences(const Dataset& rows) {
  std::vector<Sentence> out;
  out.reserve(rows.items.size());
  for (std::size_t i = 0; i < rows.items.size(); ++i) {
    out.push_back({require_string(rows.items[i], "id", i),
                   require_string(rows.items[i], "text", i)});
  }
  return out;
}

std::vector<Essay> load_essays(const std::string& path) {
  Dataset dataset = load_dataset(path, DatasetKind::Essays);
  std::vector<Essay> essays;
  essays.reserve(dataset.items.size());
  for (const json& record : dataset.items) essays.push_back(essay_from_json(record));
  return essays;
}

// Accepts an integer class index or a fluency name; fluency names force k=3.
int parse_label(const json& value, std::size_t index, bool& saw_fluency) {
  if (value.is_number_integer()) {
    int label = value.get<int>();
    if (label < 0) {
      throw CefeError(ErrorCode::Schema, "record " + std::to_string(index + 1) +
                                             " has a negative label");
    }
    return label;
  }
  if (value.is_string()) {
    saw_fluency = true;
    return static_cast<int>(fluency_from_string(value.get<std::string>()));
  }
  throw CefeError(ErrorCode::Schema, "record " + std::to_string(index + 1) +
                                         " needs an integer or fluency-name label");
}

json label_to_json(int label, int k) {
  if (k == kNumFluencyClasses) {
    return json(to_string(static_cast<FluencyLabel>(label)));
  }
  return json(label);
}

// Training/prediction rows carry text under "text" (chunk output) or
// "text_a" (pair-builder output).
std::string row_text(const json& record, std::size_t index) {
  if (record.contains("text") && record["text"].is_string()) {
    return record["text"].get<std::string>();
  }
  if (record.contains("text_a") && record["text_a"].is_string()) {
    return record["text_a"].get<std::string>();
  }
  throw CefeError(ErrorCode::Schema, "record " + std::to_string(index + 1) +
                                         " needs a string 'text' or 'text_a'");
}

std::size_t generic_argmax(const std::vector<double>& probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;  // ties keep the lower index
  }
  return best;
}

// ---------------------------------------------------------------------------
// inject
// ---------------------------------------------------------------------------

struct InjectArgs {
  std::string in, out, report, config;
  double p = 0.2;
  int max_errors = 4;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::vector<std::string> weights;
};

std::map<inject::ErrorCategory, double> parse_weights(
    const std::vector<std::string>& entries) {
  std::map<inject::ErrorCategory, double> weights;
  for (const std::string& entry : entries) {
    std::size_t eq = entry.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == entry.size()) {
      throw CefeError(ErrorCode::Usage,
                      "--weight expects category=value, got '" + entry + "'");
    }
    inject::ErrorCategory category =
        inject::category_from_string(entry.substr(0, eq));
    try {
      weights[category] = std::stod(entry.substr(eq + 1));
    } catch (const std::exception&) {
      throw CefeError(ErrorCode::Usage,
                      "--weight expects a numeric value, got '" + entry + "'");
    }
  }
  return weights;
}

int run_inject(const InjectArgs& args) {
  inject::CascadeConfig cfg;
  cfg.p = args.p;
  cfg.max_errors = args.max_errors;
  cfg.seed = args.seed;
  cfg.category_weights = parse_weights(args.weights);

  Dataset input = load_dataset(args.in, DatasetKind::Rows);
  std::vector<Sentence> corpus = rows_to_sentences(input);
  inject::InjectionResult result = inject::generate_multi_error(corpus, cfg, args.jobs);

  Dataset output;
  output.kind = DatasetKind::Rows;
  for (const inject::InjectedSentence& item : result.items) {
    output.items.push_back(inject::injected_to_json(item));
  }
  save_dataset(output, args.out);

  json weights_json = json::object();
  for (const auto& [category, weight] : cfg.category_weights) {
    weights_json[inject::to_string(category)] = weight;
  }
  json report{{"command", "inject"},
              {"config",
               {{"in", args.in},
                {"out", args.out},
                {"p", cfg.p},
                {"max_errors", cfg.max_errors},
                {"seed", cfg.seed},
                {"jobs", args.jobs},
                {"category_weights", std::move(weights_json)}}},
              {"report", result.report.to_json()}};
  if (!args.report.empty()) write_json_file(args.report, report);
  std::printf("%s\n", report["report"].dump().c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// pairs
// ---------------------------------------------------------------------------

struct PairsArgs {
  std::string strategy = "wrong-correct";
  std::string target = "misorder";
  std::string in, out, report, config;
  std::uint64_t seed = 0;
};

int run_pairs(const PairsArgs& args) {
  FineError fine = fine_from_string(args.target);
  pairs::PairStrategy strategy = pairs::strategy_from_string(args.strategy);

  pairs::PairBuildResult result;
  if (strategy == pairs::PairStrategy::WrongCorrect) {
    Dataset input = load_dataset(args.in, DatasetKind::CorrectionPairs);
    std::vector<pairs::CorrectionPair> correction_pairs;
    correction_pairs.reserve(input.items.size());
    for (std::size_t i = 0; i < input.items.size(); ++i) {
      const json& record = input.items[i];
      correction_pairs.push_back({require_string(record, "id", i),
                                  require_string(record, "source", i),
                                  require_string(record, "target", i)});
    }
    result = pairs::build_wrong_correct(correction_pairs, fine);
  } else {
    Dataset input = load_dataset(args.in, DatasetKind::LabeledSentences);
    pairs::SentencePools pools = pairs::split_pools(input, fine);
    Rng rng(hash_combine(args.seed, fnv1a64("pairs")));
    result = pairs::build_variant_error(pools.target, pools.others, fine, rng);
  }

  Dataset output;
  output.kind = DatasetKind::Rows;
  for (const pairs::PairExample& example : result.examples) {
    output.items.push_back(pairs::pair_to_json(example));
  }
  save_dataset(output, args.out);

  json report{{"command", "pairs"},
              {"config",
               {{"in", args.in},
                {"out", args.out},
                {"strategy", args.strategy},
                {"target", args.target},
                {"seed", args.seed}}},
              {"report", result.report.to_json()}};
  if (!args.report.empty()) write_json_file(args.report, report);
  std::printf("%s\n", report["report"].dump().c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// backtranslate (provider construction shared with pipeline)
// ---------------------------------------------------------------------------

struct ProviderArgs {
  std::string provider = "sim";
  std::string rich = "en";
  std::string limit = "ja";
  double rich_rate = 0.05;
  double limit_rate = 0.25;
  std::uint64_t seed = 0;
  std::string cache;       // warm-start cache file (required for provider=cache)
  std::string save_cache;  // persist the cache here afterwards
  std::string endpoint;
  std::string http_path = "/translate";
  std::string auth_header = "Authorization";
  int timeout_ms = 5000;
  int retries = 2;
};

std::unique_ptr<backtrans::Translator> make_translator(const ProviderArgs& args) {
  if (args.provider == "sim") {
    return std::make_unique<backtrans::SimTranslator>(
        std::map<std::string, double>{{args.rich, args.rich_rate},
                                      {args.limit, args.limit_rate}},
        args.seed);
  }
  if (args.provider == "http") {
    backtrans::HttpConfig cfg;
    cfg.base_url = args.endpoint;
    cfg.path = args.http_path;
    cfg.auth_header = args.auth_header;
    if (const char* token = std::getenv("CEFE_HTTP_TOKEN")) cfg.auth_token = token;
    cfg.timeout_ms = args.timeout_ms;
    cfg.retries = args.retries;
    return std::make_unique<backtrans::HttpTranslator>(cfg);
  }
  if (args.provider == "cache") {
    if (args.cache.empty()) {
      throw CefeError(ErrorCode::Config,
                      "provider 'cache' requires --cache <records.jsonl>");
    }
    Dataset rows = load_dataset(args.cache, DatasetKind::Rows);
    std::vector<backtrans::TranslationRecord> records;
    records.reserve(rows.items.size());
    for (const json& record : rows.items) {
      records.push_back(backtrans::record_from_json(record));
    }
    return std::make_unique<backtrans::CacheReplayTranslator>(std::move(records));
  }
  throw CefeError(ErrorCode::Usage, "unknown provider '" + args.provider + "'");
}

json provider_config_json(const ProviderArgs& args, std::size_t jobs) {
  json cfg{{"provider", args.provider}, {"rich", args.rich},
           {"limit", args.limit},       {"rich_rate", args.rich_rate},
           {"limit_rate", args.limit_rate}, {"seed", args.seed},
           {"jobs", jobs}};
  if (!args.cache.empty()) cfg["cache"] = args.cache;
  if (args.provider == "http") {
    cfg["endpoint"] = args.endpoint;
    cfg["http_path"] = args.http_path;
    cfg["auth_header"] = args.auth_header;
    cfg["timeout_ms"] = args.timeout_ms;
    cfg["retries"] = args.retries;
  }
  return cfg;
}

struct BacktranslateArgs {
  std::string in, out, report, config;
  ProviderArgs provider;
  std::size_t jobs = 1;
};

int run_backtranslate(const BacktranslateArgs& args) {
  backtrans::BacktransConfig cfg;
  cfg.lang_rich = args.provider.rich;
  cfg.lang_limit = args.provider.limit;
  cfg.rich_rate = args.provider.rich_rate;
  cfg.limit_rate = args.provider.limit_rate;
  cfg.jobs = args.jobs;

  std::unique_ptr<backtrans::Translator> translator = make_translator(args.provider);
  backtrans::RoundTripper rt(*translator);
  if (!args.provider.cache.empty() && args.provider.provider != "cache") {
    rt.load_cache(args.provider.cache);
  }

  std::vector<Essay> essays = load_essays(args.in);
  backtrans::LabelResult result = backtrans::label_corpus(essays, cfg, rt);
  save_dataset(result.dataset, args.out);
  if (!args.provider.save_cache.empty()) rt.save_cache(args.provider.save_cache);

  json config = provider_config_json(args.provider, args.jobs);
  config["in"] = args.in;
  config["out"] = args.out;
  json report{{"command", "backtranslate"},
              {"config", std::move(config)},
              {"report", result.report.to_json()},
              {"provider_calls", rt.provider_calls()}};
  if (!args.report.empty()) write_json_file(args.report, report);
  std::printf("%s\n", report["report"].dump().c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// chunk
// ---------------------------------------------------------------------------

struct ChunkArgs {
  std::string mode = "nsp";
  std::string in, out, config;
};

Dataset chunk_to_rows(const std::vector<Essay>& essays, nsp::GranularityMode mode) {
  Dataset rows;
  rows.kind = DatasetKind::Rows;
  for (const Essay& essay : essays) {
    for (const nsp::InputRow& row : nsp::chunk_essay(essay, mode)) {
      json record{{"id", row.id}, {"essay_id", row.essay_id}, {"text", row.text}};
      if (row.label) record["label"] = to_string(*row.label);
      rows.items.push_back(std::move(record));
    }
  }
  return rows;
}

int run_chunk(const ChunkArgs& args) {
  nsp::GranularityMode mode = nsp::granularity_from_string(args.mode);
  Dataset rows = chunk_to_rows(load_essays(args.in), mode);
  save_dataset(rows, args.out);
  std::printf("{\"rows\":%zu}\n", rows.items.size());
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string in, out, report, init, config;
  double mu = 0.1;
  double beta = 1.0;
  double clamp = -4.0;
  int epochs = 30;
  int batch_size = 32;
  double lr = 0.5;
  std::uint64_t seed = 0;
  bool oversample = false;
  std::size_t dim = model::kDefaultFeatureDim;
  int classes = 0;  // 0 = infer from the data
};

struct LoadedRows {
  std::vector<model::LabeledFeature> data;
  int k = 0;
};

LoadedRows load_training_rows(const std::string& path, std::size_t dim,
                              int classes_override) {
  Dataset rows = load_dataset(path, DatasetKind::Rows);
  LoadedRows out;
  bool saw_fluency = false;
  int max_label = -1;
  std::vector<int> targets;
  targets.reserve(rows.items.size());
  for (std::size_t i = 0; i < rows.items.size(); ++i) {
    const json& record = rows.items[i];
    if (!record.contains("label")) {
      throw CefeError(ErrorCode::Schema,
                      "record " + std::to_string(i + 1) + " has no 'label'");
    }
    int label = parse_label(record["label"], i, saw_fluency);
    max_label = std::max(max_label, label);
    targets.push_back(label);
    out.data.push_back({model::featurize(row_text(record, i), dim), label});
  }
  out.k = classes_override > 0 ? classes_override : max_label + 1;
  if (saw_fluency && classes_override == 0) {
    out.k = std::max(out.k, kNumFluencyClasses);
  }
  if (out.k < 2) out.k = 2;
  return out;
}

json train_config_json(const TrainArgs& args, int k, std::size_t dim) {
  json cfg{{"in", args.in},
           {"out", args.out},
           {"mu", args.mu},
           {"beta", args.beta},
           {"clamp", args.clamp},
           {"epochs", args.epochs},
           {"batch_size", args.batch_size},
           {"lr", args.lr},
           {"seed", args.seed},
           {"oversample", args.oversample},
           {"dim", dim},
           {"classes", k}};
  if (!args.init.empty()) cfg["init"] = args.init;
  return cfg;
}

int run_train(const TrainArgs& args) {
  model::SCEConfig sce;
  sce.mu = args.mu;
  sce.beta = args.beta;
  sce.clamp_a = args.clamp;

  model::TrainConfig tc;
  tc.epochs = args.epochs;
  tc.batch_size = args.batch_size;
  tc.learning_rate = args.lr;
  tc.seed = args.seed;
  tc.oversample = args.oversample;

  model::TrainResult result;
  int k = 0;
  std::size_t dim = 0;
  std::size_t n_examples = 0;
  if (!args.init.empty()) {
    model::Checkpoint warm = model::load_checkpoint(args.init);
    if (args.classes > 0 && args.classes != warm.model.k) {
      throw CefeError(ErrorCode::Config, "--classes conflicts with the warm start");
    }
    k = warm.model.k;
    dim = warm.model.dim;
    LoadedRows rows = load_training_rows(args.in, dim, k);
    n_examples = rows.data.size();
    result = model::train(std::move(warm.model), rows.data, tc, sce);
  } else {
    LoadedRows rows = load_training_rows(args.in, args.dim, args.classes);
    k = rows.k;
    dim = args.dim;
    n_examples = rows.data.size();
    result = model::train(rows.data, k, tc, sce);
  }

  model::save_checkpoint({result.model, sce, args.seed}, args.out);

  json report{{"command", "train"},
              {"config", train_config_json(args, k, dim)},
              {"examples", n_examples},
              {"loss_trace", result.loss_trace}};
  if (!args.report.empty()) write_json_file(args.report, report);
  std::printf("{\"final_loss\":%s}\n",
              json(result.loss_trace.back()).dump().c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string model, in, out, config;
  bool by_essay = false;
  std::string agg = "mean";
};

int run_predict(const PredictArgs& args) {
  model::Checkpoint ckpt = model::load_checkpoint(args.model);
  Dataset rows = load_dataset(args.in, DatasetKind::Rows);
  nsp::AggregateMode agg_mode = args.agg == "vote" ? nsp::AggregateMode::MajorityVote
                                                   : nsp::AggregateMode::MeanProb;

  Dataset output;
  output.kind = DatasetKind::Rows;
  std::vector<std::string> essay_order;
  std::map<std::string, std::vector<ProbDist>> grouped;

  for (std::size_t i = 0; i < rows.items.size(); ++i) {
    const json& record = rows.items[i];
    std::string id = require_string(record, "id", i);
    ProbDist dist =
        model::predict(ckpt.model, model::featurize(row_text(record, i), ckpt.model.dim));
    if (args.by_essay) {
      std::string essay_id = record.contains("essay_id") && record["essay_id"].is_string()
                                 ? record["essay_id"].get<std::string>()
                                 : id;
      if (grouped.find(essay_id) == grouped.end()) essay_order.push_back(essay_id);
      grouped[essay_id].push_back(std::move(dist));
      continue;
    }
    int label = static_cast<int>(generic_argmax(dist.probs));
    output.items.push_back(json{{"id", id},
                                {"probs", dist.probs},
                                {"label", label_to_json(label, ckpt.model.k)}});
  }

  if (args.by_essay) {
    for (const std::string& essay_id : essay_order) {
      ProbDist combined = nsp::aggregate(grouped[essay_id], agg_mode);
      int label = static_cast<int>(generic_argmax(combined.probs));
      output.items.push_back(json{{"id", essay_id},
                                  {"rows", grouped[essay_id].size()},
                                  {"probs", combined.probs},
                                  {"label", label_to_json(label, ckpt.model.k)}});
    }
  }
  save_dataset(output, args.out);
  std::printf("{\"predictions\":%zu}\n", output.items.size());
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string task;
  std::string pred, gold, report, config;
  std::vector<std::string> weight_specs;
  std::map<std::string, double> weights;  // empty → task defaults
};

std::map<std::string, double> parse_metric_weights(
    const std::vector<std::string>& entries) {
  std::map<std::string, double> weights;
  for (const std::string& entry : entries) {
    std::size_t eq = entry.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == entry.size()) {
      throw CefeError(ErrorCode::Usage,
                      "--weight expects metric=value, got '" + entry + "'");
    }
    try {
      weights[entry.substr(0, eq)] = std::stod(entry.substr(eq + 1));
    } catch (const std::exception&) {
      throw CefeError(ErrorCode::Usage,
                      "--weight expects a numeric value, got '" + entry + "'");
    }
  }
  return weights;
}

json metric_report_to_json(const metrics::MetricReport& report) {
  json values = json::object();
  for (const auto& [name, value] : report.values) values[name] = value;
  json out{{"values", std::move(values)}, {"flags", report.flags}};
  if (report.avg_score) out["avg_score"] = *report.avg_score;
  json weights = json::object();
  for (const auto& [name, weight] : report.weights_used) weights[name] = weight;
  out["weights_used"] = std::move(weights);
  return out;
}

json evaluate_classify(const EvaluateArgs& args) {
  Dataset pred = load_dataset(args.pred, DatasetKind::Rows);
  // Gold may be flat rows {id,label} or full labeled essays.
  Dataset gold;
  try {
    gold = load_dataset(args.gold, DatasetKind::Rows);
  } catch (const CefeError&) {
    gold = load_dataset(args.gold, DatasetKind::Essays);
  }

  bool saw_fluency = false;
  std::map<std::string, int> gold_labels;
  for (std::size_t i = 0; i < gold.items.size(); ++i) {
    const json& record = gold.items[i];
    if (record.contains("sentences")) {
      Essay essay = essay_from_json(record);
      if (!essay.label) {
        throw CefeError(ErrorCode::Schema,
                        "gold essay '" + essay.id + "' has no label");
      }
      gold_labels[essay.id] = static_cast<int>(*essay.label);
      saw_fluency = true;
      continue;
    }
    if (!record.contains("label")) {
      throw CefeError(ErrorCode::Schema,
                      "gold record " + std::to_string(i + 1) + " has no 'label'");
    }
    gold_labels[require_string(record, "id", i)] =
        parse_label(record["label"], i, saw_fluency);
  }

  std::vector<int> y_true;
  std::vector<int> y_pred;
  int max_label = -1;
  for (std::size_t i = 0; i < pred.items.size(); ++i) {
    const json& record = pred.items[i];
    std::string id = require_string(record, "id", i);
    if (!record.contains("label")) {
      throw CefeError(ErrorCode::Schema,
                      "prediction " + std::to_string(i + 1) + " has no 'label'");
    }
    auto it = gold_labels.find(id);
    if (it == gold_labels.end()) {
      throw CefeError(ErrorCode::Alignment, "no gold label for id '" + id + "'");
    }
    y_pred.push_back(parse_label(record["label"], i, saw_fluency));
    y_true.push_back(it->second);
    max_label = std::max({max_label, y_pred.back(), y_true.back()});
  }
  if (y_true.empty()) {
    throw CefeError(ErrorCode::EmptyInput, "no predictions to evaluate");
  }

  int k = max_label + 1;
  if (saw_fluency) k = std::max(k, kNumFluencyClasses);
  if (k < 2) k = 2;

  metrics::ConfusionMatrix cm =
      metrics::ConfusionMatrix::from_labels(y_true, y_pred, k);
  metrics::Prf micro = metrics::micro_f1(cm);
  metrics::Prf macro = metrics::macro_f1(cm);
  metrics::QwkResult kappa = metrics::qwk(y_true, y_pred, k);

  metrics::MetricReport report;
  report.values = {{"acc", metrics::accuracy(cm)},
                   {"f1", micro.f1},
                   {"macro_f1", macro.f1},
                   {"qwk", kappa.value}};
  if (micro.flagged) report.flags.push_back("f1: zero denominator pinned");
  if (macro.flagged) report.flags.push_back("macro_f1: zero-support class");
  if (kappa.degenerate) report.flags.push_back("qwk: degenerate, pinned to 1");
  report.weights_used =
      args.weights.empty() ? metrics::default_classify_weights() : args.weights;
  report.avg_score =
      metrics::avg_score(report, report.weights_used, metrics::default_directions());

  json out = metric_report_to_json(report);
  out["n"] = y_true.size();
  out["classes"] = k;
  return out;
}

json evaluate_correct(const EvaluateArgs& args) {
  Dataset pred = load_dataset(args.pred, DatasetKind::Rows);
  Dataset gold = load_dataset(args.gold, DatasetKind::CorrectionPairs);

  struct GoldPair {
    std::string source;
    std::string target;
  };
  std::map<std::string, GoldPair> gold_pairs;
  for (std::size_t i = 0; i < gold.items.size(); ++i) {
    const json& record = gold.items[i];
    gold_pairs[require_string(record, "id", i)] = {
        require_string(record, "source", i), require_string(record, "target", i)};
  }

  std::size_t n = 0;
  double em_sum = 0.0;
  double leven_sum = 0.0;
  metrics::BleuStats bleu_total;
  metrics::EditCounts edit_total;
  for (std::size_t i = 0; i < pred.items.size(); ++i) {
    const json& record = pred.items[i];
    std::string id = require_string(record, "id", i);
    std::string hyp = row_text(record, i);
    auto it = gold_pairs.find(id);
    if (it == gold_pairs.end()) {
      throw CefeError(ErrorCode::Alignment, "no gold pair for id '" + id + "'");
    }
    em_sum += metrics::exact_match(hyp, it->second.target);
    leven_sum += static_cast<double>(metrics::levenshtein(hyp, it->second.target));
    bleu_total += metrics::bleu_stats(hyp, {it->second.target});
    edit_total += metrics::edit_counts(it->second.source, hyp, it->second.target);
    ++n;
  }
  if (n == 0) throw CefeError(ErrorCode::EmptyInput, "no predictions to evaluate");

  metrics::EditF05 f05 = metrics::f05_from_counts(edit_total);
  metrics::MetricReport report;
  report.values = {{"em", em_sum / static_cast<double>(n)},
                   {"bleu", metrics::bleu_score(bleu_total)},
                   {"f0.5", f05.f05},
                   {"precision", f05.precision},
                   {"recall", f05.recall},
                   {"leven", leven_sum / static_cast<double>(n)}};
  if (f05.flagged) report.flags.push_back("f0.5: empty edit set pinned");
  report.weights_used =
      args.weights.empty() ? metrics::default_correct_weights() : args.weights;
  report.avg_score =
      metrics::avg_score(report, report.weights_used, metrics::default_directions());

  json out = metric_report_to_json(report);
  out["n"] = n;
  return out;
}

int run_evaluate(const EvaluateArgs& args) {
  json metrics_json =
      args.task == "classify" ? evaluate_classify(args) : evaluate_correct(args);
  json weights = json::object();
  for (const auto& [name, weight] : args.weights) weights[name] = weight;
  json report{{"command", "evaluate"},
              {"config",
               {{"task", args.task},
                {"pred", args.pred},
                {"gold", args.gold},
                {"weights", std::move(weights)}}},
              {"metrics", std::move(metrics_json)}};
  if (!args.report.empty()) write_json_file(args.report, report);
  std::printf("%s\n", report["metrics"].dump().c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// fuse
// ---------------------------------------------------------------------------

struct FuseArgs {
  std::string coarse, fine, out, report, config;
  double coarse_th = 0.5;
  double fine_th = 0.5;
  bool no_gate = false;
  std::string misorder_parent;
};

int run_fuse(const FuseArgs& args) {
  fusion::FusionConfig cfg;
  cfg.coarse_threshold = args.coarse_th;
  cfg.fine_threshold = args.fine_th;
  cfg.fine_requires_coarse = !args.no_gate;
  if (!args.misorder_parent.empty()) {
    cfg.mapping.misorder_parent = coarse_from_string(args.misorder_parent);
  }

  Dataset coarse_rows = load_dataset(args.coarse, DatasetKind::Rows);
  Dataset fine_rows = load_dataset(args.fine, DatasetKind::Rows);
  std::vector<fusion::CoarsePrediction> coarse;
  coarse.reserve(coarse_rows.items.size());
  for (const json& record : coarse_rows.items) {
    coarse.push_back(fusion::coarse_from_json(record));
  }
  std::vector<fusion::FinePrediction> fine;
  fine.reserve(fine_rows.items.size());
  for (const json& record : fine_rows.items) {
    fine.push_back(fusion::fine_from_json(record));
  }

  fusion::FuseCorpusResult result = fusion::fuse_corpus(coarse, fine, cfg);
  save_dataset(result.dataset, args.out);

  json report{{"command", "fuse"},
              {"config",
               {{"coarse", args.coarse},
                {"fine", args.fine},
                {"out", args.out},
                {"coarse_threshold", cfg.coarse_threshold},
                {"fine_threshold", cfg.fine_threshold},
                {"fine_requires_coarse", cfg.fine_requires_coarse},
                {"misorder_parent", args.misorder_parent}}},
              {"summary", result.summary_json()}};
  if (!args.report.empty()) write_json_file(args.report, report);
  std::printf("%s\n", report["summary"].dump().c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

struct GradcheckArgs {
  std::string report, config;
  int trials = 100;
  std::uint64_t seed = 20260401;
  double tol = 1e-5;
};

int run_gradcheck(const GradcheckArgs& args) {
  model::GradCheckReport result = model::gradcheck(args.trials, args.seed, args.tol);
  json report{{"command", "gradcheck"},
              {"config", {{"trials", args.trials}, {"seed", args.seed}, {"tol", args.tol}}},
              {"max_rel_err", result.max_rel_err},
              {"passed", result.passed}};
  if (!args.report.empty()) write_json_file(args.report, report);
  std::printf("%s\n", report.dump().c_str());
  return result.passed ? 0 : 1;
}

// ---------------------------------------------------------------------------
// pipeline track3
// ---------------------------------------------------------------------------

struct PipelineArgs {
  std::string in, finetune, eval, workdir, report, config;
  std::string mode = "nsp";
  ProviderArgs provider;
  std::size_t jobs = 1;
  double mu = 0.1;
  double beta = 1.0;
  double clamp = -4.0;
  int epochs = 30;
  int batch_size = 32;
  double lr = 0.5;
  std::size_t dim = model::kDefaultFeatureDim;
  bool oversample = false;
};

std::vector<model::LabeledFeature> rows_to_labeled_features(const Dataset& rows,
                                                            std::size_t dim) {
  std::vector<model::LabeledFeature> data;
  data.reserve(rows.items.size());
  bool saw_fluency = false;
  for (std::size_t i = 0; i < rows.items.size(); ++i) {
    const json& record = rows.items[i];
    if (!record.contains("label")) {
      throw CefeError(ErrorCode::Schema,
                      "row " + std::to_string(i + 1) + " has no 'label'");
    }
    data.push_back({model::featurize(row_text(record, i), dim),
                    parse_label(record["label"], i, saw_fluency)});
  }
  return data;
}

int run_pipeline_track3(const PipelineArgs& args) {
  namespace fs = std::filesystem;
  fs::create_directories(args.workdir);
  const fs::path workdir(args.workdir);

  model::SCEConfig sce;
  sce.mu = args.mu;
  sce.beta = args.beta;
  sce.clamp_a = args.clamp;
  model::TrainConfig tc;
  tc.epochs = args.epochs;
  tc.batch_size = args.batch_size;
  tc.learning_rate = args.lr;
  tc.oversample = args.oversample;

  // Stage 1: back-translation labeling of the seed corpus.
  backtrans::BacktransConfig bt_cfg;
  bt_cfg.lang_rich = args.provider.rich;
  bt_cfg.lang_limit = args.provider.limit;
  bt_cfg.rich_rate = args.provider.rich_rate;
  bt_cfg.limit_rate = args.provider.limit_rate;
  bt_cfg.jobs = args.jobs;
  std::unique_ptr<backtrans::Translator> translator = make_translator(args.provider);
  backtrans::RoundTripper rt(*translator);
  if (!args.provider.cache.empty() && args.provider.provider != "cache") {
    rt.load_cache(args.provider.cache);
  }
  backtrans::LabelResult labeled =
      backtrans::label_corpus(load_essays(args.in), bt_cfg, rt);
  save_dataset(labeled.dataset, workdir / "pseudo.jsonl");
  if (!args.provider.save_cache.empty()) rt.save_cache(args.provider.save_cache);

  // Stage 2: chunk the pseudo corpus at the chosen granularity.
  nsp::GranularityMode mode = nsp::granularity_from_string(args.mode);
  std::vector<Essay> pseudo_essays;
  pseudo_essays.reserve(labeled.dataset.items.size());
  for (const json& record : labeled.dataset.items) {
    pseudo_essays.push_back(essay_from_json(record));
  }
  Dataset pretrain_rows = chunk_to_rows(pseudo_essays, mode);
  save_dataset(pretrain_rows, workdir / "pretrain.jsonl");

  // Stage 3: pretrain on the pseudo rows.
  std::vector<model::LabeledFeature> pretrain_data =
      rows_to_labeled_features(pretrain_rows, args.dim);
  model::TrainConfig pre_tc = tc;
  pre_tc.seed = hash_combine(args.provider.seed, fnv1a64("pretrain"));
  model::TrainResult pre =
      model::train(pretrain_data, kNumFluencyClasses, pre_tc, sce);
  model::save_checkpoint({pre.model, sce, pre_tc.seed}, workdir / "pretrain.ckpt");

  // Stage 4: fine-tune, warm-starting from the pretrained weights.
  Dataset finetune_rows = pretrain_rows;
  if (!args.finetune.empty()) {
    finetune_rows = chunk_to_rows(load_essays(args.finetune), mode);
    save_dataset(finetune_rows, workdir / "finetune.jsonl");
  }
  std::vector<model::LabeledFeature> finetune_data =
      rows_to_labeled_features(finetune_rows, args.dim);
  model::TrainConfig fine_tc = tc;
  fine_tc.seed = hash_combine(args.provider.seed, fnv1a64("finetune"));
  model::TrainResult fine = model::train(pre.model, finetune_data, fine_tc, sce);
  model::save_checkpoint({fine.model, sce, fine_tc.seed}, workdir / "model.ckpt");

  json config = provider_config_json(args.provider, args.jobs);
  config["in"] = args.in;
  config["workdir"] = args.workdir;
  config["mode"] = args.mode;
  config["mu"] = args.mu;
  config["beta"] = args.beta;
  config["clamp"] = args.clamp;
  config["epochs"] = args.epochs;
  config["batch_size"] = args.batch_size;
  config["lr"] = args.lr;
  config["dim"] = args.dim;
  config["oversample"] = args.oversample;
  if (!args.finetune.empty()) config["finetune"] = args.finetune;
  if (!args.eval.empty()) config["eval"] = args.eval;

  json report{{"command", "pipeline track3"},
              {"config", std::move(config)},
              {"backtranslate",
               {{"report", labeled.report.to_json()},
                {"provider_calls", rt.provider_calls()}}},
              {"pretrain",
               {{"examples", pretrain_data.size()}, {"loss_trace", pre.loss_trace}}},
              {"finetune",
               {{"examples", finetune_data.size()}, {"loss_trace", fine.loss_trace}}}};

  // Stage 5 + 6: predict per held-out essay, then score against gold labels.
  if (!args.eval.empty()) {
    std::vector<Essay> eval_essays = load_essays(args.eval);
    Dataset predictions;
    predictions.kind = DatasetKind::Rows;
    std::vector<int> y_true;
    std::vector<int> y_pred;
    for (const Essay& essay : eval_essays) {
      if (!essay.label) {
        throw CefeError(ErrorCode::Schema,
                        "eval essay '" + essay.id + "' has no gold label");
      }
      std::vector<ProbDist> dists;
      for (const nsp::InputRow& row : nsp::chunk_essay(essay, mode)) {
        dists.push_back(
            model::predict(fine.model, model::featurize(row.text, args.dim)));
      }
      FluencyLabel decided = nsp::decide(nsp::aggregate(dists));
      predictions.items.push_back(json{{"id", essay.id},
                                       {"label", to_string(decided)},
                                       {"gold", to_string(*essay.label)}});
      y_true.push_back(static_cast<int>(*essay.label));
      y_pred.push_back(static_cast<int>(decided));
    }
    save_dataset(predictions, workdir / "predictions.jsonl");

    metrics::ConfusionMatrix cm =
        metrics::ConfusionMatrix::from_labels(y_true, y_pred, kNumFluencyClasses);
    metrics::Prf micro = metrics::micro_f1(cm);
    metrics::Prf macro = metrics::macro_f1(cm);
    metrics::QwkResult kappa = metrics::qwk(y_true, y_pred, kNumFluencyClasses);
    metrics::MetricReport metric_report;
    metric_report.values = {{"acc", metrics::accuracy(cm)},
                            {"f1", micro.f1},
                            {"macro_f1", macro.f1},
                            {"qwk", kappa.value}};
    metric_report.weights_used = metrics::default_classify_weights();
    metric_report.avg_score = metrics::avg_score(
        metric_report, metric_report.weights_used, metrics::default_directions());
    json eval_json = metric_report_to_json(metric_report);
    eval_json["n"] = y_true.size();
    report["evaluate"] = std::move(eval_json);
  }

  std::string report_path =
      args.report.empty() ? (workdir / "report.json").string() : args.report;
  write_json_file(report_path, report);
  if (report.contains("evaluate")) {
    std::printf("{\"accuracy\":%s}\n",
                json(report["evaluate"]["values"]["acc"]).dump().c_str());
  } else {
    std::printf("{\"report\":%s}\n", json(report_path).dump().c_str());
  }
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// main: flag wiring
// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{"cefe: Chinese essay fluency evaluation toolkit"};
  app.require_subcommand(1);
  int exit_code = 0;

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file with per-command sections");

  // --- inject ---
  InjectArgs inject_args;
  CLI::App* inject_cmd =
      app.add_subcommand("inject", "Corrupt sentences with the multi-error cascade");
  inject_cmd->add_option("--in", inject_args.in, "Input sentences JSONL {id,text}")
      ->required();
  inject_cmd->add_option("--out", inject_args.out, "Output corrupted JSONL")->required();
  inject_cmd->add_option("--report", inject_args.report, "Write a JSON report here");
  inject_cmd->add_option("--p", inject_args.p, "Per-step error probability");
  inject_cmd->add_option("--max-errors", inject_args.max_errors, "Cascade depth");
  inject_cmd->add_option("--seed", inject_args.seed, "RNG seed");
  inject_cmd->add_option("--jobs", inject_args.jobs, "Worker threads");
  inject_cmd->add_option("--weight", inject_args.weights,
                         "Category weight as name=value (repeatable)");
  inject_cmd->callback([&] {
    FileConfig file = load_file_config(config_path);
    json section = file.section("inject");
    apply(*inject_cmd, "--p", section, "p", inject_args.p);
    apply(*inject_cmd, "--max-errors", section, "max_errors", inject_args.max_errors);
    apply_global(*inject_cmd, "--seed", file, section, "seed", inject_args.seed);
    apply_global(*inject_cmd, "--jobs", file, section, "jobs", inject_args.jobs);
    exit_code = run_inject(inject_args);
  });

  // --- pairs ---
  PairsArgs pairs_args;
  CLI::App* pairs_cmd =
      app.add_subcommand("pairs", "Build binary pair-classification corpora");
  pairs_cmd
      ->add_option("--strategy", pairs_args.strategy, "wrong-correct or variant-error")
      ->check(CLI::IsMember({"wrong-correct", "variant-error"}));
  pairs_cmd->add_option("--target", pairs_args.target,
                        "Fine error type (misorder, redu-other, ...)");
  pairs_cmd->add_option("--in", pairs_args.in, "Input JSONL")->required();
  pairs_cmd->add_option("--out", pairs_args.out, "Output pair rows JSONL")->required();
  pairs_cmd->add_option("--report", pairs_args.report, "Write a JSON report here");
  pairs_cmd->add_option("--seed", pairs_args.seed, "Negative-sampling seed");
  pairs_cmd->callback([&] {
    FileConfig file = load_file_config(config_path);
    json section = file.section("pairs");
    apply(*pairs_cmd, "--strategy", section, "strategy", pairs_args.strategy);
    apply(*pairs_cmd, "--target", section, "target", pairs_args.target);
    apply_global(*pairs_cmd, "--seed", file, section, "seed", pairs_args.seed);
    exit_code = run_pairs(pairs_args);
  });

  // --- backtranslate ---
  BacktranslateArgs bt_args;
  CLI::App* bt_cmd = app.add_subcommand(
      "backtranslate", "Mint fluency-labeled essays via round-trip translation");
  bt_cmd->add_option("--in", bt_args.in, "Input essays JSONL")->required();
  bt_cmd->add_option("--out", bt_args.out, "Output labeled essays JSONL")->required();
  bt_cmd->add_option("--report", bt_args.report, "Write a JSON report here");
  bt_cmd->add_option("--provider", bt_args.provider.provider, "sim, http, or cache")
      ->check(CLI::IsMember({"sim", "http", "cache"}));
  bt_cmd->add_option("--rich", bt_args.provider.rich, "Resource-rich pivot language");
  bt_cmd->add_option("--limit", bt_args.provider.limit,
                     "Resource-limited pivot language");
  bt_cmd->add_option("--rich-rate", bt_args.provider.rich_rate,
                     "Simulator noise for the rich pivot");
  bt_cmd->add_option("--limit-rate", bt_args.provider.limit_rate,
                     "Simulator noise for the limited pivot");
  bt_cmd->add_option("--seed", bt_args.provider.seed, "Simulator seed");
  bt_cmd->add_option("--jobs", bt_args.jobs, "Concurrent essays");
  bt_cmd->add_option("--cache", bt_args.provider.cache, "Translation cache JSONL");
  bt_cmd->add_option("--save-cache", bt_args.provider.save_cache,
                     "Persist the cache here afterwards");
  bt_cmd->add_option("--endpoint", bt_args.provider.endpoint,
                     "HTTP provider base URL");
  bt_cmd->add_option("--http-path", bt_args.provider.http_path, "HTTP provider path");
  bt_cmd->add_option("--auth-header", bt_args.provider.auth_header,
                     "HTTP auth header name (token from CEFE_HTTP_TOKEN)");
  bt_cmd->add_option("--timeout-ms", bt_args.provider.timeout_ms, "HTTP timeout");
  bt_cmd->add_option("--retries", bt_args.provider.retries, "HTTP retry count");
  bt_cmd->callback([&] {
    FileConfig file = load_file_config(config_path);
    json section = file.section("backtranslate");
    apply(*bt_cmd, "--provider", section, "provider", bt_args.provider.provider);
    apply(*bt_cmd, "--rich", section, "rich", bt_args.provider.rich);
    apply(*bt_cmd, "--limit", section, "limit", bt_args.provider.limit);
    apply(*bt_cmd, "--rich-rate", section, "rich_rate", bt_args.provider.rich_rate);
    apply(*bt_cmd, "--limit-rate", section, "limit_rate", bt_args.provider.limit_rate);
    apply(*bt_cmd, "--endpoint", section, "endpoint", bt_args.provider.endpoint);
    apply_global(*bt_cmd, "--seed", file, section, "seed", bt_args.provider.seed);
    apply_global(*bt_cmd, "--jobs", file, section, "jobs", bt_args.jobs);
    exit_code = run_backtranslate(bt_args);
  });

  // --- chunk ---
  ChunkArgs chunk_args;
  CLI::App* chunk_cmd =
      app.add_subcommand("chunk", "Slice essays into classifier input rows");
  chunk_cmd->add_option("--mode", chunk_args.mode, "essay, sentence, or nsp")
      ->check(CLI::IsMember({"essay", "sentence", "nsp"}));
  chunk_cmd->add_option("--in", chunk_args.in, "Input essays JSONL")->required();
  chunk_cmd->add_option("--out", chunk_args.out, "Output rows JSONL")->required();
  chunk_cmd->callback([&] {
    FileConfig file = load_file_config(config_path);
    json section = file.section("chunk");
    apply(*chunk_cmd, "--mode", section, "mode", chunk_args.mode);
    exit_code = run_chunk(chunk_args);
  });

  // --- train ---
  TrainArgs train_args;
  CLI::App* train_cmd =
      app.add_subcommand("train", "Train the softmax classifier with SCE loss");
  train_cmd->add_option("--in", train_args.in, "Training rows JSONL")->required();
  train_cmd->add_option("--out", train_args.out, "Checkpoint output path")->required();
  train_cmd->add_option("--report", train_args.report, "Write a JSON report here");
  train_cmd->add_option("--init", train_args.init, "Warm-start checkpoint");
  train_cmd->add_option("--mu", train_args.mu, "CE weight");
  train_cmd->add_option("--beta", train_args.beta, "RCE weight (0 = plain CE)");
  train_cmd->add_option("--clamp", train_args.clamp, "RCE log-zero clamp A");
  train_cmd->add_option("--epochs", train_args.epochs, "Training epochs");
  train_cmd->add_option("--batch-size", train_args.batch_size, "Minibatch size");
  train_cmd->add_option("--lr", train_args.lr, "Learning rate");
  train_cmd->add_option("--seed", train_args.seed, "Shuffle/oversample seed");
  train_cmd->add_flag("--oversample", train_args.oversample,
                      "Balance classes before training");
  train_cmd->add_option("--dim", train_args.dim, "Feature-hashing dimension");
  train_cmd->add_option("--classes", train_args.classes,
                        "Class count (default: inferred)");
  train_cmd->callback([&] {
    FileConfig file = load_file_config(config_path);
    json section = file.section("train");
    apply(*train_cmd, "--mu", section, "mu", train_args.mu);
    apply(*train_cmd, "--beta", section, "beta", train_args.beta);
    apply(*train_cmd, "--clamp", section, "clamp", train_args.clamp);
    apply(*train_cmd, "--epochs", section, "epochs", train_args.epochs);
    apply(*train_cmd, "--batch-size", section, "batch_size", train_args.batch_size);
    apply(*train_cmd, "--lr", section, "lr", train_args.lr);
    apply(*train_cmd, "--oversample", section, "oversample", train_args.oversample);
    apply(*train_cmd, "--dim", section, "dim", train_args.dim);
    apply(*train_cmd, "--classes", section, "classes", train_args.classes);
    apply_global(*train_cmd, "--seed", file, section, "seed", train_args.seed);
    exit_code = run_train(train_args);
  });

  // --- predict ---
  PredictArgs predict_args;
  CLI::App* predict_cmd =
      app.add_subcommand("predict", "Score rows with a trained checkpoint");
  predict_cmd->add_option("--model", predict_args.model, "Checkpoint path")->required();
  predict_cmd->add_option("--in", predict_args.in, "Input rows JSONL")->required();
  predict_cmd->add_option("--out", predict_args.out, "Predictions JSONL")->required();
  predict_cmd->add_flag("--by-essay", predict_args.by_essay,
                        "Aggregate row distributions per essay_id");
  predict_cmd->add_option("--agg", predict_args.agg, "mean or vote")
      ->check(CLI::IsMember({"mean", "vote"}));
  predict_cmd->callback([&] {
    FileConfig file = load_file_config(config_path);
    json section = file.section("predict");
    apply(*predict_cmd, "--agg", section, "agg", predict_args.agg);
    exit_code = run_predict(predict_args);
  });

  // --- evaluate ---
  EvaluateArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Score predictions against gold");
  eval_cmd->add_option("--task", eval_args.task, "classify or correct")
      ->required()
      ->check(CLI::IsMember({"classify", "correct"}));
  eval_cmd->add_option("--pred", eval_args.pred, "Predictions JSONL")->required();
  eval_cmd->add_option("--gold", eval_args.gold, "Gold JSONL")->required();
  eval_cmd->add_option("--report", eval_args.report, "Write a JSON report here");
  eval_cmd->add_option("--weight", eval_args.weight_specs,
                       "AvgScore weight as metric=value (repeatable; default: "
                       "equal weights over the task's headline metrics)");
  eval_cmd->callback([&] {
    FileConfig file = load_file_config(config_path);
    json section = file.section("evaluate");
    if (eval_cmd->count("--weight") > 0) {
      eval_args.weights = parse_metric_weights(eval_args.weight_specs);
    } else if (section.contains("weights")) {
      const json& table = section["weights"];
      if (!table.is_object()) {
        throw CefeError(ErrorCode::Config,
                        "config key 'evaluate.weights' must be an object");
      }
      for (const auto& [name, value] : table.items()) {
        if (!value.is_number()) {
          throw CefeError(ErrorCode::Config, "config key 'evaluate.weights." +
                                                 name + "' must be a number");
        }
        eval_args.weights[name] = value.get<double>();
      }
    }
    exit_code = run_evaluate(eval_args);
  });

  // --- fuse ---
  FuseArgs fuse_args;
  CLI::App* fuse_cmd =
      app.add_subcommand("fuse", "Merge coarse and fine predictions into labels");
  fuse_cmd->add_option("--coarse", fuse_args.coarse, "Coarse predictions JSONL")
      ->required();
  fuse_cmd->add_option("--fine", fuse_args.fine, "Fine predictions JSONL")->required();
  fuse_cmd->add_option("--out", fuse_args.out, "Fused labels JSONL")->required();
  fuse_cmd->add_option("--report", fuse_args.report, "Write a JSON report here");
  fuse_cmd->add_option("--coarse-th", fuse_args.coarse_th, "Coarse threshold");
  fuse_cmd->add_option("--fine-th", fuse_args.fine_th, "Fine threshold");
  fuse_cmd->add_flag("--no-gate", fuse_args.no_gate,
                     "Drop the fine-requires-coarse gate");
  fuse_cmd->add_option("--misorder-parent", fuse_args.misorder_parent,
                       "Coarse owner for misorder (default: none)");
  fuse_cmd->callback([&] {
    FileConfig file = load_file_config(config_path);
    json section = file.section("fuse");
    apply(*fuse_cmd, "--coarse-th", section, "coarse_threshold", fuse_args.coarse_th);
    apply(*fuse_cmd, "--fine-th", section, "fine_threshold", fuse_args.fine_th);
    apply(*fuse_cmd, "--no-gate", section, "no_gate", fuse_args.no_gate);
    apply(*fuse_cmd, "--misorder-parent", section, "misorder_parent",
          fuse_args.misorder_parent);
    exit_code = run_fuse(fuse_args);
  });

  // --- gradcheck ---
  GradcheckArgs grad_args;
  CLI::App* grad_cmd =
      app.add_subcommand("gradcheck", "Verify SCE gradients with finite differences");
  grad_cmd->add_option("--trials", grad_args.trials, "Random trials");
  grad_cmd->add_option("--seed", grad_args.seed, "RNG seed");
  grad_cmd->add_option("--tol", grad_args.tol, "Relative-error tolerance");
  grad_cmd->add_option("--report", grad_args.report, "Write a JSON report here");
  grad_cmd->callback([&] {
    FileConfig file = load_file_config(config_path);
    json section = file.section("gradcheck");
    apply(*grad_cmd, "--trials", section, "trials", grad_args.trials);
    apply(*grad_cmd, "--tol", section, "tol", grad_args.tol);
    apply_global(*grad_cmd, "--seed", file, section, "seed", grad_args.seed);
    exit_code = run_gradcheck(grad_args);
  });

  // --- pipeline ---
  PipelineArgs pipe_args;
  CLI::App* pipe_cmd = app.add_subcommand("pipeline", "Multi-stage orchestrations");
  pipe_cmd->require_subcommand(1);
  CLI::App* track3 = pipe_cmd->add_subcommand(
      "track3", "backtranslate -> chunk -> pretrain -> finetune -> predict -> evaluate");
  track3->add_option("--in", pipe_args.in, "Seed essays JSONL")->required();
  track3->add_option("--finetune", pipe_args.finetune,
                     "Labeled essays for fine-tuning (default: reuse pseudo rows)");
  track3->add_option("--eval", pipe_args.eval, "Held-out labeled essays to score");
  track3->add_option("--workdir", pipe_args.workdir, "Directory for intermediates")
      ->required();
  track3->add_option("--report", pipe_args.report,
                     "Report path (default: <workdir>/report.json)");
  track3->add_option("--mode", pipe_args.mode, "Chunking granularity")
      ->check(CLI::IsMember({"essay", "sentence", "nsp"}));
  track3->add_option("--provider", pipe_args.provider.provider, "sim, http, or cache")
      ->check(CLI::IsMember({"sim", "http", "cache"}));
  track3->add_option("--rich", pipe_args.provider.rich, "Resource-rich pivot");
  track3->add_option("--limit", pipe_args.provider.limit, "Resource-limited pivot");
  track3->add_option("--rich-rate", pipe_args.provider.rich_rate, "Rich noise rate");
  track3->add_option("--limit-rate", pipe_args.provider.limit_rate,
                     "Limited noise rate");
  track3->add_option("--seed", pipe_args.provider.seed, "Global pipeline seed");
  track3->add_option("--jobs", pipe_args.jobs, "Concurrent essays");
  track3->add_option("--cache", pipe_args.provider.cache, "Translation cache JSONL");
  track3->add_option("--save-cache", pipe_args.provider.save_cache,
                     "Persist the cache here afterwards");
  track3->add_option("--endpoint", pipe_args.provider.endpoint, "HTTP base URL");
  track3->add_option("--mu", pipe_args.mu, "CE weight");
  track3->add_option("--beta", pipe_args.beta, "RCE weight");
  track3->add_option("--clamp", pipe_args.clamp, "RCE clamp A");
  track3->add_option("--epochs", pipe_args.epochs, "Epochs per training stage");
  track3->add_option("--batch-size", pipe_args.batch_size, "Minibatch size");
  track3->add_option("--lr", pipe_args.lr, "Learning rate");
  track3->add_option("--dim", pipe_args.dim, "Feature-hashing dimension");
  track3->add_flag("--oversample", pipe_args.oversample, "Balance classes");
  track3->callback([&] {
    FileConfig file = load_file_config(config_path);
    json section = file.section("pipeline");
    apply(*track3, "--mode", section, "mode", pipe_args.mode);
    apply(*track3, "--provider", section, "provider", pipe_args.provider.provider);
    apply(*track3, "--rich-rate", section, "rich_rate", pipe_args.provider.rich_rate);
    apply(*track3, "--limit-rate", section, "limit_rate",
          pipe_args.provider.limit_rate);
    apply(*track3, "--mu", section, "mu", pipe_args.mu);
    apply(*track3, "--beta", section, "beta", pipe_args.beta);
    apply(*track3, "--epochs", section, "epochs", pipe_args.epochs);
    apply(*track3, "--lr", section, "lr", pipe_args.lr);
    apply(*track3, "--dim", section, "dim", pipe_args.dim);
    apply_global(*track3, "--seed", file, section, "seed", pipe_args.provider.seed);
    apply_global(*track3, "--jobs", file, section, "jobs", pipe_args.jobs);
    exit_code = run_pipeline_track3(pipe_args);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    // Help and version requests exit cleanly; anything else is a usage error.
    return code == 0 ? 0 : 2;
  } catch (const cefe::CefeError& e) {
    std::fprintf(stderr, "{\"error\":\"%s\",\"message\":%s}\n",
                 cefe::to_string(e.code()), json(std::string(e.what())).dump().c_str());
    return cefe::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "{\"error\":\"exception\",\"message\":%s}\n",
                 json(std::string(e.what())).dump().c_str());
    return 1;
  }
  return exit_code;
}
