#include "cefe/dataset.hpp"

#include <fstream>
#include <string>

#include "cefe/errors.hpp"

namespace cefe {

namespace {

using nlohmann::json;

constexpr const char* kHeaderKey = "cefe_schema";
constexpr int kCurrentSchemaVersion = 1;

// line 0 means "not from a file line" (direct record conversion).
[[noreturn]] void schema_fail(std::size_t line, const std::string& what) {
  if (line == 0) throw CefeError(ErrorCode::Schema, what);
  throw CefeError(ErrorCode::Schema, "line " + std::to_string(line) + ": " + what);
}

void require_string(const json& record, const char* key, std::size_t line) {
  if (!record.contains(key) || !record[key].is_string()) {
    schema_fail(line, std::string("missing string field '") + key + "'");
  }
}

void validate_record(const json& record, DatasetKind kind, std::size_t line) {
  if (!record.is_object()) schema_fail(line, "record is not a JSON object");
  switch (kind) {
    case DatasetKind::Essays: {
      require_string(record, "id", line);
      if (!record.contains("sentences") || !record["sentences"].is_array() ||
          record["sentences"].empty()) {
        schema_fail(line, "essay record needs a non-empty 'sentences' array");
      }
      for (const json& s : record["sentences"]) {
        if (!s.is_object() || !s.contains("id") || !s["id"].is_string() ||
            !s.contains("text") || !s["text"].is_string()) {
          schema_fail(line, "sentence entries need string 'id' and 'text'");
        }
      }
      if (record.contains("label") && !record["label"].is_string()) {
        schema_fail(line, "'label' must be a string");
      }
      break;
    }
    case DatasetKind::LabeledSentences: {
      require_string(record, "id", line);
      require_string(record, "text", line);
      if (!record.contains("labels") || !record["labels"].is_array()) {
        schema_fail(line, "labeled sentence needs a 'labels' array");
      }
      for (const json& l : record["labels"]) {
        if (!l.is_object()) schema_fail(line, "label entries must be objects");
        if (l.contains("coarse") && !l["coarse"].is_string()) {
          schema_fail(line, "'coarse' must be a string");
        }
        if (l.contains("fine") && !l["fine"].is_string()) {
          schema_fail(line, "'fine' must be a string");
        }
      }
      break;
    }
    case DatasetKind::CorrectionPairs: {
      require_string(record, "id", line);
      require_string(record, "source", line);
      require_string(record, "target", line);
      break;
    }
    case DatasetKind::Rows:
      break;
  }
}

}  // namespace

const char* to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Essays: return "essays";
    case DatasetKind::LabeledSentences: return "sentences";
    case DatasetKind::CorrectionPairs: return "pairs";
    case DatasetKind::Rows: return "rows";
  }
  return "rows";
}

DatasetKind dataset_kind_from_string(std::string_view name) {
  if (name == "essays") return DatasetKind::Essays;
  if (name == "sentences") return DatasetKind::LabeledSentences;
  if (name == "pairs") return DatasetKind::CorrectionPairs;
  if (name == "rows") return DatasetKind::Rows;
  throw CefeError(ErrorCode::Schema, "unknown dataset kind: " + std::string(name));
}

Dataset load_dataset(const std::filesystem::path& path, DatasetKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CefeError(ErrorCode::Io, "cannot open " + path.string());
  }
  Dataset out;
  out.kind = kind;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      throw ParseError(line_no, "malformed JSON record");
    }
    if (line_no == 1 && record.is_object() && record.contains(kHeaderKey)) {
      const json& header = record[kHeaderKey];
      if (!header.is_object() || !header.contains("version") ||
          !header["version"].is_number_integer()) {
        schema_fail(line_no, "malformed schema header");
      }
      // Any declared version >= 1 is preserved so load(save(d)) == d holds
      // for datasets stamped by a newer writer; record validation is
      // kind-based and does not depend on the version number.
      int version = header["version"].get<int>();
      if (version < 1) {
        schema_fail(line_no, "invalid schema version " + std::to_string(version));
      }
      if (header.contains("kind") &&
          dataset_kind_from_string(header["kind"].get<std::string>()) != kind) {
        schema_fail(line_no, std::string("file declares kind '") +
                                 header["kind"].get<std::string>() + "', expected '" +
                                 to_string(kind) + "'");
      }
      out.schema_version = version;
      continue;
    }
    validate_record(record, kind, line_no);
    out.items.push_back(std::move(record));
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw CefeError(ErrorCode::Io, "cannot write " + path.string());
  }
  if (dataset.schema_version != 1) {
    json header;
    header[kHeaderKey] = {{"kind", to_string(dataset.kind)},
                          {"version", dataset.schema_version}};
    out << header.dump() << '\n';
  }
  for (const nlohmann::json& item : dataset.items) {
    out << item.dump() << '\n';
  }
  if (!out) {
    throw CefeError(ErrorCode::Io, "write failed: " + path.string());
  }
}

nlohmann::json essay_to_json(const Essay& essay) {
  json sentences = json::array();
  for (const Sentence& s : essay.sentences) {
    sentences.push_back({{"id", s.id}, {"text", s.text}});
  }
  json record = {{"id", essay.id}, {"sentences", std::move(sentences)}};
  if (essay.label) record["label"] = to_string(*essay.label);
  return record;
}

Essay essay_from_json(const nlohmann::json& record) {
  validate_record(record, DatasetKind::Essays, 0);
  Essay essay;
  essay.id = record["id"].get<std::string>();
  for (const json& s : record["sentences"]) {
    essay.sentences.push_back({s["id"].get<std::string>(), s["text"].get<std::string>()});
  }
  if (record.contains("label")) {
    essay.label = fluency_from_string(record["label"].get<std::string>());
  }
  validate(essay);
  return essay;
}

}  // namespace cefe
