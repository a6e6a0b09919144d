#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cefe/types.hpp"

namespace cefe {

// JSONL schemas understood by the toolkit:
//   Essays:          {"id", "sentences":[{"id","text"}], "label"?}
//   LabeledSentences:{"id", "text", "labels":[{"coarse"?, "fine"?}]}
//   CorrectionPairs: {"id", "source", "target"}
//   Rows:            any JSON object (generic pass-through)
// Unknown fields are preserved opaquely on every kind.
enum class DatasetKind { Essays, LabeledSentences, CorrectionPairs, Rows };

const char* to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(std::string_view name);

// One JSONL file in memory. save_dataset writes one record per line with keys
// in sorted order (nlohmann::json's canonical object order), UTF-8, so
// load(save(d)) == d and the bytes are stable across round trips.
//
// schema_version 1 files carry no header. A file whose first line is
// {"cefe_schema":{"kind":...,"version":...}} declares a later version
// explicitly; save_dataset emits that header iff schema_version != 1.
struct Dataset {
  DatasetKind kind = DatasetKind::Rows;
  int schema_version = 1;
  std::vector<nlohmann::json> items;

  bool operator==(const Dataset&) const = default;
};

// Throws ParseError (with 1-based line number) on malformed JSON lines,
// CefeError(Schema) when a record does not fit `kind`, CefeError(Io) when the
// file cannot be opened.
Dataset load_dataset(const std::filesystem::path& path, DatasetKind kind);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Record bridges. essay_from_json validates the essay invariants.
nlohmann::json essay_to_json(const Essay& essay);
Essay essay_from_json(const nlohmann::json& record);

}  // namespace cefe
