#include "cefe/types.hpp"

#include <cmath>
#include <set>

#include "cefe/errors.hpp"

namespace cefe {

const char* to_string(FluencyLabel label) {
  switch (label) {
    case FluencyLabel::Excellent: return "excellent";
    case FluencyLabel::Moderate: return "moderate";
    case FluencyLabel::Failing: return "failing";
  }
  return "excellent";
}

FluencyLabel fluency_from_string(std::string_view name) {
  if (name == "excellent") return FluencyLabel::Excellent;
  if (name == "moderate") return FluencyLabel::Moderate;
  if (name == "failing") return FluencyLabel::Failing;
  throw CefeError(ErrorCode::Schema, "unknown fluency label: " + std::string(name));
}

std::string Essay::joined_text() const {
  std::string out;
  for (const Sentence& s : sentences) out += s.text;
  return out;
}

void validate(const Essay& essay) {
  if (essay.sentences.empty()) {
    throw CefeError(ErrorCode::Schema, "essay '" + essay.id + "' has no sentences");
  }
  std::set<std::string> ids;
  for (const Sentence& s : essay.sentences) {
    if (!ids.insert(s.id).second) {
      throw CefeError(ErrorCode::Schema,
                      "essay '" + essay.id + "' has duplicate sentence id '" + s.id + "'");
    }
    if (s.text.find('\n') != std::string::npos) {
      throw CefeError(ErrorCode::Schema, "sentence '" + s.id + "' contains a newline");
    }
    if (is_blank_text(s.text)) {
      throw CefeError(ErrorCode::Schema, "sentence '" + s.id + "' is blank");
    }
  }
}

const char* to_string(CoarseError category) {
  switch (category) {
    case CoarseError::Char: return "char";
    case CoarseError::Miss: return "miss";
    case CoarseError::Redu: return "redu";
    case CoarseError::Coll: return "coll";
  }
  return "char";
}

CoarseError coarse_from_string(std::string_view name) {
  if (name == "char") return CoarseError::Char;
  if (name == "miss") return CoarseError::Miss;
  if (name == "redu") return CoarseError::Redu;
  if (name == "coll") return CoarseError::Coll;
  throw CefeError(ErrorCode::Schema, "unknown coarse category: " + std::string(name));
}

FineError fine_from_string(std::string_view name) {
  if (name == "misorder") return FineError::misorder();
  if (name == "redu-other") return FineError::redu_other();
  return FineError::other(std::string(name));
}

std::optional<CoarseError> CategoryMap::parent_of(const FineError& fine) const {
  switch (fine.kind) {
    case FineError::Kind::ReduOther:
      return CoarseError::Redu;
    case FineError::Kind::Misorder:
      return misorder_parent;
    case FineError::Kind::Other: {
      auto it = custom.find(fine.name);
      if (it == custom.end()) return std::nullopt;
      return it->second;
    }
  }
  return std::nullopt;
}

void ProbDist::validate() const {
  if (probs.empty()) {
    throw CefeError(ErrorCode::Domain, "empty probability distribution");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || std::isnan(p)) {
      throw CefeError(ErrorCode::Domain, "negative or NaN probability");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw CefeError(ErrorCode::Domain,
                    "probabilities sum to " + std::to_string(sum) + ", expected 1");
  }
}

}  // namespace cefe
