#include "cefe/nsp.hpp"

#include <string>

#include "cefe/errors.hpp"

namespace cefe::nsp {

const char* to_string(GranularityMode mode) {
  switch (mode) {
    case GranularityMode::EssayLevel: return "essay";
    case GranularityMode::SentenceLevel: return "sentence";
    case GranularityMode::NspLevel: return "nsp";
  }
  throw CefeError(ErrorCode::Domain, "unknown granularity mode");
}

GranularityMode granularity_from_string(std::string_view name) {
  if (name == "essay") return GranularityMode::EssayLevel;
  if (name == "sentence") return GranularityMode::SentenceLevel;
  if (name == "nsp") return GranularityMode::NspLevel;
  throw CefeError(ErrorCode::Domain,
                  "unknown granularity mode '" + std::string(name) + "'");
}

std::vector<NspPair> make_pairs(const Essay& essay) {
  if (essay.sentences.empty()) {
    throw CefeError(ErrorCode::EmptyInput, "essay has no sentences");
  }
  std::vector<NspPair> pairs;
  if (essay.sentences.size() == 1) {
    pairs.push_back({essay.sentences[0], std::nullopt, essay.id, 0});
    return pairs;
  }
  pairs.reserve(essay.sentences.size() - 1);
  for (std::size_t i = 0; i + 1 < essay.sentences.size(); ++i) {
    pairs.push_back({essay.sentences[i], essay.sentences[i + 1], essay.id, i});
  }
  return pairs;
}

std::string escape_separator(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] == '\\') {
      out += "\\\\";
      ++i;
    } else if (text.substr(i, kSeparator.size()) == kSeparator) {
      out += '\\';
      out += kSeparator;
      i += kSeparator.size();
    } else {
      out += text[i];
      ++i;
    }
  }
  return out;
}

std::string unescape_separator(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] == '\\' && i + 1 < text.size()) {
      if (text[i + 1] == '\\') {
        out += '\\';
        i += 2;
        continue;
      }
      if (text.substr(i + 1, kSeparator.size()) == kSeparator) {
        out += kSeparator;
        i += 1 + kSeparator.size();
        continue;
      }
    }
    out += text[i];
    ++i;
  }
  return out;
}

std::string render_input(const NspPair& pair, GranularityMode mode) {
  switch (mode) {
    case GranularityMode::SentenceLevel:
      return pair.left.text;
    case GranularityMode::EssayLevel:
      return pair.left.text + (pair.right ? pair.right->text : "");
    case GranularityMode::NspLevel: {
      std::string out = escape_separator(pair.left.text);
      out += kSeparator;
      if (pair.right) out += escape_separator(pair.right->text);
      return out;
    }
  }
  throw CefeError(ErrorCode::Domain, "unknown granularity mode");
}

std::vector<InputRow> chunk_essay(const Essay& essay, GranularityMode mode) {
  if (essay.sentences.empty()) {
    throw CefeError(ErrorCode::EmptyInput, "essay has no sentences");
  }
  std::vector<InputRow> rows;
  switch (mode) {
    case GranularityMode::EssayLevel:
      rows.push_back({essay.id, essay.id, essay.joined_text(), essay.label});
      break;
    case GranularityMode::SentenceLevel:
      rows.reserve(essay.sentences.size());
      for (const Sentence& s : essay.sentences) {
        rows.push_back({essay.id + "/" + s.id, essay.id, s.text, essay.label});
      }
      break;
    case GranularityMode::NspLevel:
      for (const NspPair& pair : make_pairs(essay)) {
        rows.push_back({essay.id + "#" + std::to_string(pair.index), essay.id,
                        render_input(pair, GranularityMode::NspLevel), essay.label});
      }
      break;
  }
  return rows;
}

ProbDist aggregate(const std::vector<ProbDist>& dists, AggregateMode mode) {
  if (dists.empty()) {
    throw CefeError(ErrorCode::EmptyAggregation, "no distributions to aggregate");
  }
  const std::size_t k = dists[0].probs.size();
  for (const ProbDist& d : dists) {
    if (d.probs.size() != k) {
      throw CefeError(ErrorCode::Shape, "distributions disagree on dimension");
    }
    d.validate();
  }

  ProbDist out;
  out.probs.assign(k, 0.0);
  if (mode == AggregateMode::MeanProb) {
    for (const ProbDist& d : dists) {
      for (std::size_t i = 0; i < k; ++i) out.probs[i] += d.probs[i];
    }
  } else {
    for (const ProbDist& d : dists) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < k; ++i) {
        if (d.probs[i] > d.probs[best]) best = i;
      }
      out.probs[best] += 1.0;
    }
  }
  for (double& p : out.probs) p /= static_cast<double>(dists.size());
  return out;
}

FluencyLabel decide(const ProbDist& dist) {
  dist.validate();
  if (dist.probs.size() != static_cast<std::size_t>(kNumFluencyClasses)) {
    throw CefeError(ErrorCode::Shape, "fluency decision needs a 3-class distribution");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < dist.probs.size(); ++i) {
    if (dist.probs[i] > dist.probs[best]) best = i;  // strict: ties keep lower ordinal
  }
  return static_cast<FluencyLabel>(best);
}

}  // namespace cefe::nsp
