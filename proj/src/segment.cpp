#include "cefe/segment.hpp"

#include <string_view>

#include "cefe/errors.hpp"

namespace cefe {

namespace {

constexpr std::string_view kFullStop = "\xE3\x80\x82";   // 。
constexpr std::string_view kBang = "\xEF\xBC\x81";       // ！
constexpr std::string_view kQuestion = "\xEF\xBC\x9F";   // ？
constexpr std::string_view kSemicolon = "\xEF\xBC\x9B";  // ；

// Byte length of the delimiter starting at i, or 0. UTF-8 is
// self-synchronizing, so matching raw byte sequences cannot split a
// code point.
std::size_t delimiter_len_at(std::string_view text, std::size_t i) {
  if (text[i] == '\n') return 1;
  for (std::string_view d : {kFullStop, kBang, kQuestion, kSemicolon}) {
    if (text.compare(i, d.size(), d) == 0) return d.size();
  }
  return 0;
}

}  // namespace

bool is_blank_text(std::string_view text) {
  for (std::size_t i = 0; i < text.size();) {
    char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++i;
      continue;
    }
    if (text.compare(i, 3, "\xE3\x80\x80") == 0) {  // ideographic space
      i += 3;
      continue;
    }
    return false;
  }
  return true;
}

SegmentedText segment_sentences(const std::string& text) {
  if (is_blank_text(text)) {
    throw CefeError(ErrorCode::EmptyInput, "no sentence content");
  }

  std::vector<std::string> pieces;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size();) {
    std::size_t d = delimiter_len_at(text, i);
    if (d > 0) {
      i += d;
      pieces.push_back(text.substr(start, i - start));
      start = i;
    } else {
      ++i;
    }
  }
  if (start < text.size()) pieces.push_back(text.substr(start));

  SegmentedText out;
  std::string pending;
  for (const std::string& piece : pieces) {
    // A trailing newline (with any CR directly before it) moves into glue;
    // sentence text never holds '\n'.
    std::string body = piece;
    std::string tail;
    if (!body.empty() && body.back() == '\n') {
      body.pop_back();
      tail = "\n";
      if (!body.empty() && body.back() == '\r') {
        body.pop_back();
        tail = "\r\n";
      }
    }
    if (is_blank_text(body)) {
      pending += piece;
      continue;
    }
    out.glue.push_back(std::move(pending));
    pending = std::move(tail);
    out.sentences.push_back(
        {"s" + std::to_string(out.sentences.size() + 1), std::move(body)});
  }
  out.glue.push_back(std::move(pending));
  return out;
}

std::string join_segments(const SegmentedText& segments) {
  std::string out;
  for (std::size_t i = 0; i < segments.sentences.size(); ++i) {
    out += segments.glue[i];
    out += segments.sentences[i].text;
  }
  if (!segments.glue.empty()) out += segments.glue.back();
  return out;
}

Essay make_essay(std::string id, const std::string& text) {
  Essay essay;
  essay.id = std::move(id);
  essay.sentences = segment_sentences(text).sentences;
  return essay;
}

}  // namespace cefe
