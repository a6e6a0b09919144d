#pragma once

#include <string>
#include <vector>

#include "cefe/types.hpp"

namespace cefe {

// Reversible sentence segmentation. Text is cut after each delimiter in
// {。 ！ ？ ； newline}; the punctuation stays on the left sentence, while
// newlines and whitespace-only fragments are stored as glue so that
// join_segments reproduces the input byte for byte.
struct SegmentedText {
  std::vector<Sentence> sentences;
  // glue[i] precedes sentences[i]; glue.back() is the tail after the last
  // sentence. size() == sentences.size() + 1.
  std::vector<std::string> glue;
};

// Throws CefeError(EmptyInput) when text is empty or whitespace-only.
SegmentedText segment_sentences(const std::string& text);

std::string join_segments(const SegmentedText& segments);

// Segments text and assigns sentence ids "s1", "s2", ...
Essay make_essay(std::string id, const std::string& text);

}  // namespace cefe
