#include <doctest.h>

#include <string>
#include <vector>

#include "cefe/errors.hpp"
#include "cefe/segment.hpp"

using namespace cefe;

TEST_CASE("delimiters cut after the punctuation mark") {
  SegmentedText seg = segment_sentences("你好。世界！真的吗？好；完");
  REQUIRE(seg.sentences.size() == 5);
  CHECK(seg.sentences[0].text == "你好。");
  CHECK(seg.sentences[1].text == "世界！");
  CHECK(seg.sentences[2].text == "真的吗？");
  CHECK(seg.sentences[3].text == "好；");
  CHECK(seg.sentences[4].text == "完");
  CHECK(join_segments(seg) == "你好。世界！真的吗？好；完");
}

TEST_CASE("newlines separate sentences but live in the glue") {
  SegmentedText seg = segment_sentences("第一行\n第二行");
  REQUIRE(seg.sentences.size() == 2);
  CHECK(seg.sentences[0].text == "第一行");
  CHECK(seg.sentences[1].text == "第二行");
  for (const Sentence& s : seg.sentences) {
    CHECK(s.text.find('\n') == std::string::npos);
  }
  CHECK(join_segments(seg) == "第一行\n第二行");
}

TEST_CASE("whitespace-only fragments fold into glue") {
  const std::string text = "你好。 \n世界。";
  SegmentedText seg = segment_sentences(text);
  REQUIRE(seg.sentences.size() == 2);
  CHECK(seg.sentences[0].text == "你好。");
  CHECK(seg.sentences[1].text == "世界。");
  CHECK(join_segments(seg) == text);
}

TEST_CASE("segmentation reconstructs tricky inputs byte for byte") {
  const std::string cases[] = {
      "单句",
      "单句。",
      "两句。第二句！",
      "结尾换行。\n",
      "\n开头换行。",
      "连续！！？？标点。",
      "中间　全角空白。下一句。",
      "混合 ascii and 中文；done",
      "多行\n\n空行\n结束。\r\n",
  };
  for (const auto& text : cases) {
    CAPTURE(text);
    SegmentedText seg = segment_sentences(text);
    CHECK(join_segments(seg) == text);
    CHECK(seg.glue.size() == seg.sentences.size() + 1);
    for (const Sentence& s : seg.sentences) {
      CHECK_FALSE(s.text.empty());
      CHECK(s.text.find('\n') == std::string::npos);
    }
  }
}

TEST_CASE("blank input is rejected") {
  CHECK_THROWS_AS(segment_sentences(""), CefeError);
  CHECK_THROWS_AS(segment_sentences("   \n\t"), CefeError);
  CHECK_THROWS_AS(segment_sentences("　"), CefeError);
  try {
    segment_sentences("");
  } catch (const CefeError& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
}

TEST_CASE("make_essay numbers sentences from s1") {
  Essay essay = make_essay("e9", "你好。世界。");
  CHECK(essay.id == "e9");
  REQUIRE(essay.sentences.size() == 2);
  CHECK(essay.sentences[0].id == "s1");
  CHECK(essay.sentences[1].id == "s2");
  CHECK_NOTHROW(validate(essay));
}
