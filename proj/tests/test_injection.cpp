#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "cefe/errors.hpp"
#include "cefe/injection.hpp"
#include "cefe/rng.hpp"
#include "cefe/utf8.hpp"

using namespace cefe;
using namespace cefe::inject;

namespace {

doctest::Approx near(double v) { return doctest::Approx(v).epsilon(1e-12); }

std::vector<Sentence> synthetic_corpus(std::size_t n) {
  std::vector<Sentence> corpus;
  corpus.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    corpus.push_back({"s" + std::to_string(i), "今天天气很好我们去公园散步吧。"});
  }
  return corpus;
}

}  // namespace

TEST_CASE("error proportions match the closed form") {
  std::array<double, 4> p02 = expected_proportions(0.2);
  CHECK(p02[0] == near(0.512));
  CHECK(p02[1] == near(0.384));
  CHECK(p02[2] == near(0.096));
  CHECK(p02[3] == near(0.008));

  std::array<double, 4> p0 = expected_proportions(0.0);
  CHECK(p0[0] == near(1.0));
  CHECK(p0[3] == near(0.0));

  std::array<double, 4> p1 = expected_proportions(1.0);
  CHECK(p1[0] == near(0.0));
  CHECK(p1[3] == near(1.0));

  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    std::array<double, 4> props = expected_proportions(rng.next_unit());
    double sum = props[0] + props[1] + props[2] + props[3];
    CHECK(sum == near(1.0));
  }

  CHECK_THROWS_AS(expected_proportions(-0.1), CefeError);
  CHECK_THROWS_AS(expected_proportions(1.1), CefeError);
}

TEST_CASE("error counts are degenerate at the endpoints") {
  CascadeConfig zero;
  zero.p = 0.0;
  CascadeConfig one;
  one.p = 1.0;
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    CHECK(sample_error_count(zero, rng) == 1);
    CHECK(sample_error_count(one, rng) == 4);
  }
}

TEST_CASE("sampled error counts follow the expected proportions") {
  CascadeConfig cfg;  // p = 0.2
  Rng rng(20260816);
  constexpr int kDraws = 100000;
  int counts[4] = {0, 0, 0, 0};
  for (int i = 0; i < kDraws; ++i) {
    int c = sample_error_count(cfg, rng);
    REQUIRE(c >= 1);
    REQUIRE(c <= 4);
    ++counts[c - 1];
  }
  std::array<double, 4> expected = expected_proportions(0.2);
  for (int i = 0; i < 4; ++i) {
    double freq = static_cast<double>(counts[i]) / kDraws;
    CHECK(freq == doctest::Approx(expected[static_cast<std::size_t>(i)]).epsilon(1).scale(0.01));
  }
}

TEST_CASE("op replay on hand-worked examples") {
  ErrorOp del{ErrorCategory::Char, OpKind::CharDelete, 1, 2, ""};
  CHECK(apply_op(del, "今天下雨。") == "今下雨。");

  ErrorOp rot{ErrorCategory::Misorder, OpKind::AdjacentSegmentSwap, 0, 2, ""};
  CHECK(apply_op(rot, "ABCD") == "CDAB");

  ErrorOp repl{ErrorCategory::Char, OpKind::CharReplace, 0, 1, "明"};
  CHECK(apply_op(repl, "今天") == "明天");

  ErrorOp ins{ErrorCategory::Char, OpKind::CharInsert, 1, 1, "天"};
  CHECK(apply_op(ins, "今天") == "今天天");

  ErrorOp span_del{ErrorCategory::Miss, OpKind::SpanDelete, 0, 2, ""};
  CHECK(apply_op(span_del, "今天下雨。") == "下雨。");

  ErrorOp dup{ErrorCategory::Redu, OpKind::SpanDuplicate, 1, 3, ""};
  CHECK(apply_op(dup, "ABCD") == "ABCBCD");

  ErrorOp swap{ErrorCategory::Coll, OpKind::WordSwap, 0, 3, ""};
  CHECK(apply_op(swap, "ABC") == "CBA");
}

TEST_CASE("op replay validates spans") {
  ErrorOp oob{ErrorCategory::Char, OpKind::CharDelete, 5, 6, ""};
  CHECK_THROWS_AS(apply_op(oob, "你好"), CefeError);
  try {
    apply_op(oob, "你好");
  } catch (const CefeError& e) {
    CHECK(e.code() == ErrorCode::Domain);
  }

  ErrorOp pivot_oob{ErrorCategory::Misorder, OpKind::AdjacentSegmentSwap, 0, 2, ""};
  CHECK_THROWS_AS(apply_op(pivot_oob, "你好"), CefeError);  // pivot must split the text
}

TEST_CASE("single injections replay to their corrupted text") {
  Sentence s{"s1", "今天天气很好我们去公园散步吧。"};
  for (ErrorCategory cat : kAllCategories) {
    Rng rng(fnv1a64(to_string(cat)));
    for (int i = 0; i < 50; ++i) {
      SingleInjection si = inject_single(s, cat, rng);
      CHECK(si.op.category == cat);
      CHECK(si.corrupted != s.text);
      CHECK_FALSE(is_blank_text(si.corrupted));
      CHECK(apply_op(si.op, s.text) == si.corrupted);
    }
  }
}

TEST_CASE("infeasible categories are reported as such") {
  Rng rng(8);
  Sentence tiny{"t1", "好"};
  CHECK_THROWS_AS(inject_single(tiny, ErrorCategory::Miss, rng), CefeError);
  CHECK_THROWS_AS(inject_single(tiny, ErrorCategory::Misorder, rng), CefeError);
  CHECK_THROWS_AS(inject_single(tiny, ErrorCategory::Coll, rng), CefeError);

  Sentence same{"t2", "呵呵呵"};  // no differing pair to swap, no real rotation
  CHECK_THROWS_AS(inject_single(same, ErrorCategory::Coll, rng), CefeError);
  CHECK_THROWS_AS(inject_single(same, ErrorCategory::Misorder, rng), CefeError);

  try {
    inject_single(tiny, ErrorCategory::Miss, rng);
  } catch (const CefeError& e) {
    CHECK(e.code() == ErrorCode::InjectionInfeasible);
  }
}

TEST_CASE("cascade config is validated") {
  CascadeConfig bad_p;
  bad_p.p = 1.5;
  CHECK_THROWS_AS(bad_p.validate(), CefeError);

  CascadeConfig negative;
  negative.category_weights[ErrorCategory::Char] = -1.0;
  CHECK_THROWS_AS(negative.validate(), CefeError);

  CascadeConfig all_zero;
  all_zero.category_weights[ErrorCategory::Char] = 0.0;
  CHECK_THROWS_AS(all_zero.validate(), CefeError);

  // Distinct categories per sentence: max_errors cannot exceed the number
  // of categories that can actually be drawn.
  CascadeConfig narrow;
  narrow.category_weights[ErrorCategory::Char] = 1.0;
  narrow.category_weights[ErrorCategory::Redu] = 1.0;
  narrow.max_errors = 4;
  CHECK_THROWS_AS(narrow.validate(), CefeError);
  narrow.max_errors = 2;
  CHECK_NOTHROW(narrow.validate());
}

TEST_CASE("p=0 cascades produce exactly one error everywhere") {
  CascadeConfig cfg;
  cfg.p = 0.0;
  cfg.seed = 11;
  InjectionResult result = generate_multi_error(synthetic_corpus(10), cfg);
  CHECK(result.items.size() == 10);
  CHECK(result.report.produced == 10);
  CHECK(result.report.skipped == 0);
  for (const InjectedSentence& item : result.items) {
    CHECK(item.error_count == 1);
    CHECK(item.ops.size() == 1);
    CHECK(item.corrupted != item.source.text);
  }
  CHECK(result.report.histogram[0] == 10);
}

TEST_CASE("cascade output replays and uses distinct categories") {
  CascadeConfig cfg;
  cfg.seed = 40;
  InjectionResult result = generate_multi_error(synthetic_corpus(300), cfg);
  REQUIRE(result.report.skipped == 0);
  for (const InjectedSentence& item : result.items) {
    std::string replay = item.source.text;
    std::set<ErrorCategory> used;
    for (const ErrorOp& op : item.ops) {
      replay = apply_op(op, replay);
      CHECK(used.insert(op.category).second);  // categories never repeat
    }
    CHECK(replay == item.corrupted);
    CHECK(item.error_count == static_cast<int>(item.ops.size()));
  }
}

TEST_CASE("cascades are deterministic and order-independent across jobs") {
  CascadeConfig cfg;
  cfg.seed = 90;
  std::vector<Sentence> corpus = synthetic_corpus(64);
  InjectionResult a = generate_multi_error(corpus, cfg, 1);
  InjectionResult b = generate_multi_error(corpus, cfg, 1);
  InjectionResult c = generate_multi_error(corpus, cfg, 4);
  CHECK(a.items == b.items);
  CHECK(a.items == c.items);
  CHECK(a.report.histogram == c.report.histogram);
}

TEST_CASE("cascade histogram tracks the closed-form proportions") {
  CascadeConfig cfg;
  cfg.seed = 123;
  constexpr std::size_t kN = 20000;
  InjectionResult result = generate_multi_error(synthetic_corpus(kN), cfg, 4);
  REQUIRE(result.report.skipped == 0);
  std::array<double, 4> expected = expected_proportions(0.2);
  for (std::size_t i = 0; i < 4; ++i) {
    double freq = static_cast<double>(result.report.histogram[i]) / kN;
    CHECK(freq == doctest::Approx(expected[i]).epsilon(1).scale(0.012));
  }
}

TEST_CASE("impossible sentences are skipped, not fatal") {
  CascadeConfig cfg;
  cfg.category_weights[ErrorCategory::Coll] = 1.0;
  cfg.max_errors = 1;
  std::vector<Sentence> corpus{{"a", "好"}, {"b", "今天天气很好。"}};
  InjectionResult result = generate_multi_error(corpus, cfg);
  CHECK(result.report.requested == 2);
  CHECK(result.report.produced == 1);
  CHECK(result.report.skipped == 1);
  REQUIRE(result.items.size() == 1);
  CHECK(result.items[0].source.id == "b");
  CHECK(result.items[0].ops[0].category == ErrorCategory::Coll);
}

TEST_CASE("zero-weight categories are never drawn") {
  CascadeConfig cfg;
  cfg.category_weights[ErrorCategory::Char] = 1.0;
  cfg.max_errors = 1;
  cfg.seed = 31;
  InjectionResult result = generate_multi_error(synthetic_corpus(50), cfg);
  for (const InjectedSentence& item : result.items) {
    CHECK(item.ops[0].category == ErrorCategory::Char);
  }
}

TEST_CASE("cascade input is validated") {
  CascadeConfig cfg;
  std::vector<Sentence> empty;
  CHECK_THROWS_AS(generate_multi_error(empty, cfg), CefeError);

  std::vector<Sentence> dup{{"x", "你好。"}, {"x", "再见。"}};
  CHECK_THROWS_AS(generate_multi_error(dup, cfg), CefeError);
  try {
    generate_multi_error(dup, cfg);
  } catch (const CefeError& e) {
    CHECK(e.code() == ErrorCode::Schema);
  }
}

TEST_CASE("injected sentences round-trip through JSON") {
  CascadeConfig cfg;
  cfg.seed = 77;
  InjectionResult result = generate_multi_error(synthetic_corpus(20), cfg);
  for (const InjectedSentence& item : result.items) {
    CHECK(injected_from_json(injected_to_json(item)) == item);
  }

  nlohmann::json bad{{"id", "s1"}, {"source", "好"}, {"corrupted", "好好"}};
  CHECK_THROWS_AS(injected_from_json(bad), CefeError);
}

TEST_CASE("category names round-trip") {
  for (ErrorCategory cat : kAllCategories) {
    CHECK(category_from_string(to_string(cat)) == cat);
  }
  CHECK_THROWS_AS(category_from_string("bogus"), CefeError);
  CHECK(std::string(to_string(OpKind::AdjacentSegmentSwap)) == "adjacent_segment_swap");
  CHECK(op_kind_from_string("span_duplicate") == OpKind::SpanDuplicate);
}
