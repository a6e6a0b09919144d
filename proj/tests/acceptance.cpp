// Acceptance suite: one pass/fail line per criterion. Exits 0 only when all
// eleven criteria hold. Criterion 9 drives the installed `cefe` binary; its
// path comes from CEFE_BIN (set by ctest) with a fallback next to this
// executable's own location in the build tree.
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cefe/backtranslate.hpp"
#include "cefe/dataset.hpp"
#include "cefe/errors.hpp"
#include "cefe/fusion.hpp"
#include "cefe/injection.hpp"
#include "cefe/loss.hpp"
#include "cefe/metrics.hpp"
#include "cefe/model.hpp"
#include "cefe/nsp.hpp"
#include "cefe/pairs.hpp"
#include "cefe/rng.hpp"
#include "cefe/types.hpp"
#include "cefe/utf8.hpp"

#include "helpers.hpp"

namespace {

using nlohmann::json;
using namespace cefe;

// A criterion throws Failure (or any exception) to fail; returning is a pass.
struct Failure {
  std::string message;
};

void require(bool condition, const std::string& message) {
  if (!condition) throw Failure{message};
}

// Optional detail appended to the criterion's pass line.
std::string g_note;

std::string fmt(double value) {
  std::ostringstream out;
  out.precision(6);
  out << value;
  return out.str();
}

// Shared sentence material: natural clauses recombined deterministically so
// corpora of any size stay realistic without shipping a data file.
const std::array<const char*, 40> kClauses = {
    "我今天早上去学校上课",     "老师给我们讲了一个有趣的故事",
    "同学们都认真地听讲",       "放学以后我和朋友一起回家",
    "妈妈在厨房里做晚饭",       "爸爸下班回来很累",
    "我们全家一起吃了晚饭",     "晚饭以后我开始写作业",
    "周末我喜欢去公园散步",     "公园里的花开得很漂亮",
    "很多人在湖边钓鱼",         "孩子们在草地上放风筝",
    "图书馆里非常安静",         "我借了三本关于历史的书",
    "读书可以让人增长知识",     "我每天都坚持读一个小时",
    "春天的天气越来越暖和",     "小鸟在树上唱歌",
    "河边的柳树发芽了",         "我们去郊外野餐",
    "学习外语需要每天练习",     "我的朋友帮我纠正发音",
    "坚持不懈才能取得进步",     "老师表扬了我的努力",
    "昨天晚上下了一场大雨",     "早上的空气特别新鲜",
    "街道被雨水冲洗得很干净",   "彩虹挂在天边",
    "哥哥喜欢打篮球",           "他每天放学后都去操场",
    "运动让身体更健康",         "我们一起参加了学校的比赛",
    "奶奶给我讲过去的故事",     "她的童年生活很简朴",
    "我听得非常入迷",           "这些故事让我懂得了珍惜",
    "科学课上我们做了实验",     "大家对结果感到惊讶",
    "老师解释了其中的原理",     "我对科学越来越感兴趣"};

std::string make_sentence_text(Rng& rng, std::size_t n_clauses) {
  std::vector<std::size_t> order(kClauses.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::string text;
  for (std::size_t i = 0; i < n_clauses; ++i) {
    if (i > 0) text += "，";
    text += kClauses[order[i]];
  }
  text += "。";
  return text;
}

Essay make_random_essay(const std::string& id, Rng& rng, std::size_t n_sentences,
                        std::size_t n_clauses) {
  Essay essay;
  essay.id = id;
  for (std::size_t j = 0; j < n_sentences; ++j) {
    essay.sentences.push_back(
        {"s" + std::to_string(j + 1), make_sentence_text(rng, n_clauses)});
  }
  return essay;
}

ProbDist random_dist(Rng& rng, int k) {
  ProbDist dist;
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    double draw = -std::log(rng.next_unit() + 1e-12);
    dist.probs.push_back(draw);
    sum += draw;
  }
  for (double& p : dist.probs) p /= sum;
  return dist;
}

// ---------------------------------------------------------------------------
// 1. Error-count distribution
// ---------------------------------------------------------------------------

void criterion_1() {
  const std::array<double, 4> expected = {0.512, 0.384, 0.096, 0.008};
  std::array<double, 4> got = inject::expected_proportions(0.2);
  for (std::size_t i = 0; i < 4; ++i) {
    require(std::abs(got[i] - expected[i]) <= 1e-12,
            "expected_proportions(0.2)[" + std::to_string(i) + "] = " + fmt(got[i]) +
                ", want " + fmt(expected[i]));
  }

  Rng corpus_rng(20260801);
  std::vector<Sentence> corpus;
  corpus.reserve(100000);
  for (std::size_t i = 0; i < 100000; ++i) {
    corpus.push_back({"s" + std::to_string(i + 1), make_sentence_text(corpus_rng, 3)});
  }
  inject::CascadeConfig cfg;
  cfg.p = 0.2;
  cfg.seed = 404;
  inject::InjectionResult result = inject::generate_multi_error(corpus, cfg, 4);
  require(result.report.produced > 99000,
          "too many skips: produced " + std::to_string(result.report.produced));
  double produced = static_cast<double>(result.report.produced);
  for (std::size_t i = 0; i < 4; ++i) {
    double proportion = static_cast<double>(result.report.histogram[i]) / produced;
    require(std::abs(proportion - expected[i]) <= 0.01,
            "bucket " + std::to_string(i + 1) + ": observed " + fmt(proportion) +
                ", want " + fmt(expected[i]) + " +/- 0.01");
  }
}

// ---------------------------------------------------------------------------
// 2. SCE reduction to CE at beta = 0
// ---------------------------------------------------------------------------

void criterion_2() {
  Rng rng(20260802);
  for (int trial = 0; trial < 1000; ++trial) {
    int k = 2 + static_cast<int>(rng.pick_index(5));
    ProbDist p = random_dist(rng, k);
    int target = static_cast<int>(rng.pick_index(static_cast<std::size_t>(k)));
    model::SCEConfig cfg;
    cfg.mu = 0.05 + 1.95 * rng.next_unit();
    cfg.beta = 0.0;
    double sce = model::sce_loss(p, target, cfg);
    double scaled_ce = cfg.mu * model::ce_loss(p, target);
    require(std::abs(sce - scaled_ce) <= 1e-12,
            "trial " + std::to_string(trial) + ": sce(beta=0) = " + fmt(sce) +
                " but mu*ce = " + fmt(scaled_ce));
  }
}

// ---------------------------------------------------------------------------
// 3. Gradient check
// ---------------------------------------------------------------------------

void criterion_3() {
  model::GradCheckReport report = model::gradcheck(120, 20260803, 1e-5);
  require(report.trials >= 100, "only " + std::to_string(report.trials) + " trials");
  require(report.passed && report.max_rel_err <= 1e-5,
          "max relative error " + fmt(report.max_rel_err) + " exceeds 1e-5");
}

// ---------------------------------------------------------------------------
// 4. RCE closed form
// ---------------------------------------------------------------------------

void criterion_4() {
  Rng rng(20260804);
  for (int trial = 0; trial < 500; ++trial) {
    int k = 2 + static_cast<int>(rng.pick_index(5));
    ProbDist p = random_dist(rng, k);
    int target = static_cast<int>(rng.pick_index(static_cast<std::size_t>(k)));
    double got = model::rce_loss(p, target, -4.0);
    double want = 4.0 * (1.0 - p.probs[static_cast<std::size_t>(target)]);
    require(std::abs(got - want) <= 1e-12,
            "trial " + std::to_string(trial) + ": rce = " + fmt(got) +
                ", closed form = " + fmt(want));
  }
}

// ---------------------------------------------------------------------------
// 5. Oversampling {12, 45, 43} -> {45, 45, 45}
// ---------------------------------------------------------------------------

std::array<std::size_t, 3> class_counts(const std::vector<model::LabeledFeature>& items) {
  std::array<std::size_t, 3> counts = {0, 0, 0};
  for (const model::LabeledFeature& item : items) {
    counts[static_cast<std::size_t>(item.target)] += 1;
  }
  return counts;
}

void criterion_5() {
  std::vector<model::LabeledFeature> items;
  const std::array<int, 3> input_counts = {12, 45, 43};
  int serial = 0;
  for (int label = 0; label < 3; ++label) {
    for (int i = 0; i < input_counts[static_cast<std::size_t>(label)]; ++i) {
      items.push_back(
          {model::featurize("样本句子" + std::to_string(serial++), 256), label});
    }
  }

  Rng rng_a(20260805);
  std::vector<model::LabeledFeature> balanced = model::oversample(items, 3, rng_a);
  auto counts = class_counts(balanced);
  require(counts[0] == 45 && counts[1] == 45 && counts[2] == 45,
          "counts after oversampling: {" + std::to_string(counts[0]) + ", " +
              std::to_string(counts[1]) + ", " + std::to_string(counts[2]) + "}");
  require(balanced.size() == 135, "size " + std::to_string(balanced.size()) + " != 135");
  for (std::size_t i = 0; i < items.size(); ++i) {
    require(balanced[i].target == items[i].target &&
                balanced[i].features == items[i].features,
            "original at index " + std::to_string(i) + " was not retained in place");
  }

  Rng rng_b(20260805);
  std::vector<model::LabeledFeature> again = model::oversample(items, 3, rng_b);
  require(again.size() == balanced.size(), "reruns disagree on size");
  for (std::size_t i = 0; i < balanced.size(); ++i) {
    require(again[i].target == balanced[i].target &&
                again[i].features == balanced[i].features,
            "rerun with the same seed diverged at index " + std::to_string(i));
  }
}

// ---------------------------------------------------------------------------
// 6. Back-translation multiplicity: 43 essays -> 129 labeled records
// ---------------------------------------------------------------------------

class IdentityTranslator final : public backtrans::Translator {
 public:
  std::string translate(const std::string& text, const std::string&,
                        const std::string&) override {
    return text;
  }
  std::string id() const override { return "identity"; }
};

void criterion_6() {
  Rng rng(20260806);
  std::vector<Essay> essays;
  for (int i = 0; i < 43; ++i) {
    essays.push_back(make_random_essay("a" + std::to_string(i + 1), rng,
                                       2 + rng.pick_index(2), 2));
  }
  IdentityTranslator identity;
  backtrans::RoundTripper rt(identity);
  backtrans::LabelResult result = backtrans::label_corpus(essays, {}, rt);
  require(result.report.produced == 129,
          "produced " + std::to_string(result.report.produced) + " records, want 129");
  require(result.dataset.items.size() == 129,
          "dataset holds " + std::to_string(result.dataset.items.size()) + " records");
  const std::map<FluencyLabel, std::size_t>& hist = result.report.histogram;
  for (FluencyLabel label :
       {FluencyLabel::Excellent, FluencyLabel::Moderate, FluencyLabel::Failing}) {
    auto it = hist.find(label);
    require(it != hist.end() && it->second == 43,
            std::string("histogram[") + to_string(label) + "] != 43");
  }
}

// ---------------------------------------------------------------------------
// 7. NSP laws
// ---------------------------------------------------------------------------

void criterion_7() {
  Rng rng(20260807);

  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 1 + rng.pick_index(8);
    Essay essay = make_random_essay("n" + std::to_string(trial), rng, n, 2);
    std::size_t want = n > 1 ? n - 1 : 1;
    std::size_t got = nsp::make_pairs(essay).size();
    require(got == want, "essay with " + std::to_string(n) + " sentences made " +
                             std::to_string(got) + " pairs, want " +
                             std::to_string(want));
  }

  for (int trial = 0; trial < 50; ++trial) {
    std::size_t m = 1 + rng.pick_index(12);
    std::vector<ProbDist> dists;
    for (std::size_t i = 0; i < m; ++i) dists.push_back(random_dist(rng, 3));
    for (nsp::AggregateMode mode :
         {nsp::AggregateMode::MeanProb, nsp::AggregateMode::MajorityVote}) {
      ProbDist base = nsp::aggregate(dists, mode);
      std::vector<ProbDist> shuffled = dists;
      rng.shuffle(shuffled);
      ProbDist permuted = nsp::aggregate(shuffled, mode);
      for (std::size_t i = 0; i < 3; ++i) {
        require(std::abs(base.probs[i] - permuted.probs[i]) <= 1e-12,
                "aggregate is not permutation-invariant");
      }
    }
    ProbDist constant = random_dist(rng, 3);
    std::vector<ProbDist> repeated(m, constant);
    ProbDist collapsed = nsp::aggregate(repeated, nsp::AggregateMode::MeanProb);
    for (std::size_t i = 0; i < 3; ++i) {
      require(std::abs(collapsed.probs[i] - constant.probs[i]) <= 1e-12,
              "mean aggregation is not idempotent on constant lists");
    }
  }

  const double third = 1.0 / 3.0;
  ProbDist uniform{{third, third, third}};
  require(nsp::decide(uniform) == FluencyLabel::Excellent,
          "uniform tie should resolve to the lowest ordinal (excellent)");
  ProbDist pair_tie{{0.3, 0.35, 0.35}};
  require(nsp::decide(pair_tie) == FluencyLabel::Moderate,
          "moderate/failing tie should resolve to moderate");
  ProbDist clear{{0.2, 0.25, 0.55}};
  require(nsp::decide(clear) == FluencyLabel::Failing, "clear argmax misdecided");
}

// ---------------------------------------------------------------------------
// 8. Metric oracles
// ---------------------------------------------------------------------------

double qwk_brute_force(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                       int k) {
  std::size_t n = y_true.size();
  std::vector<double> observed(static_cast<std::size_t>(k) * k, 0.0);
  std::vector<double> hist_true(static_cast<std::size_t>(k), 0.0);
  std::vector<double> hist_pred(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    observed[static_cast<std::size_t>(y_true[i] * k + y_pred[i])] += 1.0;
    hist_true[static_cast<std::size_t>(y_true[i])] += 1.0;
    hist_pred[static_cast<std::size_t>(y_pred[i])] += 1.0;
  }
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      double w = static_cast<double>((i - j) * (i - j));
      num += w * observed[static_cast<std::size_t>(i * k + j)];
      den += w * hist_true[static_cast<std::size_t>(i)] *
             hist_pred[static_cast<std::size_t>(j)] / static_cast<double>(n);
    }
  }
  if (den == 0.0) return 1.0;
  return 1.0 - num / den;
}

std::size_t lev_recursive(std::span<const char32_t> a, std::span<const char32_t> b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  std::size_t unit = a.front() == b.front() ? 0 : 1;
  return std::min({lev_recursive(a.subspan(1), b) + 1,
                   lev_recursive(a, b.subspan(1)) + 1,
                   lev_recursive(a.subspan(1), b.subspan(1)) + unit});
}

void check_levenshtein_pair(const std::string& a, const std::string& b) {
  std::vector<char32_t> ca = utf8::decode(a);
  std::vector<char32_t> cb = utf8::decode(b);
  std::size_t want = lev_recursive(ca, cb);
  std::size_t got = metrics::levenshtein(a, b);
  require(got == want, "levenshtein(\"" + a + "\", \"" + b + "\") = " +
                           std::to_string(got) + ", recursion says " +
                           std::to_string(want));
}

void criterion_8() {
  Rng rng(20260808);

  // QWK against brute-force summation.
  for (int trial = 0; trial < 1000; ++trial) {
    int k = 2 + static_cast<int>(rng.pick_index(4));
    std::size_t n = 1 + rng.pick_index(50);
    std::vector<int> y_true(n);
    std::vector<int> y_pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      y_true[i] = static_cast<int>(rng.pick_index(static_cast<std::size_t>(k)));
      y_pred[i] = static_cast<int>(rng.pick_index(static_cast<std::size_t>(k)));
    }
    double want = qwk_brute_force(y_true, y_pred, k);
    metrics::QwkResult got = metrics::qwk(y_true, y_pred, k);
    require(std::abs(got.value - want) <= 1e-9,
            "qwk trial " + std::to_string(trial) + ": " + fmt(got.value) +
                " vs brute force " + fmt(want));
  }

  // Levenshtein against plain recursion: exhaustive {a,b} pairs to length 4.
  std::vector<std::string> short_strings;
  for (std::size_t len = 0; len <= 4; ++len) {
    for (std::size_t bits = 0; bits < (std::size_t{1} << len); ++bits) {
      std::string s;
      for (std::size_t i = 0; i < len; ++i) s += (bits >> i) & 1 ? 'b' : 'a';
      short_strings.push_back(s);
    }
  }
  for (const std::string& a : short_strings) {
    for (const std::string& b : short_strings) check_levenshtein_pair(a, b);
  }
  // Random multibyte pairs up to length 6.
  const std::array<const char*, 5> alphabet = {"a", "b", "c", "汉", "字"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string a;
    std::string b;
    for (std::size_t i = rng.pick_index(7); i > 0; --i) a += alphabet[rng.pick_index(5)];
    for (std::size_t i = rng.pick_index(7); i > 0; --i) b += alphabet[rng.pick_index(5)];
    check_levenshtein_pair(a, b);
  }

  // Micro-F1 equals accuracy on single-label inputs.
  for (int trial = 0; trial < 200; ++trial) {
    int k = 2 + static_cast<int>(rng.pick_index(4));
    std::size_t n = 1 + rng.pick_index(100);
    std::vector<int> y_true(n);
    std::vector<int> y_pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      y_true[i] = static_cast<int>(rng.pick_index(static_cast<std::size_t>(k)));
      y_pred[i] = static_cast<int>(rng.pick_index(static_cast<std::size_t>(k)));
    }
    metrics::ConfusionMatrix cm = metrics::ConfusionMatrix::from_labels(y_true, y_pred, k);
    double acc = metrics::accuracy(cm);
    double f1 = metrics::micro_f1(cm).f1;
    require(std::abs(acc - f1) <= 1e-12,
            "micro-F1 " + fmt(f1) + " != accuracy " + fmt(acc));
  }

  // BLEU of a string against itself is exactly 1.
  for (int trial = 0; trial < 200; ++trial) {
    std::string x = make_sentence_text(rng, 1 + rng.pick_index(3));
    double score = metrics::bleu(x, {x});
    require(std::abs(score - 1.0) <= 1e-12, "bleu(x, [x]) = " + fmt(score));
  }

  // Edit-F0.5 fixed case: P = 2/3, R = 1 -> 5/7.
  metrics::EditCounts counts;
  counts.matched = 2;
  counts.hyp_edits = 3;
  counts.ref_edits = 2;
  metrics::EditF05 from_counts = metrics::f05_from_counts(counts);
  require(std::abs(from_counts.f05 - 5.0 / 7.0) <= 1e-6,
          "f05_from_counts = " + fmt(from_counts.f05) + ", want 0.714286");
  metrics::EditF05 from_strings = metrics::edit_f05("abcdef", "xbydzf", "xbydef");
  require(std::abs(from_strings.precision - 2.0 / 3.0) <= 1e-6 &&
              std::abs(from_strings.recall - 1.0) <= 1e-6 &&
              std::abs(from_strings.f05 - 5.0 / 7.0) <= 1e-6,
          "edit_f05 string case: P=" + fmt(from_strings.precision) +
              " R=" + fmt(from_strings.recall) + " F0.5=" + fmt(from_strings.f05));
}

// ---------------------------------------------------------------------------
// 9. End-to-end track3 pipeline smoke through the real binary
// ---------------------------------------------------------------------------

std::string locate_cefe_binary() {
  if (const char* env = std::getenv("CEFE_BIN")) return env;
  // Fallback for direct invocation from the build tree: ../tools/cefe
  // relative to this executable.
  std::error_code ec;
  std::filesystem::path self = std::filesystem::read_symlink("/proc/self/exe", ec);
  if (!ec) {
    std::filesystem::path candidate = self.parent_path().parent_path() / "tools" / "cefe";
    if (std::filesystem::exists(candidate)) return candidate.string();
  }
  throw Failure{"cefe binary not found: set CEFE_BIN"};
}

int run_command(const std::string& command) {
  int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_seed_essays(const std::filesystem::path& path, const std::string& prefix,
                       int count, Rng& rng) {
  Dataset dataset;
  dataset.kind = DatasetKind::Essays;
  for (int i = 0; i < count; ++i) {
    dataset.items.push_back(
        essay_to_json(make_random_essay(prefix + std::to_string(i + 1), rng, 5, 4)));
  }
  save_dataset(dataset, path);
}

void criterion_9() {
  std::string binary = locate_cefe_binary();
  test::TempDir dir;

  Rng rng(20260809);
  write_seed_essays(dir.file("train_seeds.jsonl"), "t", 300, rng);
  write_seed_essays(dir.file("eval_seeds.jsonl"), "e", 30, rng);

  // Label the held-out essays with an independent simulator stream.
  std::string label_cmd = "'" + binary + "' backtranslate --in '" +
                          dir.file("eval_seeds.jsonl").string() + "' --out '" +
                          dir.file("eval_labeled.jsonl").string() +
                          "' --seed 9999 --rich-rate 0.05 --limit-rate 0.25 > '" +
                          dir.file("bt.out").string() + "' 2>&1";
  require(run_command(label_cmd) == 0, "backtranslate failed to label the eval set");

  std::string pipeline_cmd =
      "'" + binary + "' pipeline track3 --in '" + dir.file("train_seeds.jsonl").string() +
      "' --eval '" + dir.file("eval_labeled.jsonl").string() + "' --workdir '" +
      dir.file("work").string() +
      "' --seed 42 --rich-rate 0.05 --limit-rate 0.25 --epochs 100 --lr 0.5"
      " --dim 65536 --mode nsp --mu 1.0 --beta 0.1 > '" +
      dir.file("run.out").string() + "' 2>&1";
  require(run_command(pipeline_cmd) == 0, "pipeline track3 exited nonzero");

  json report = json::parse(slurp(dir.file("work") / "report.json"));
  double accuracy = report["evaluate"]["values"]["acc"].get<double>();
  std::size_t n = report["evaluate"]["n"].get<std::size_t>();
  require(n == 90, "evaluated " + std::to_string(n) + " essays, want 90");
  require(accuracy >= 0.80, "held-out accuracy " + fmt(accuracy) + " < 0.80");
  g_note = "accuracy " + fmt(accuracy) + " on 90 held-out essays";

  std::string first = slurp(dir.file("work") / "report.json");
  require(run_command(pipeline_cmd) == 0, "second pipeline run exited nonzero");
  require(slurp(dir.file("work") / "report.json") == first,
          "same-seed reruns produced different reports");
}

// ---------------------------------------------------------------------------
// 10. Pair-builder balance
// ---------------------------------------------------------------------------

void check_no_shared_texts(const std::vector<pairs::PairExample>& examples) {
  std::set<std::string> positives;
  std::set<std::string> negatives;
  for (const pairs::PairExample& example : examples) {
    (example.label == 1 ? positives : negatives).insert(example.text_a);
  }
  for (const std::string& text : positives) {
    require(negatives.find(text) == negatives.end(),
            "a sentence appears under both labels");
  }
}

void criterion_10() {
  // Wrong-correct on a 50-pair corpus -> exactly 50/50.
  std::vector<pairs::CorrectionPair> corrections;
  for (int i = 0; i < 50; ++i) {
    std::string stem = std::string(kClauses[static_cast<std::size_t>(i % 40)]) +
                       std::to_string(i / 40 + 1);
    corrections.push_back(
        {"w" + std::to_string(i + 1), stem + "的的。", stem + "的。"});
  }
  pairs::PairBuildResult wc =
      pairs::build_wrong_correct(corrections, FineError::misorder());
  require(wc.report.positives == 50 && wc.report.negatives == 50,
          "wrong-correct produced " + std::to_string(wc.report.positives) + "/" +
              std::to_string(wc.report.negatives) + ", want 50/50");
  check_no_shared_texts(wc.examples);

  // Variant-error on a 194/196 split -> |pos - neg| <= 1.
  std::vector<Sentence> target;
  std::vector<Sentence> others;
  for (int i = 0; i < 194; ++i) {
    target.push_back({"t" + std::to_string(i + 1),
                      "语序不当的目标句子" + std::to_string(i + 1) + "。"});
  }
  for (int i = 0; i < 196; ++i) {
    others.push_back({"o" + std::to_string(i + 1),
                      "其他错误类型的句子" + std::to_string(i + 1) + "。"});
  }
  Rng rng(20260810);
  pairs::PairBuildResult ve =
      pairs::build_variant_error(target, others, FineError::misorder(), rng);
  std::size_t pos = ve.report.positives;
  std::size_t neg = ve.report.negatives;
  require((pos > neg ? pos - neg : neg - pos) <= 1,
          "variant-error imbalance: " + std::to_string(pos) + "/" + std::to_string(neg));
  require(pos + neg == ve.examples.size(), "report counts disagree with the examples");
  check_no_shared_texts(ve.examples);
}

// ---------------------------------------------------------------------------
// 11. Fusion monotonicity and gating
// ---------------------------------------------------------------------------

bool is_subset(const fusion::FusedLabels& small, const fusion::FusedLabels& big) {
  return std::includes(big.coarse.begin(), big.coarse.end(), small.coarse.begin(),
                       small.coarse.end()) &&
         std::includes(big.fine.begin(), big.fine.end(), small.fine.begin(),
                       small.fine.end());
}

void criterion_11() {
  Rng rng(20260811);
  fusion::FusionConfig cfg;
  cfg.mapping.misorder_parent = CoarseError::Coll;
  cfg.mapping.custom["char-wrong"] = CoarseError::Char;

  for (int trial = 0; trial < 300; ++trial) {
    fusion::CoarsePrediction coarse;
    coarse.id = "r" + std::to_string(trial);
    for (CoarseError category : kCoarseErrors) {
      if (rng.bernoulli(0.8)) coarse.probs[category] = rng.next_unit();
    }
    fusion::FinePrediction fine;
    fine.id = coarse.id;
    fine.strategy = pairs::PairStrategy::VariantError;
    fine.probs[FineError::misorder()] = rng.next_unit();
    fine.probs[FineError::redu_other()] = rng.next_unit();
    fine.probs[FineError::other("char-wrong")] = rng.next_unit();

    fusion::FusedLabels base = fusion::fuse(coarse, fine, cfg);

    // Gate invariant: every fine label with a mapped parent implies the
    // parent coarse label is present.
    for (const FineError& label : base.fine) {
      auto parent = cfg.mapping.parent_of(label);
      if (parent) {
        require(base.coarse.count(*parent) == 1,
                "fine label '" + label.name + "' passed without its parent");
      }
    }

    // Monotonicity: raising any single probability never removes labels.
    fusion::CoarsePrediction bumped_coarse = coarse;
    fusion::FinePrediction bumped_fine = fine;
    if (!coarse.probs.empty() && rng.bernoulli(0.5)) {
      auto it = bumped_coarse.probs.begin();
      std::advance(it, rng.pick_index(bumped_coarse.probs.size()));
      it->second = std::min(1.0, it->second + 0.5 * rng.next_unit());
    } else {
      auto it = bumped_fine.probs.begin();
      std::advance(it, rng.pick_index(bumped_fine.probs.size()));
      it->second = std::min(1.0, it->second + 0.5 * rng.next_unit());
    }
    fusion::FusedLabels bumped = fusion::fuse(bumped_coarse, bumped_fine, cfg);
    require(is_subset(base, bumped), "raising a probability removed a label");
  }

  // Gating fixture: misorder above threshold stays out until its parent
  // coarse label is present, and flows through once the gate is dropped.
  fusion::FinePrediction fine;
  fine.id = "g";
  fine.strategy = pairs::PairStrategy::WrongCorrect;
  fine.probs[FineError::misorder()] = 0.9;
  fusion::CoarsePrediction weak;
  weak.id = "g";
  weak.probs[CoarseError::Coll] = 0.3;
  require(fusion::fuse(weak, fine, cfg).fine.empty(),
          "misorder passed the gate without its parent");
  fusion::CoarsePrediction strong = weak;
  strong.probs[CoarseError::Coll] = 0.7;
  require(fusion::fuse(strong, fine, cfg).fine.count(FineError::misorder()) == 1,
          "misorder missing although its parent is present");
  fusion::FusionConfig ungated = cfg;
  ungated.fine_requires_coarse = false;
  require(fusion::fuse(weak, fine, ungated).fine.count(FineError::misorder()) == 1,
          "misorder missing with the gate disabled");
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* title;
    std::function<void()> body;
    double budget_seconds;  // 0 = no bound
  };
  const std::vector<Entry> entries = {
      {1, "multi-error count distribution matches its binomial law", criterion_1,
       30.0},
      {2, "SCE with beta=0 reduces to mu * CE", criterion_2, 0.0},
      {3, "analytic SCE gradient matches finite differences", criterion_3, 10.0},
      {4, "RCE matches its closed form at A = -4", criterion_4, 0.0},
      {5, "oversampling balances {12,45,43} to {45,45,45}", criterion_5, 0.0},
      {6, "back-translation labels 43 essays as 129 records", criterion_6, 0.0},
      {7, "NSP pairing, aggregation, and tie-break laws hold", criterion_7, 0.0},
      {8, "metric implementations match brute-force oracles", criterion_8, 0.0},
      {9, "track3 pipeline separates simulator fluency classes", criterion_9, 120.0},
      {10, "pair builders balance skewed fine-grained corpora", criterion_10, 0.0},
      {11, "fusion is monotone and gates fine labels", criterion_11, 0.0},
  };

  bool all_passed = true;
  for (const Entry& entry : entries) {
    auto start = std::chrono::steady_clock::now();
    std::string failure;
    g_note.clear();
    try {
      entry.body();
    } catch (const Failure& f) {
      failure = f.message;
    } catch (const std::exception& e) {
      failure = std::string("unexpected exception: ") + e.what();
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (failure.empty() && entry.budget_seconds > 0.0 &&
        elapsed > entry.budget_seconds) {
      failure = "runtime " + fmt(elapsed) + "s exceeds " + fmt(entry.budget_seconds) +
                "s budget";
    }
    if (failure.empty()) {
      std::string note = g_note.empty() ? "" : " — " + g_note;
      std::printf("criterion %2d: PASS  %s%s (%.2fs)\n", entry.id, entry.title,
                  note.c_str(), elapsed);
    } else {
      std::printf("criterion %2d: FAIL  %s — %s (%.2fs)\n", entry.id, entry.title,
                  failure.c_str(), elapsed);
      all_passed = false;
    }
  }
  return all_passed ? 0 : 1;
}
