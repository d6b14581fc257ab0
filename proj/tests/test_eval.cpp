#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "vdlab/error.hpp"
#include "vdlab/eval.hpp"
#include "vdlab/rng.hpp"

using namespace vdlab;
using vdlab::testing::corpus_of;
using vdlab::testing::rec;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Builds a prediction/truth pair realizing an exact confusion matrix:
/// hits score 0.9, misses 0.1.
struct Fixture {
  PredictionSet pred;
  std::vector<TruthEntry> truth;
};

Fixture from_confusion(std::int64_t tp, std::int64_t tn, std::int64_t fp,
                       std::int64_t fn) {
  Fixture f;
  f.pred.kind = ModelKind::binary;
  f.pred.class_labels = {0, 1};
  std::int64_t n = 0;
  auto add = [&](bool positive, double score, std::int64_t count) {
    for (std::int64_t i = 0; i < count; ++i) {
      const std::string id = "r" + std::to_string(n++);
      f.truth.push_back({id, positive});
      f.pred.entries[id] = {score, {}, -1};
    }
  };
  add(true, 0.9, tp);
  add(false, 0.1, tn);
  add(false, 0.9, fp);
  add(true, 0.1, fn);
  return f;
}

}  // namespace

TEST_CASE("confusion at a threshold counts the four cells") {
  const Fixture f = from_confusion(3, 4, 2, 1);
  const ConfusionCounts c = confusion_at_threshold(f.pred, f.truth, 0.5);
  CHECK(c == ConfusionCounts{3, 4, 2, 1});
  CHECK(c.total() == 10);

  // Threshold below every score flags everything.
  const ConfusionCounts all = confusion_at_threshold(f.pred, f.truth, 0.0);
  CHECK(all.tp == 4);
  CHECK(all.tn == 0);
  CHECK(all.fp == 6);
  CHECK(all.fn == 0);

  PredictionSet missing = f.pred;
  missing.entries.erase("r0");
  CHECK_THROWS_WITH_AS(confusion_at_threshold(missing, f.truth, 0.5),
                       doctest::Contains("r0"), UserError);
}

TEST_CASE("hard labels beat the score threshold when present") {
  PredictionSet pred;
  pred.kind = ModelKind::binary;
  pred.class_labels = {0, 1};
  pred.entries["a"] = {0.9, {}, 0};   // high score, explicit benign
  pred.entries["b"] = {0.1, {}, 1};   // low score, explicit vulnerable
  pred.entries["c"] = {0.7, {}, -1};  // falls back to the 0.5 threshold
  const std::vector<TruthEntry> truth = {{"a", false}, {"b", true}, {"c", true}};
  const ConfusionCounts c = hard_confusion(pred, truth);
  CHECK(c == ConfusionCounts{2, 1, 0, 0});
}

// Reference confusion rows with their published four-decimal derived values.
struct GoldenRow {
  const char* model;
  const char* test;
  std::int64_t tp, tn, fp, fn;
  double vd_s, acc, f1, prec, rec, fpr;
};

static const GoldenRow kGoldenRows[] = {
    {"m_all", "d_test_balanced", 1270, 985, 503, 218, 1.0000, 0.7577, 0.7789, 0.7163, 0.8535, 0.3380},
    {"m_125", "d_test_125", 137, 128, 22, 13, 0.0867, 0.8833, 0.8867, 0.8616, 0.9133, 0.1467},
    {"m_all", "d_test_125", 136, 105, 45, 14, 1.0000, 0.8033, 0.8218, 0.7514, 0.9067, 0.3000},
    {"m_787", "d_test_787", 120, 108, 24, 12, 0.0909, 0.8636, 0.8696, 0.8333, 0.9091, 0.1818},
    {"m_all", "d_test_787", 117, 99, 33, 15, 1.0000, 0.8182, 0.8298, 0.7800, 0.8864, 0.2500},
    {"m_119", "d_test_119", 103, 100, 20, 17, 0.1417, 0.8458, 0.8477, 0.8374, 0.8583, 0.1667},
    {"m_all", "d_test_119", 99, 78, 42, 21, 1.0000, 0.7375, 0.7586, 0.7021, 0.8250, 0.3500},
    {"m_20", "d_test_20", 87, 93, 21, 27, 0.2368, 0.7895, 0.7838, 0.8056, 0.7632, 0.1842},
    {"m_all", "d_test_20", 99, 76, 38, 15, 1.0000, 0.7675, 0.7888, 0.7226, 0.8684, 0.3333},
    {"m_416", "d_test_416", 77, 79, 13, 15, 0.1630, 0.8478, 0.8462, 0.8556, 0.8370, 0.1413},
    {"m_all", "d_test_416", 72, 61, 31, 20, 1.0000, 0.7228, 0.7385, 0.6990, 0.7826, 0.3370},
};

TEST_CASE("derived metrics reproduce the reference rows") {
  for (const auto& row : kGoldenRows) {
    CAPTURE(row.model);
    CAPTURE(row.test);
    const DerivedMetrics m = derive_metrics({row.tp, row.tn, row.fp, row.fn});
    CHECK(std::abs(m.acc - row.acc) <= 5e-5);
    CHECK(std::abs(m.f1 - row.f1) <= 5e-5);
    CHECK(std::abs(m.precision - row.prec) <= 5e-5);
    CHECK(std::abs(m.recall - row.rec) <= 5e-5);
    CHECK(std::abs(m.fpr - row.fpr) <= 5e-5);
    CHECK(m.degenerate.empty());
  }
}

TEST_CASE("hard-mode vd_score follows the FPR-budget convention") {
  for (const auto& row : kGoldenRows) {
    CAPTURE(row.model);
    CAPTURE(row.test);
    const Fixture f = from_confusion(row.tp, row.tn, row.fp, row.fn);
    const VdResult vd = vd_score(f.pred, f.truth, 0.2, EvalMode::hard);
    CHECK(std::abs(vd.vd_s - row.vd_s) <= 5e-5);
    const double fpr = static_cast<double>(row.fp) / static_cast<double>(row.fp + row.tn);
    if (fpr > 0.2) {
      CHECK(vd.vd_s == 1.0);
      CHECK(vd.threshold == kInf);
    } else {
      CHECK(vd.threshold == 0.5);
    }
  }
}

TEST_CASE("degenerate denominators are zero and flagged") {
  const DerivedMetrics no_pos_pred = derive_metrics({0, 5, 0, 3});
  CHECK(no_pos_pred.precision == 0.0);
  CHECK(no_pos_pred.f1 == 0.0);
  const auto& d = no_pos_pred.degenerate;
  CHECK(std::count(d.begin(), d.end(), "precision") == 1);
  CHECK(std::count(d.begin(), d.end(), "f1") == 1);
  CHECK(std::count(d.begin(), d.end(), "recall") == 0);

  const DerivedMetrics no_neg = derive_metrics({2, 0, 0, 1});
  CHECK(no_neg.fpr == 0.0);
  CHECK(std::count(no_neg.degenerate.begin(), no_neg.degenerate.end(), "fpr") == 1);
}

TEST_CASE("score-mode vd_score finds the best feasible threshold") {
  // Positives {0.9, 0.5, 0.2}, negatives {0.7, 0.4, 0.3, 0.1}, r = 0.25:
  // only t >= 0.5 keeps FPR <= 1/4; t = 0.5 misses one of three positives.
  PredictionSet pred;
  pred.kind = ModelKind::binary;
  pred.class_labels = {0, 1};
  std::vector<TruthEntry> truth;
  const std::pair<double, bool> samples[] = {{0.9, true},  {0.5, true},  {0.2, true},
                                             {0.7, false}, {0.4, false}, {0.3, false},
                                             {0.1, false}};
  int n = 0;
  for (const auto& [score, positive] : samples) {
    const std::string id = "s" + std::to_string(n++);
    truth.push_back({id, positive});
    pred.entries[id] = {score, {}, -1};
  }

  const VdResult vd = vd_score(pred, truth, 0.25, EvalMode::score);
  CHECK(vd.vd_s == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(vd.threshold == 0.5);

  // r = 0: only thresholds with zero false positives qualify.
  const VdResult strict = vd_score(pred, truth, 0.0, EvalMode::score);
  CHECK(strict.vd_s == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(strict.threshold == 0.9);

  // r = 1: flagging everything is allowed, so nothing is missed.
  const VdResult lax = vd_score(pred, truth, 1.0, EvalMode::score);
  CHECK(lax.vd_s == 0.0);
  CHECK(lax.threshold == 0.1);

  CHECK_THROWS_AS(vd_score(pred, truth, -0.1, EvalMode::score), UserError);
  CHECK_THROWS_AS(vd_score(pred, truth, 1.5, EvalMode::score), UserError);
}

namespace {

/// Brute force over every distinct score plus +infinity, O(n^2).
VdResult vd_brute_force(const std::vector<std::pair<double, bool>>& samples, double r) {
  std::vector<double> candidates;
  for (const auto& [score, positive] : samples) candidates.push_back(score);
  candidates.push_back(kInf);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  VdResult best{2.0, 0.0};
  for (const double t : candidates) {
    std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (const auto& [score, positive] : samples) {
      const bool flagged = score >= t;
      if (positive)
        (flagged ? tp : fn) += 1;
      else
        (flagged ? fp : tn) += 1;
    }
    const double fpr = fp + tn == 0 ? 0.0 : static_cast<double>(fp) / (fp + tn);
    const double fnr = fn + tp == 0 ? 0.0 : static_cast<double>(fn) / (fn + tp);
    if (fpr <= r && fnr < best.vd_s) best = {fnr, t};
  }
  return best;
}

}  // namespace

TEST_CASE("score-mode vd_score agrees with brute force on random sets") {
  Rng rng(2024);
  const double budgets[] = {0.0, 0.1, 0.25, 0.5, 1.0};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::pair<double, bool>> samples;
    const auto count = rng.below(11);  // up to 10 samples, possibly none
    for (std::uint64_t i = 0; i < count; ++i)
      samples.push_back({static_cast<double>(rng.below(11)) / 10.0, rng.below(2) == 1});

    PredictionSet pred;
    pred.kind = ModelKind::binary;
    pred.class_labels = {0, 1};
    std::vector<TruthEntry> truth;
    int n = 0;
    for (const auto& [score, positive] : samples) {
      const std::string id = "x" + std::to_string(n++);
      truth.push_back({id, positive});
      pred.entries[id] = {score, {}, -1};
    }

    for (const double r : budgets) {
      const VdResult got = vd_score(pred, truth, r, EvalMode::score);
      const VdResult want = vd_brute_force(samples, r);
      CAPTURE(trial);
      CAPTURE(r);
      CHECK(got.vd_s == want.vd_s);
      CHECK(got.threshold == want.threshold);
    }
  }
}

TEST_CASE("tp_breakdown groups true positives by primary CWE") {
  // Vulnerable records across four CWEs; the model catches some of each.
  std::vector<FunctionRecord> records;
  std::vector<TruthEntry> truth;
  PredictionSet pred;
  pred.kind = ModelKind::binary;
  pred.class_labels = {0, 1};
  int n = 0;
  auto add = [&](int cwe, int caught, int missed) {
    for (int i = 0; i < caught + missed; ++i) {
      const std::string id = "v" + std::to_string(n++);
      records.push_back(rec(id, id + "();", 1, {cwe}));
      truth.push_back({id, true});
      pred.entries[id] = {i < caught ? 0.9 : 0.1, {}, -1};
    }
  };
  add(125, 5, 1);
  add(787, 3, 0);
  add(119, 3, 2);
  add(20, 1, 0);
  // A flagged benign record must not appear in the breakdown.
  records.push_back(rec("benign", "b();", 0));
  truth.push_back({"benign", false});
  pred.entries["benign"] = {0.9, {}, -1};

  const Corpus c = corpus_of(std::move(records));
  const CorpusIndex index(c);
  const TPBreakdown b = tp_breakdown(pred, index, truth, 125, 3);

  CHECK(b.model_cwe == 125);
  CHECK(b.test_vulnerable == 15);
  CHECK(b.total == 12);
  CHECK(b.model_cwe_tp == 5);
  REQUIRE(b.top.size() == 3);
  CHECK(b.top[0] == CweCount{125, 5});
  // 787 and 119 tie at 3; ascending id breaks the tie.
  CHECK(b.top[1] == CweCount{119, 3});
  CHECK(b.top[2] == CweCount{787, 3});
  CHECK(b.rest == 1);  // CWE-20
}

TEST_CASE("pairwise outcomes partition the pairs") {
  PredictionSet pred;
  pred.kind = ModelKind::binary;
  pred.class_labels = {0, 1};
  auto put = [&](const std::string& id, int hard) {
    pred.entries[id] = {hard ? 0.9 : 0.1, {}, hard};
  };
  put("v1", 1);
  put("b1", 0);  // correct
  put("v2", 1);
  put("b2", 1);  // both flagged
  put("v3", 0);
  put("b3", 0);  // both benign
  put("v4", 0);
  put("b4", 1);  // reversed

  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"v1", "b1"}, {"v2", "b2"}, {"v3", "b3"}, {"v4", "b4"}};
  const PairwiseReport r = pairwise_eval(pred, pairs);
  CHECK(r.pairs == 4);
  CHECK(r.correct == 1);
  CHECK(r.both_vuln == 1);
  CHECK(r.both_benign == 1);
  CHECK(r.reversed == 1);
  CHECK(r.correct + r.both_vuln + r.both_benign + r.reversed == r.pairs);
  CHECK(r.p_c() == 0.25);

  CHECK_THROWS_AS(pairwise_eval(pred, {{"v1", "ghost"}}), UserError);
}

TEST_CASE("collect_pairs keeps only complete links in record order") {
  const Corpus c = corpus_of({
      rec("v1", "1", 1, {125}, "pair:0"),
      rec("v2", "2", 1, {125}, "pair:1"),  // counterpart missing
      rec("v3", "3", 1, {787}, "pair:2"),
      rec("b1", "4", 0, {}, "pair:0"),
      rec("b3", "5", 0, {}, "pair:2"),
      rec("loose", "6", 0),
  });
  const auto pairs = collect_pairs(c);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == std::pair<std::string, std::string>{"v1", "b1"});
  CHECK(pairs[1] == std::pair<std::string, std::string>{"v3", "b3"});
}

TEST_CASE("evaluate_predictions assembles a full row") {
  const Fixture f = from_confusion(137, 128, 22, 13);
  const MetricsReport row =
      evaluate_predictions(f.pred, f.truth, 0.2, EvalMode::hard, "m_125", "d_test_125");
  CHECK(row.model == "m_125");
  CHECK(row.dataset == "d_test_125");
  CHECK(row.mode == EvalMode::hard);
  CHECK(row.r == 0.2);
  CHECK(row.confusion == ConfusionCounts{137, 128, 22, 13});
  CHECK(row.vd_s == doctest::Approx(13.0 / 150.0).epsilon(1e-12));
  CHECK(row.vd_threshold == 0.5);

  const MetricsReport swept =
      evaluate_predictions(f.pred, f.truth, 0.2, EvalMode::score, "m_125", "d_test_125");
  CHECK(swept.confusion == row.confusion);  // same 0.5 operating point
  CHECK(swept.vd_s <= row.vd_s);            // sweeping can only help
}

TEST_CASE("truth_from treats any nonzero label as positive") {
  LabeledSet set;
  set.entries = {{"a", 0}, {"b", 1}, {"c", 787}};
  const auto truth = truth_from(set);
  CHECK_FALSE(truth[0].positive);
  CHECK(truth[1].positive);
  CHECK(truth[2].positive);
}
