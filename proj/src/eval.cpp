#include "vdlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "vdlab/error.hpp"

namespace vdlab {
namespace {

const Prediction& lookup(const PredictionSet& pred, const std::vector<TruthEntry>& truth,
                         std::size_t i) {
  const auto it = pred.entries.find(truth[i].id);
  if (it != pred.entries.end()) return it->second;
  std::string msg = "missing predictions for:";
  int shown = 0;
  for (const auto& t : truth) {
    if (pred.entries.count(t.id)) continue;
    msg += " " + t.id;
    if (++shown == 10) break;
  }
  fail(msg);
}

int hard_label(const Prediction& p) {
  if (p.hard >= 0) return p.hard;
  return p.score >= 0.5 ? 1 : 0;
}

double ratio_or_zero(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::vector<TruthEntry> truth_from(const LabeledSet& set) {
  std::vector<TruthEntry> truth;
  truth.reserve(set.entries.size());
  for (const auto& e : set.entries) truth.push_back({e.id, e.label != 0});
  return truth;
}

ConfusionCounts confusion_at_threshold(const PredictionSet& pred,
                                       const std::vector<TruthEntry>& truth, double t) {
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool positive = lookup(pred, truth, i).score >= t;
    if (truth[i].positive)
      (positive ? c.tp : c.fn) += 1;
    else
      (positive ? c.fp : c.tn) += 1;
  }
  return c;
}

ConfusionCounts hard_confusion(const PredictionSet& pred,
                               const std::vector<TruthEntry>& truth) {
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool positive = hard_label(lookup(pred, truth, i)) == 1;
    if (truth[i].positive)
      (positive ? c.tp : c.fn) += 1;
    else
      (positive ? c.fp : c.tn) += 1;
  }
  return c;
}

DerivedMetrics derive_metrics(const ConfusionCounts& c) {
  DerivedMetrics m;
  auto frac = [&m](std::int64_t num, std::int64_t den, const char* name) {
    if (den == 0) {
      m.degenerate.push_back(name);
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.acc = frac(c.tp + c.tn, c.total(), "acc");
  m.precision = frac(c.tp, c.tp + c.fp, "precision");
  m.recall = frac(c.tp, c.tp + c.fn, "recall");
  if (m.precision + m.recall == 0.0) {
    m.degenerate.push_back("f1");
    m.f1 = 0.0;
  } else {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  m.fpr = frac(c.fp, c.fp + c.tn, "fpr");
  return m;
}

VdResult vd_score(const PredictionSet& pred, const std::vector<TruthEntry>& truth,
                  double r, EvalMode mode) {
  if (!(r >= 0.0 && r <= 1.0)) fail("FPR tolerance r must be within [0, 1]");

  if (mode == EvalMode::hard) {
    const ConfusionCounts c = hard_confusion(pred, truth);
    const double fpr = ratio_or_zero(c.fp, c.fp + c.tn);
    if (fpr <= r)
      return {ratio_or_zero(c.fn, c.tp + c.fn), 0.5};
    return {1.0, std::numeric_limits<double>::infinity()};
  }

  // Score pairs sorted ascending; threshold candidates are the distinct
  // scores plus +infinity. Predict positive iff score >= t, so at candidate
  // s the false negatives are the positives strictly below s.
  std::vector<std::pair<double, bool>> scored;
  scored.reserve(truth.size());
  std::int64_t total_pos = 0, total_neg = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    scored.push_back({lookup(pred, truth, i).score, truth[i].positive});
    (truth[i].positive ? total_pos : total_neg) += 1;
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  VdResult best{2.0, 0.0};  // sentinel; +infinity candidate always replaces it
  std::int64_t pos_below = 0, neg_below = 0;
  auto consider = [&](double fn, double fp, double t) {
    const double fpr = total_neg == 0 ? 0.0 : fp / static_cast<double>(total_neg);
    const double fnr = total_pos == 0 ? 0.0 : fn / static_cast<double>(total_pos);
    if (fpr <= r && fnr < best.vd_s) best = {fnr, t};
  };
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (i == 0 || scored[i].first != scored[i - 1].first)
      consider(static_cast<double>(pos_below),
               static_cast<double>(total_neg - neg_below), scored[i].first);
    (scored[i].second ? pos_below : neg_below) += 1;
  }
  consider(static_cast<double>(total_pos), 0.0,
           std::numeric_limits<double>::infinity());
  return best;
}

MetricsReport evaluate_predictions(const PredictionSet& pred,
                                   const std::vector<TruthEntry>& truth, double r,
                                   EvalMode mode, const std::string& model_name,
                                   const std::string& dataset_name) {
  MetricsReport report;
  report.model = model_name;
  report.dataset = dataset_name;
  report.mode = mode;
  report.r = r;
  report.confusion = mode == EvalMode::hard ? hard_confusion(pred, truth)
                                            : confusion_at_threshold(pred, truth, 0.5);
  report.metrics = derive_metrics(report.confusion);
  const VdResult vd = vd_score(pred, truth, r, mode);
  report.vd_s = vd.vd_s;
  report.vd_threshold = vd.threshold;
  return report;
}

TPBreakdown tp_breakdown(const PredictionSet& pred, const CorpusIndex& index,
                         const std::vector<TruthEntry>& truth, int model_cwe,
                         std::size_t top_n) {
  TPBreakdown out;
  out.model_cwe = model_cwe;

  std::map<int, std::int64_t> counts;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!truth[i].positive) continue;
    ++out.test_vulnerable;
    if (hard_label(lookup(pred, truth, i)) != 1) continue;
    ++out.total;
    counts[index.at(truth[i].id).primary_cwe()] += 1;
  }
  out.model_cwe_tp = counts.count(model_cwe) ? counts[model_cwe] : 0;

  std::vector<CweCount> ranked;
  for (const auto& [cwe, n] : counts) ranked.push_back({cwe, n});
  std::stable_sort(ranked.begin(), ranked.end(), [](const CweCount& a, const CweCount& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.cwe < b.cwe;
  });
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (i < top_n)
      out.top.push_back(ranked[i]);
    else
      out.rest += ranked[i].count;
  }
  return out;
}

double PairwiseReport::p_c() const { return ratio_or_zero(correct, pairs); }
double PairwiseReport::p_v() const { return ratio_or_zero(both_vuln, pairs); }
double PairwiseReport::p_b() const { return ratio_or_zero(both_benign, pairs); }
double PairwiseReport::p_r() const { return ratio_or_zero(reversed, pairs); }

PairwiseReport pairwise_eval(
    const PredictionSet& pred,
    const std::vector<std::pair<std::string, std::string>>& pairs) {
  PairwiseReport report;
  report.pairs = static_cast<std::int64_t>(pairs.size());
  for (const auto& [vuln_id, benign_id] : pairs) {
    const auto vit = pred.entries.find(vuln_id);
    const auto bit = pred.entries.find(benign_id);
    if (vit == pred.entries.end() || bit == pred.entries.end())
      fail("pair (" + vuln_id + ", " + benign_id + ") lacks predictions");
    const int v = hard_label(vit->second);
    const int b = hard_label(bit->second);
    if (v == 1 && b == 0) ++report.correct;
    else if (v == 1 && b == 1) ++report.both_vuln;
    else if (v == 0 && b == 0) ++report.both_benign;
    else ++report.reversed;
  }
  return report;
}

std::vector<std::pair<std::string, std::string>> collect_pairs(const Corpus& corpus) {
  std::unordered_map<std::string, std::pair<std::string, std::string>> by_pair;
  std::vector<std::string> order;
  for (const auto& r : corpus.records) {
    if (r.pair_id.empty()) continue;
    auto& slot = by_pair[r.pair_id];
    if (r.vulnerable()) {
      if (slot.first.empty() && slot.second.empty()) order.push_back(r.pair_id);
      slot.first = r.id;
    } else {
      if (slot.first.empty() && slot.second.empty()) order.push_back(r.pair_id);
      slot.second = r.id;
    }
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& pair_id : order) {
    const auto& slot = by_pair[pair_id];
    if (!slot.first.empty() && !slot.second.empty()) pairs.push_back(slot);
  }
  return pairs;
}

}  // namespace vdlab
