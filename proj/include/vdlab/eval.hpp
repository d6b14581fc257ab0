#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vdlab/classify.hpp"
#include "vdlab/corpus.hpp"
#include "vdlab/split.hpp"

namespace vdlab {

struct ConfusionCounts {
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::int64_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct TruthEntry {
  std::string id;
  bool positive = false;
};

std::vector<TruthEntry> truth_from(const LabeledSet& set);

/// hard: trust explicit hard labels where present, else threshold the score
/// at 0.5. score: sweep thresholds over the scores themselves.
enum class EvalMode { hard, score };

/// Predict positive iff score >= t. UserError listing ids without predictions.
ConfusionCounts confusion_at_threshold(const PredictionSet& pred,
                                       const std::vector<TruthEntry>& truth, double t);

/// Confusion from hard labels (argmax-collapsed sets carry them; plain binary
/// scores fall back to the 0.5 threshold).
ConfusionCounts hard_confusion(const PredictionSet& pred,
                               const std::vector<TruthEntry>& truth);

struct DerivedMetrics {
  double acc = 0, f1 = 0, precision = 0, recall = 0, fpr = 0;
  std::vector<std::string> degenerate;  // metrics whose denominator was 0
};

/// acc=(tp+tn)/total, precision=tp/(tp+fp), recall=tp/(tp+fn),
/// f1=2pr/(p+r), fpr=fp/(fp+tn); 0/0 is 0 and flagged.
DerivedMetrics derive_metrics(const ConfusionCounts& c);

struct VdResult {
  double vd_s = 1.0;
  double threshold = 0.0;  // +infinity when only "flag nothing" satisfies r
};

/// False negative rate subject to FPR <= r, 0 <= r <= 1.
/// score mode: candidate thresholds are the distinct scores plus +infinity;
/// returns the minimum feasible FNR and the lowest threshold achieving it.
/// hard mode: FNR of the hard confusion if its FPR <= r, else the
/// convention value 1.0 (threshold +infinity).
VdResult vd_score(const PredictionSet& pred, const std::vector<TruthEntry>& truth,
                  double r, EvalMode mode);

/// One table row: hard-label confusion plus mode-appropriate VD-S. In score
/// mode the confusion stays at the 0.5 operating point while VD-S sweeps.
struct MetricsReport {
  std::string model;
  std::string dataset;
  EvalMode mode = EvalMode::hard;
  double r = 0.2;
  ConfusionCounts confusion;
  DerivedMetrics metrics;
  double vd_s = 1.0;
  double vd_threshold = 0.0;
};

MetricsReport evaluate_predictions(const PredictionSet& pred,
                                   const std::vector<TruthEntry>& truth, double r,
                                   EvalMode mode, const std::string& model_name,
                                   const std::string& dataset_name);

/// Which CWEs a model's true positives land on, over a mixed test set.
struct TPBreakdown {
  int model_cwe = 0;
  std::int64_t test_vulnerable = 0;
  std::vector<CweCount> top;  // descending count, ties ascending CWE id
  std::int64_t rest = 0;
  std::int64_t total = 0;  // sum(top) + rest
  std::int64_t model_cwe_tp = 0;
};

TPBreakdown tp_breakdown(const PredictionSet& pred, const CorpusIndex& index,
                         const std::vector<TruthEntry>& truth, int model_cwe,
                         std::size_t top_n = 10);

/// Hard-label outcome over (vulnerable, fixed-counterpart) pairs. Integer
/// counts partition the pairs exactly; fractions derive from them.
struct PairwiseReport {
  std::int64_t pairs = 0;
  std::int64_t correct = 0;        // vulnerable 1, benign 0
  std::int64_t both_vuln = 0;      // both 1
  std::int64_t both_benign = 0;    // both 0
  std::int64_t reversed = 0;       // vulnerable 0, benign 1

  double p_c() const;
  double p_v() const;
  double p_b() const;
  double p_r() const;
};

PairwiseReport pairwise_eval(const PredictionSet& pred,
                             const std::vector<std::pair<std::string, std::string>>& pairs);

/// All complete (vulnerable id, fixed id) links in the corpus, in vulnerable
/// record order.
std::vector<std::pair<std::string, std::string>> collect_pairs(const Corpus& corpus);

}  // namespace vdlab
