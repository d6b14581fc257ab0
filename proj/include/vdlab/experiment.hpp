#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vdlab/classify.hpp"
#include "vdlab/corpus.hpp"
#include "vdlab/report.hpp"
#include "vdlab/split.hpp"
#include "vdlab/synth.hpp"

namespace vdlab {

// End-to-end pipeline driver: one config describes the corpus inputs, the
// split, the classifier, and the evaluation grid; each command reads and
// writes artifacts under config.out. Every run is a pure function of the
// config, so reruns with an equal config digest are byte-identical.

struct InputSpec {
  std::string path;
  std::string schema;  // key understood by schema_for()
};

struct ClassifierConfig {
  int epochs = 10;
  double learning_rate = 0.1;
  double l2 = 1e-6;
  std::uint32_t dim = 1u << 18;
};

struct ExperimentConfig {
  std::vector<InputSpec> inputs;  // mutually exclusive with synthetic
  bool has_synthetic = false;
  SyntheticSpec synthetic;

  std::uint64_t seed = 1;
  double train_ratio = 0.9;
  std::int64_t max_len = 4000;
  std::vector<int> top_cwes;  // per-CWE models (RQ1) / classes (RQ2)
  double r = 0.2;             // FPR budget for the report grids
  double pairwise_r = 0.005;  // stricter budget for paired evaluation
  ClassifierConfig classifier;
  std::string mode = "rq1";  // rq1 | rq2 | evaluate-external
  std::string out = "run";
  bool allow_empty_cwe_sets = false;
};

/// Parse a config JSON document. Unknown keys are rejected so typos cannot
/// silently fall back to defaults.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON rendering (fixed key order, defaults filled in).
std::string config_to_json(const ExperimentConfig& cfg);

/// MD5 of the canonical rendering; stamped into every artifact.
std::string config_digest(const ExperimentConfig& cfg);

struct Prepared {
  Corpus corpus;
  std::string corpus_digest;
  DatasetSplit v_split;
  DatasetSplit nv_split;
};

/// Ingest (or synthesize) -> merge -> dedup -> length-filter -> split.
/// Writes corpus.jsonl, dedup.json, filter.json, stats + CWE distribution
/// tables, splits/*.json, and run.json under cfg.out.
Prepared cmd_prepare(const ExperimentConfig& cfg);

/// Reload what cmd_prepare wrote; fails if artifacts are missing or the
/// stored corpus digest no longer matches the corpus file.
Prepared load_prepared(const ExperimentConfig& cfg);

struct Rq1Result {
  std::vector<int> cwe_order;  // descending train frequency, ties ascending
  std::vector<MetricsReport> rows;
  std::vector<NamedBreakdown> breakdowns;
};

/// Train m_all plus one m_<cwe> per configured CWE and evaluate the full
/// model x test-set grid in both hard and score mode. Writes set manifests,
/// model files, reports.{json,csv,txt}, and breakdowns.{json,txt} under
/// cfg.out/rq1.
Rq1Result cmd_run_rq1(const ExperimentConfig& cfg);

struct Rq2Result {
  std::vector<int> cwe_order;
  std::vector<MetricsReport> rows;         // at cfg.r
  std::vector<MetricsReport> strict_rows;  // at cfg.pairwise_r, pooled test set
  std::vector<NamedPairwise> pairwise;     // only when the corpus has pairs
};

/// Train a pooled binary model and a multiclass model on identical training
/// membership, collapse the multiclass output to binary, and evaluate both
/// on the pooled test set plus every per-CWE test set. Writes artifacts
/// under cfg.out/rq2.
Rq2Result cmd_run_rq2(const ExperimentConfig& cfg);

/// Score an external prediction file against the test side of a set
/// manifest; multiclass predictions are collapsed first. Writes
/// reports.{json,csv,txt} under out_dir (skipped when out_dir is empty).
std::vector<MetricsReport> cmd_evaluate(const std::string& predictions_path,
                                        const std::string& manifest_path,
                                        double r, ModelKind kind,
                                        const std::string& out_dir);

}  // namespace vdlab
