// vdlab: deterministic corpus preparation, training and evaluation for
// function-level C/C++ vulnerability detection. Every run is a pure function
// of its config and seed; rerunning a command with the same inputs rewrites
// byte-identical artifacts.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vdlab/classify.hpp"
#include "vdlab/corpus.hpp"
#include "vdlab/error.hpp"
#include "vdlab/eval.hpp"
#include "vdlab/experiment.hpp"
#include "vdlab/io.hpp"
#include "vdlab/report.hpp"
#include "vdlab/split.hpp"
#include "vdlab/synth.hpp"

namespace {

using namespace vdlab;

namespace fs = std::filesystem;

std::string join(const std::string& dir, const std::string& rel) {
  return (fs::path(dir) / rel).string();
}

// Config-driven commands share one override set: a flag beats the config
// file, an absent flag leaves it alone.
struct ConfigArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  double r = 0.0;
  std::string out;
  double train_ratio = 0.0;
  std::int64_t max_len = 0;
  double pairwise_r = 0.0;
  int epochs = 0;
  double learning_rate = 0.0;
  double l2 = 0.0;
  std::uint32_t dim = 0;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* r_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* train_ratio_opt = nullptr;
  CLI::Option* max_len_opt = nullptr;
  CLI::Option* pairwise_r_opt = nullptr;
  CLI::Option* epochs_opt = nullptr;
  CLI::Option* lr_opt = nullptr;
  CLI::Option* l2_opt = nullptr;
  CLI::Option* dim_opt = nullptr;
};

void add_config_flags(CLI::App* cmd, ConfigArgs& a) {
  cmd->add_option("--config", a.config_path, "experiment config (JSON)")
      ->required();
  a.seed_opt = cmd->add_option("--seed", a.seed, "override the root seed");
  a.r_opt = cmd->add_option("--r", a.r, "override the FPR budget");
  a.out_opt = cmd->add_option("--out", a.out, "override the output directory");
  a.train_ratio_opt =
      cmd->add_option("--train-ratio", a.train_ratio, "override train_ratio");
  a.max_len_opt = cmd->add_option("--max-len", a.max_len, "override max_len");
  a.pairwise_r_opt =
      cmd->add_option("--pairwise-r", a.pairwise_r, "override pairwise_r");
  a.epochs_opt = cmd->add_option("--epochs", a.epochs, "override classifier epochs");
  a.lr_opt = cmd->add_option("--learning-rate", a.learning_rate,
                             "override the learning rate");
  a.l2_opt = cmd->add_option("--l2", a.l2, "override L2 regularization");
  a.dim_opt = cmd->add_option("--dim", a.dim, "override the feature dimension");
}

ExperimentConfig resolve_config(const ConfigArgs& a) {
  ExperimentConfig cfg = load_config(a.config_path);
  if (a.seed_opt->count()) {
    // A synthetic section without its own seed follows the root seed.
    if (cfg.has_synthetic && cfg.synthetic.seed == cfg.seed)
      cfg.synthetic.seed = a.seed;
    cfg.seed = a.seed;
  }
  if (a.r_opt->count()) cfg.r = a.r;
  if (a.out_opt->count()) cfg.out = a.out;
  if (a.train_ratio_opt->count()) cfg.train_ratio = a.train_ratio;
  if (a.max_len_opt->count()) cfg.max_len = a.max_len;
  if (a.pairwise_r_opt->count()) cfg.pairwise_r = a.pairwise_r;
  if (a.epochs_opt->count()) cfg.classifier.epochs = a.epochs;
  if (a.lr_opt->count()) cfg.classifier.learning_rate = a.learning_rate;
  if (a.l2_opt->count()) cfg.classifier.l2 = a.l2;
  if (a.dim_opt->count()) cfg.classifier.dim = a.dim;
  // Round-trip through the parser so overridden values face the same
  // validation as the file itself.
  return config_from_json(config_to_json(cfg));
}

Corpus read_corpus(const std::string& path, const std::string& schema) {
  IngestResult res = ingest_jsonl(path, schema);
  if (res.report.skipped > 0)
    std::fprintf(stderr, "warning: %s: skipped %lld malformed lines\n", path.c_str(),
                 static_cast<long long>(res.report.skipped));
  return std::move(res.corpus);
}

LabeledSet set_from_manifest(const Manifest& m, bool test_side) {
  LabeledSet set;
  set.name = m.name;
  const auto& ids = test_side ? m.test_ids : m.train_ids;
  for (const auto& id : ids) {
    const auto it = m.labels.find(id);
    if (it == m.labels.end()) fail("manifest is missing a label for id " + id);
    set.entries.push_back({id, it->second});
  }
  return set;
}

/// Distinct non-benign labels, most frequent first (ties: ascending id).
std::vector<int> classes_from(const LabeledSet& set) {
  std::map<int, std::int64_t> freq;
  for (const auto& e : set.entries)
    if (e.label != 0) freq[e.label] += 1;
  std::vector<int> classes;
  for (const auto& [label, n] : freq) classes.push_back(label);
  std::stable_sort(classes.begin(), classes.end(),
                   [&](int x, int y) { return freq.at(x) > freq.at(y); });
  return classes;
}

std::vector<MetricsReport> rows_in_mode(const std::vector<MetricsReport>& rows,
                                        EvalMode mode) {
  std::vector<MetricsReport> out;
  for (const auto& row : rows)
    if (row.mode == mode) out.push_back(row);
  return out;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::fputs(text.c_str(), stdout);
  else
    write_file(out_path, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "vdlab: deterministic corpus preparation, training and evaluation for "
      "function-level vulnerability detection"};
  app.require_subcommand(1);

  // prepare ------------------------------------------------------------
  ConfigArgs prep_args;
  auto* prepare = app.add_subcommand(
      "prepare", "ingest or synthesize a corpus, dedup, filter, split");
  add_config_flags(prepare, prep_args);
  prepare->callback([&] {
    const ExperimentConfig cfg = resolve_config(prep_args);
    const Prepared prep = cmd_prepare(cfg);
    std::printf("prepared %zu records (%zu vulnerable train / %zu test) under %s\n",
                prep.corpus.records.size(), prep.v_split.train_ids.size(),
                prep.v_split.test_ids.size(), cfg.out.c_str());
    std::printf("corpus digest %s\n", prep.corpus_digest.c_str());
  });

  // gen-synthetic -------------------------------------------------------
  std::string gen_config, gen_out;
  std::uint64_t gen_seed = 0;
  CLI::Option* gen_seed_opt = nullptr;
  auto* gen = app.add_subcommand("gen-synthetic",
                                 "write the configured synthetic corpus as JSONL");
  gen->add_option("--config", gen_config, "experiment config (JSON)")->required();
  gen_seed_opt = gen->add_option("--seed", gen_seed, "override the generator seed");
  gen->add_option("--out", gen_out, "output JSONL path")->required();
  gen->callback([&] {
    const ExperimentConfig cfg = load_config(gen_config);
    if (!cfg.has_synthetic) fail("config has no \"synthetic\" section");
    SyntheticSpec spec = cfg.synthetic;
    if (gen_seed_opt->count()) spec.seed = gen_seed;
    const Corpus corpus = generate_synthetic(spec);
    write_canonical_jsonl(corpus, gen_out);
    std::int64_t vuln = 0;
    for (const auto& r : corpus.records) vuln += r.vulnerable() ? 1 : 0;
    std::printf("wrote %zu records (%lld vulnerable) to %s\n", corpus.records.size(),
                static_cast<long long>(vuln), gen_out.c_str());
  });

  // stats ----------------------------------------------------------------
  std::string stats_corpus, stats_schema = "canonical", stats_out;
  auto* stats = app.add_subcommand("stats", "length buckets and CWE distribution");
  stats->add_option("--corpus", stats_corpus, "corpus JSONL")->required();
  stats->add_option("--schema", stats_schema, "input schema tag");
  stats->add_option("--out", stats_out, "also write CSV/text reports here");
  stats->callback([&] {
    const Corpus corpus = read_corpus(stats_corpus, stats_schema);
    const LengthBucketReport report = corpus_stats(corpus);
    const auto ranked = cwe_distribution(corpus);
    std::fputs(stats_table(report).c_str(), stdout);
    std::fputs("\n", stdout);
    std::fputs(cwe_distribution_table(cwe_top_bottom(ranked)).c_str(), stdout);
    if (!stats_out.empty()) {
      write_file(join(stats_out, "stats.csv"), stats_csv(report));
      write_file(join(stats_out, "stats.txt"), stats_table(report));
      write_file(join(stats_out, "length_hist.csv"), histogram_csv(report));
      write_file(join(stats_out, "cwe_dist.csv"), cwe_distribution_csv(ranked));
      write_file(join(stats_out, "cwe_dist.txt"),
                 cwe_distribution_table(cwe_top_bottom(ranked)));
    }
  });

  // split ----------------------------------------------------------------
  std::string split_corpus, split_schema = "canonical", split_out;
  std::uint64_t split_seed = 1;
  double split_ratio = 0.9;
  auto* split = app.add_subcommand("split", "stratified train/test split");
  split->add_option("--corpus", split_corpus, "corpus JSONL")->required();
  split->add_option("--schema", split_schema, "input schema tag");
  split->add_option("--seed", split_seed, "split seed");
  split->add_option("--train-ratio", split_ratio, "train share in (0,1)");
  split->add_option("--out", split_out, "output directory")->required();
  split->callback([&] {
    const Corpus corpus = read_corpus(split_corpus, split_schema);
    const SplitConfig sc{split_ratio, split_seed};
    const DatasetSplit v = stratified_split_vulnerable(corpus, sc);
    const DatasetSplit nv = split_nonvulnerable(corpus, sc);
    write_manifest(manifest_from(v), join(split_out, "splits/d_v.json"));
    write_manifest(manifest_from(nv), join(split_out, "splits/d_nv.json"));
    std::printf("vulnerable: %zu train / %zu test (%lld without CWE tags)\n",
                v.train_ids.size(), v.test_ids.size(),
                static_cast<long long>(v.neglected));
    std::printf("non-vulnerable: %zu train / %zu test\n", nv.train_ids.size(),
                nv.test_ids.size());
  });

  // train ----------------------------------------------------------------
  std::string train_corpus, train_schema = "canonical", train_set_path, train_out;
  std::string train_kind = "binary", train_name = "model";
  std::vector<int> train_cwes;
  std::uint64_t train_seed = 1;
  int train_epochs = 10;
  double train_lr = 0.1, train_l2 = 1e-6;
  std::uint32_t train_dim = 1u << 18;
  auto* train_cmd = app.add_subcommand("train", "fit a model on a manifest's train side");
  train_cmd->add_option("--corpus", train_corpus, "corpus JSONL")->required();
  train_cmd->add_option("--schema", train_schema, "input schema tag");
  train_cmd->add_option("--set", train_set_path, "set manifest (JSON)")->required();
  train_cmd->add_option("--kind", train_kind, "binary | multiclass")
      ->check(CLI::IsMember({"binary", "multiclass"}));
  train_cmd->add_option("--cwes", train_cwes, "multiclass classes after benign 0")
      ->delimiter(',');
  train_cmd->add_option("--name", train_name, "model name stored in metadata");
  train_cmd->add_option("--seed", train_seed, "training seed");
  train_cmd->add_option("--epochs", train_epochs, "SGD epochs");
  train_cmd->add_option("--learning-rate", train_lr, "initial learning rate");
  train_cmd->add_option("--l2", train_l2, "L2 regularization");
  train_cmd->add_option("--dim", train_dim, "feature dimension (power of two)");
  train_cmd->add_option("--out", train_out, "model output path")->required();
  train_cmd->callback([&] {
    const Corpus corpus = read_corpus(train_corpus, train_schema);
    const CorpusIndex index(corpus);
    const Manifest m = read_manifest(train_set_path);
    const LabeledSet set = set_from_manifest(m, /*test_side=*/false);
    if (set.entries.empty()) fail("manifest has no train entries: " + train_set_path);
    TrainConfig tc;
    tc.kind = train_kind == "binary" ? ModelKind::binary : ModelKind::multiclass;
    tc.epochs = train_epochs;
    tc.learning_rate = train_lr;
    tc.l2 = train_l2;
    tc.dim = train_dim;
    tc.seed = train_seed;
    if (tc.kind == ModelKind::multiclass)
      tc.cwe_list = train_cwes.empty() ? classes_from(set) : train_cwes;
    Model model = train(set, index, tc);
    model.metadata["model"] = train_name;
    write_model(model, train_out);
    std::printf("trained %s on %zu records, final loss %.6f -> %s\n",
                train_name.c_str(), set.entries.size(), model.final_loss,
                train_out.c_str());
  });

  // predict ----------------------------------------------------------------
  std::string pred_model, pred_corpus, pred_schema = "canonical", pred_set, pred_out;
  std::string pred_side = "test";
  bool pred_collapse = false;
  auto* predict_cmd =
      app.add_subcommand("predict", "score one side of a manifest with a model");
  predict_cmd->add_option("--model", pred_model, "model JSON")->required();
  predict_cmd->add_option("--corpus", pred_corpus, "corpus JSONL")->required();
  predict_cmd->add_option("--schema", pred_schema, "input schema tag");
  predict_cmd->add_option("--set", pred_set, "set manifest (JSON)")->required();
  predict_cmd->add_option("--side", pred_side, "train | test")
      ->check(CLI::IsMember({"train", "test"}));
  predict_cmd->add_flag("--collapse", pred_collapse,
                        "collapse multiclass output to binary");
  predict_cmd->add_option("--out", pred_out, "predictions JSONL path")->required();
  predict_cmd->callback([&] {
    const Corpus corpus = read_corpus(pred_corpus, pred_schema);
    const CorpusIndex index(corpus);
    const Model model = read_model(pred_model);
    const Manifest m = read_manifest(pred_set);
    const auto& ids = pred_side == "test" ? m.test_ids : m.train_ids;
    if (ids.empty()) fail("manifest has no " + pred_side + " entries: " + pred_set);
    PredictionSet pred = predict(model, ids, index);
    if (pred_collapse) {
      if (model.kind != ModelKind::multiclass)
        fail("--collapse only applies to multiclass models");
      pred = collapse_multiclass(pred);
    }
    write_predictions_jsonl(pred, pred_out);
    std::printf("wrote %zu predictions to %s\n", pred.entries.size(), pred_out.c_str());
  });

  // evaluate ----------------------------------------------------------------
  std::string eval_pred, eval_manifest, eval_kind = "binary", eval_out;
  double eval_r = 0.2;
  auto* evaluate = app.add_subcommand(
      "evaluate", "score external predictions against a manifest's test side");
  evaluate->add_option("--predictions", eval_pred, "predictions JSONL")->required();
  evaluate->add_option("--manifest", eval_manifest, "set manifest (JSON)")->required();
  evaluate->add_option("--kind", eval_kind, "binary | multiclass")
      ->check(CLI::IsMember({"binary", "multiclass"}));
  evaluate->add_option("--r", eval_r, "FPR budget");
  evaluate->add_option("--out", eval_out, "write reports.{json,csv,txt} here");
  evaluate->callback([&] {
    const ModelKind kind =
        eval_kind == "binary" ? ModelKind::binary : ModelKind::multiclass;
    const auto rows = cmd_evaluate(eval_pred, eval_manifest, eval_r, kind, eval_out);
    std::fputs(metrics_table(rows).c_str(), stdout);
  });

  // run-rq1 / run-rq2 --------------------------------------------------------
  ConfigArgs rq1_args;
  auto* rq1 = app.add_subcommand(
      "run-rq1", "train the pooled and per-CWE models and evaluate the grid");
  add_config_flags(rq1, rq1_args);
  rq1->callback([&] {
    const ExperimentConfig cfg = resolve_config(rq1_args);
    const Rq1Result res = cmd_run_rq1(cfg);
    std::fputs(metrics_table(rows_in_mode(res.rows, EvalMode::hard)).c_str(), stdout);
    std::printf("\nartifacts under %s\n", join(cfg.out, "rq1").c_str());
  });

  ConfigArgs rq2_args;
  auto* rq2 = app.add_subcommand(
      "run-rq2", "pooled binary vs collapsed multiclass on shared membership");
  add_config_flags(rq2, rq2_args);
  rq2->callback([&] {
    const ExperimentConfig cfg = resolve_config(rq2_args);
    const Rq2Result res = cmd_run_rq2(cfg);
    std::fputs(metrics_table(rows_in_mode(res.rows, EvalMode::hard)).c_str(), stdout);
    if (!res.pairwise.empty()) {
      std::fputs("\n", stdout);
      std::fputs(pairwise_table(res.pairwise).c_str(), stdout);
    }
    std::printf("\nartifacts under %s\n", join(cfg.out, "rq2").c_str());
  });

  // report ----------------------------------------------------------------
  std::string report_json, report_format = "table", report_mode = "all", report_out;
  auto* report = app.add_subcommand("report", "re-render a report JSON");
  report->add_option("--json", report_json, "report JSON path")->required();
  report->add_option("--format", report_format, "table | csv")
      ->check(CLI::IsMember({"table", "csv"}));
  report->add_option("--mode", report_mode, "all | hard | score")
      ->check(CLI::IsMember({"all", "hard", "score"}));
  report->add_option("--out", report_out, "output path (default: stdout)");
  report->callback([&] {
    const std::string text = read_file(report_json);
    if (report_format == "csv") {
      emit(csv_from_json(text), report_out);
      return;
    }
    auto rows = metrics_from_json(text);
    if (report_mode == "hard") rows = rows_in_mode(rows, EvalMode::hard);
    if (report_mode == "score") rows = rows_in_mode(rows, EvalMode::score);
    emit(metrics_table(rows), report_out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit clean, usage errors as 2
  } catch (const UserError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 0;
}
