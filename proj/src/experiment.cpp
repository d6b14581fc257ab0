#include "vdlab/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <initializer_list>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "json.hpp"
#include "vdlab/error.hpp"
#include "vdlab/eval.hpp"
#include "vdlab/io.hpp"
#include "vdlab/md5.hpp"
#include "vdlab/preprocess.hpp"
#include "vdlab/rng.hpp"

namespace vdlab {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string join(const std::string& dir, const std::string& rel) {
  return (fs::path(dir) / rel).string();
}

// ---------------------------------------------------------------------------
// Config

void check_keys(const nlohmann::json& o, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (auto it = o.begin(); it != o.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) fail("unknown key \"" + it.key() + "\" in " + where);
  }
}

int parse_config_cwe(const std::string& key, const std::string& where) {
  if (key.empty() || key.size() > 5 ||
      key.find_first_not_of("0123456789") != std::string::npos)
    fail("bad CWE key \"" + key + "\" in " + where + " (expected 1-5 digits)");
  const int cwe = std::stoi(key);
  if (cwe < 1) fail("bad CWE key \"" + key + "\" in " + where);
  return cwe;
}

bool power_of_two(std::uint32_t x) { return x != 0 && (x & (x - 1)) == 0; }

template <typename T>
T get_as(const nlohmann::json& o, const char* key, const std::string& where) {
  try {
    return o.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(std::string("bad value for \"") + key + "\" in " + where);
  }
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail("config is not a JSON object");
  check_keys(j,
             {"inputs", "synthetic", "seed", "train_ratio", "max_len", "top_cwes",
              "r", "pairwise_r", "classifier", "mode", "out",
              "allow_empty_cwe_sets"},
             "config");

  ExperimentConfig cfg;
  if (j.contains("inputs")) {
    if (!j.at("inputs").is_array()) fail("config \"inputs\" must be an array");
    for (const auto& in : j.at("inputs")) {
      if (!in.is_object()) fail("config input entries must be objects");
      check_keys(in, {"path", "schema"}, "config input");
      InputSpec spec;
      spec.path = get_as<std::string>(in, "path", "config input");
      spec.schema = get_as<std::string>(in, "schema", "config input");
      schema_for(spec.schema);  // rejects unknown tags early
      if (spec.path.empty()) fail("config input has an empty path");
      cfg.inputs.push_back(std::move(spec));
    }
  }

  bool synthetic_seed_given = false;
  if (j.contains("synthetic")) {
    const auto& s = j.at("synthetic");
    if (!s.is_object()) fail("config \"synthetic\" must be an object");
    check_keys(s, {"per_cwe", "non_vulnerable", "seed", "pair_fraction", "source"},
               "config synthetic");
    cfg.has_synthetic = true;
    if (!s.contains("per_cwe") || !s.at("per_cwe").is_object())
      fail("config synthetic needs a \"per_cwe\" object");
    for (auto it = s.at("per_cwe").begin(); it != s.at("per_cwe").end(); ++it) {
      const int cwe = parse_config_cwe(it.key(), "synthetic per_cwe");
      if (!it.value().is_number_integer())
        fail("synthetic per_cwe counts must be integers");
      cfg.synthetic.per_cwe[cwe] = it.value().get<std::int64_t>();
    }
    cfg.synthetic.non_vulnerable =
        get_as<std::int64_t>(s, "non_vulnerable", "config synthetic");
    if (s.contains("seed")) {
      cfg.synthetic.seed = get_as<std::uint64_t>(s, "seed", "config synthetic");
      synthetic_seed_given = true;
    }
    if (s.contains("pair_fraction"))
      cfg.synthetic.pair_fraction =
          get_as<double>(s, "pair_fraction", "config synthetic");
    if (s.contains("source"))
      cfg.synthetic.source = get_as<std::string>(s, "source", "config synthetic");
    if (cfg.synthetic.source.empty()) fail("synthetic source tag must be non-empty");
  }
  if (cfg.has_synthetic && !cfg.inputs.empty())
    fail("config cannot have both \"inputs\" and \"synthetic\"");

  if (j.contains("seed")) cfg.seed = get_as<std::uint64_t>(j, "seed", "config");
  if (!synthetic_seed_given) cfg.synthetic.seed = cfg.seed;

  if (j.contains("train_ratio"))
    cfg.train_ratio = get_as<double>(j, "train_ratio", "config");
  if (!(cfg.train_ratio > 0.0 && cfg.train_ratio < 1.0))
    fail("train_ratio must be strictly between 0 and 1");

  if (j.contains("max_len")) cfg.max_len = get_as<std::int64_t>(j, "max_len", "config");
  if (cfg.max_len < 1) fail("max_len must be at least 1");

  if (j.contains("top_cwes")) {
    if (!j.at("top_cwes").is_array()) fail("config \"top_cwes\" must be an array");
    std::set<int> seen;
    for (const auto& v : j.at("top_cwes")) {
      if (!v.is_number_integer()) fail("top_cwes entries must be integers");
      const int cwe = v.get<int>();
      if (cwe < 1 || cwe > 99999) fail("top_cwes entry out of range: " + std::to_string(cwe));
      if (!seen.insert(cwe).second)
        fail("top_cwes lists CWE-" + std::to_string(cwe) + " twice");
      cfg.top_cwes.push_back(cwe);
    }
  }

  if (j.contains("r")) cfg.r = get_as<double>(j, "r", "config");
  if (!(cfg.r >= 0.0 && cfg.r < 1.0)) fail("r must satisfy 0 <= r < 1");
  if (j.contains("pairwise_r")) cfg.pairwise_r = get_as<double>(j, "pairwise_r", "config");
  if (!(cfg.pairwise_r >= 0.0 && cfg.pairwise_r < 1.0))
    fail("pairwise_r must satisfy 0 <= r < 1");

  if (j.contains("classifier")) {
    const auto& c = j.at("classifier");
    if (!c.is_object()) fail("config \"classifier\" must be an object");
    check_keys(c, {"epochs", "learning_rate", "l2", "dim"}, "config classifier");
    if (c.contains("epochs"))
      cfg.classifier.epochs = get_as<int>(c, "epochs", "config classifier");
    if (c.contains("learning_rate"))
      cfg.classifier.learning_rate =
          get_as<double>(c, "learning_rate", "config classifier");
    if (c.contains("l2")) cfg.classifier.l2 = get_as<double>(c, "l2", "config classifier");
    if (c.contains("dim"))
      cfg.classifier.dim = get_as<std::uint32_t>(c, "dim", "config classifier");
  }
  if (cfg.classifier.epochs < 1) fail("classifier epochs must be at least 1");
  if (!(cfg.classifier.learning_rate > 0.0)) fail("learning_rate must be positive");
  if (cfg.classifier.l2 < 0.0) fail("l2 must be non-negative");
  if (!power_of_two(cfg.classifier.dim)) fail("classifier dim must be a power of two");

  if (j.contains("mode")) cfg.mode = get_as<std::string>(j, "mode", "config");
  if (cfg.mode != "rq1" && cfg.mode != "rq2" && cfg.mode != "evaluate-external")
    fail("mode must be rq1, rq2 or evaluate-external (got \"" + cfg.mode + "\")");

  if (j.contains("out")) cfg.out = get_as<std::string>(j, "out", "config");
  if (cfg.out.empty()) fail("out directory must be non-empty");

  if (j.contains("allow_empty_cwe_sets"))
    cfg.allow_empty_cwe_sets = get_as<bool>(j, "allow_empty_cwe_sets", "config");

  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  try {
    return config_from_json(read_file(path));
  } catch (const UserError& e) {
    fail(path + ": " + e.what());
  }
}

namespace {

// The digest ignores the output directory: relocating a run must not change
// what the run computes.
ordered_json config_json(const ExperimentConfig& cfg, bool include_out) {
  ordered_json j;
  if (!cfg.inputs.empty()) {
    ordered_json arr = ordered_json::array();
    for (const auto& in : cfg.inputs)
      arr.push_back({{"path", in.path}, {"schema", in.schema}});
    j["inputs"] = std::move(arr);
  }
  if (cfg.has_synthetic) {
    ordered_json per = ordered_json::object();
    for (const auto& [cwe, n] : cfg.synthetic.per_cwe) per[std::to_string(cwe)] = n;
    j["synthetic"] = {{"per_cwe", std::move(per)},
                      {"non_vulnerable", cfg.synthetic.non_vulnerable},
                      {"seed", cfg.synthetic.seed},
                      {"pair_fraction", cfg.synthetic.pair_fraction},
                      {"source", cfg.synthetic.source}};
  }
  j["seed"] = cfg.seed;
  j["train_ratio"] = cfg.train_ratio;
  j["max_len"] = cfg.max_len;
  j["top_cwes"] = cfg.top_cwes;
  j["r"] = cfg.r;
  j["pairwise_r"] = cfg.pairwise_r;
  j["classifier"] = {{"epochs", cfg.classifier.epochs},
                     {"learning_rate", cfg.classifier.learning_rate},
                     {"l2", cfg.classifier.l2},
                     {"dim", cfg.classifier.dim}};
  j["mode"] = cfg.mode;
  if (include_out) j["out"] = cfg.out;
  j["allow_empty_cwe_sets"] = cfg.allow_empty_cwe_sets;
  return j;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) {
  return config_json(cfg, true).dump(2);
}

std::string config_digest(const ExperimentConfig& cfg) {
  return md5_hex(config_json(cfg, false).dump());
}

// ---------------------------------------------------------------------------
// prepare

namespace {

Provenance provenance_for(const ExperimentConfig& cfg) {
  return {{"config_digest", config_digest(cfg)}, {"seed", std::to_string(cfg.seed)}};
}

std::string filter_report_json(const LengthFilterReport& r) {
  ordered_json j;
  j["max_len"] = r.max_len;
  j["kept"] = {{"vulnerable", r.kept_vulnerable},
               {"non_vulnerable", r.kept_non_vulnerable}};
  j["dropped"] = {{"vulnerable", r.dropped_vulnerable},
                  {"non_vulnerable", r.dropped_non_vulnerable}};
  return j.dump(2);
}

std::string ingest_reports_json(const std::vector<IngestReport>& reports) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : reports) {
    ordered_json o;
    o["path"] = r.path;
    o["source"] = r.source;
    o["lines"] = r.lines;
    o["ingested"] = r.ingested;
    o["skipped"] = r.skipped;
    o["cleared_nonvuln_cwes"] = r.cleared_nonvuln_cwes;
    o["errors"] = r.errors;
    arr.push_back(std::move(o));
  }
  return arr.dump(2);
}

}  // namespace

Prepared cmd_prepare(const ExperimentConfig& cfg) {
  Corpus merged;
  std::vector<IngestReport> ingest_reports;
  if (cfg.has_synthetic) {
    merged = generate_synthetic(cfg.synthetic);
  } else {
    if (cfg.inputs.empty())
      fail("config needs either \"inputs\" or a \"synthetic\" section to prepare");
    std::vector<Corpus> parts;
    for (const auto& in : cfg.inputs) {
      IngestResult res = ingest_jsonl(in.path, in.schema);
      ingest_reports.push_back(res.report);
      parts.push_back(std::move(res.corpus));
    }
    merged = merge_corpora(std::move(parts));
  }

  DedupResult dd = deduplicate(merged);
  LengthFilterResult lf = filter_length(dd.corpus, cfg.max_len);

  Prepared prep;
  prep.corpus = std::move(lf.corpus);
  prep.corpus_digest = corpus_digest(prep.corpus);

  const SplitConfig sc{cfg.train_ratio, cfg.seed};
  prep.v_split = stratified_split_vulnerable(prep.corpus, sc);
  prep.nv_split = split_nonvulnerable(prep.corpus, sc);

  const std::string& out = cfg.out;
  write_file(join(out, "config.json"), config_to_json(cfg) + "\n");
  write_canonical_jsonl(prep.corpus, join(out, "corpus.jsonl"));
  if (!ingest_reports.empty())
    write_file(join(out, "ingest.json"), ingest_reports_json(ingest_reports) + "\n");
  write_file(join(out, "dedup.json"), dd.report.to_json() + "\n");
  write_file(join(out, "filter.json"), filter_report_json(lf.report) + "\n");

  const LengthBucketReport stats = corpus_stats(prep.corpus);
  write_file(join(out, "stats.csv"), stats_csv(stats));
  write_file(join(out, "stats.txt"), stats_table(stats));
  write_file(join(out, "length_hist.csv"), histogram_csv(stats));
  const auto ranked = cwe_distribution(prep.corpus);
  write_file(join(out, "cwe_dist.csv"), cwe_distribution_csv(ranked));
  write_file(join(out, "cwe_dist.txt"), cwe_distribution_table(cwe_top_bottom(ranked)));

  write_manifest(manifest_from(prep.v_split), join(out, "splits/d_v.json"));
  write_manifest(manifest_from(prep.nv_split), join(out, "splits/d_nv.json"));

  std::int64_t vulnerable = 0;
  for (const auto& r : prep.corpus.records) vulnerable += r.vulnerable() ? 1 : 0;
  ordered_json run;
  run["format"] = "vdlab-run-v1";
  run["config_digest"] = config_digest(cfg);
  run["seed"] = cfg.seed;
  run["mode"] = cfg.mode;
  run["corpus_digest"] = prep.corpus_digest;
  run["counts"] = {
      {"records", static_cast<std::int64_t>(prep.corpus.records.size())},
      {"vulnerable", vulnerable},
      {"non_vulnerable", static_cast<std::int64_t>(prep.corpus.records.size()) - vulnerable},
      {"dedup_dropped", dd.report.dropped},
      {"length_dropped", lf.report.dropped()},
      {"train_vulnerable", static_cast<std::int64_t>(prep.v_split.train_ids.size())},
      {"test_vulnerable", static_cast<std::int64_t>(prep.v_split.test_ids.size())},
      {"neglected_vulnerable", prep.v_split.neglected},
      {"train_non_vulnerable", static_cast<std::int64_t>(prep.nv_split.train_ids.size())},
      {"test_non_vulnerable", static_cast<std::int64_t>(prep.nv_split.test_ids.size())}};
  write_file(join(out, "run.json"), run.dump(2) + "\n");

  return prep;
}

namespace {

DatasetSplit split_from_manifest(const Manifest& m) {
  DatasetSplit split;
  split.name = m.name;
  split.seed = m.seed;
  split.corpus_digest = m.corpus_digest;
  split.train_ids = m.train_ids;
  split.test_ids = m.test_ids;
  for (const auto& [key, n] : m.counts) {
    if (key == "neglected") {
      split.neglected = n;
    } else if (key.rfind("train_cwe_", 0) == 0) {
      split.per_cwe_train[std::stoi(key.substr(10))] = n;
    } else if (key.rfind("test_cwe_", 0) == 0) {
      split.per_cwe_test[std::stoi(key.substr(9))] = n;
    }
  }
  return split;
}

}  // namespace

Prepared load_prepared(const ExperimentConfig& cfg) {
  const std::string corpus_path = join(cfg.out, "corpus.jsonl");
  if (!fs::exists(corpus_path))
    fail("no prepared corpus at " + corpus_path + "; run prepare first");

  IngestResult res = ingest_jsonl(corpus_path, "canonical");
  if (res.report.skipped > 0)
    fail(corpus_path + " has " + std::to_string(res.report.skipped) +
         " malformed lines; rerun prepare");

  Prepared prep;
  prep.corpus = std::move(res.corpus);
  prep.corpus_digest = corpus_digest(prep.corpus);
  prep.v_split = split_from_manifest(read_manifest(join(cfg.out, "splits/d_v.json")));
  prep.nv_split = split_from_manifest(read_manifest(join(cfg.out, "splits/d_nv.json")));

  for (const DatasetSplit* s : {&prep.v_split, &prep.nv_split})
    if (s->corpus_digest != prep.corpus_digest)
      fail("split " + s->name + " was built from a different corpus (digest " +
           s->corpus_digest + " vs " + prep.corpus_digest + "); rerun prepare");
  return prep;
}

// ---------------------------------------------------------------------------
// Shared run machinery

namespace {

/// Configured CWEs ranked by vulnerable primary-CWE frequency (descending,
/// ties ascending by id): set construction must not depend on the order the
/// config happens to list them in.
std::vector<int> cwe_build_order(const std::vector<int>& top_cwes, const Corpus& corpus) {
  std::map<int, std::int64_t> freq;
  for (const auto& r : corpus.records)
    if (r.vulnerable() && !r.cwes.empty()) freq[r.primary_cwe()] += 1;
  std::vector<int> order = top_cwes;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const std::int64_t fa = freq.count(a) ? freq.at(a) : 0;
    const std::int64_t fb = freq.count(b) ? freq.at(b) : 0;
    if (fa != fb) return fa > fb;
    return a < b;
  });
  return order;
}

std::vector<std::string> ids_of(const LabeledSet& set) {
  std::vector<std::string> ids;
  ids.reserve(set.entries.size());
  for (const auto& e : set.entries) ids.push_back(e.id);
  return ids;
}

LabeledSet full_test_set(const Prepared& prep) {
  LabeledSet set;
  set.name = "d_test_all";
  for (const auto& id : prep.v_split.test_ids) set.entries.push_back({id, 1});
  for (const auto& id : prep.nv_split.test_ids) set.entries.push_back({id, 0});
  return set;
}

Manifest single_set_manifest(const LabeledSet& set, std::uint64_t seed,
                             const std::string& corpus_digest) {
  Manifest m;
  m.name = set.name;
  m.seed = seed;
  m.corpus_digest = corpus_digest;
  for (const auto& e : set.entries) {
    m.test_ids.push_back(e.id);
    m.labels[e.id] = e.label;
  }
  m.counts["test_vulnerable"] = set.positives();
  m.counts["test_non_vulnerable"] = set.negatives();
  return m;
}

Model train_model(const LabeledSet& set, const CorpusIndex& index,
                  const ExperimentConfig& cfg, ModelKind kind,
                  const std::vector<int>& cwe_list, const std::string& model_name) {
  TrainConfig tc;
  tc.kind = kind;
  tc.epochs = cfg.classifier.epochs;
  tc.learning_rate = cfg.classifier.learning_rate;
  tc.l2 = cfg.classifier.l2;
  tc.dim = cfg.classifier.dim;
  tc.seed = derive_seed(cfg.seed, "train", fnv1a64(set.name));
  tc.cwe_list = cwe_list;
  Model m = train(set, index, tc);
  m.metadata["model"] = model_name;
  return m;
}

/// One grid cell: hard-label row plus score-sweep row from one prediction set.
void eval_cell(std::vector<MetricsReport>& rows, const PredictionSet& pred,
               const LabeledSet& test, double r, const std::string& model_name) {
  const auto truth = truth_from(test);
  rows.push_back(
      evaluate_predictions(pred, truth, r, EvalMode::hard, model_name, test.name));
  rows.push_back(
      evaluate_predictions(pred, truth, r, EvalMode::score, model_name, test.name));
}

std::vector<MetricsReport> hard_rows(const std::vector<MetricsReport>& rows) {
  std::vector<MetricsReport> out;
  for (const auto& row : rows)
    if (row.mode == EvalMode::hard) out.push_back(row);
  return out;
}

void write_report_files(const std::string& dir, const std::string& stem,
                        const std::vector<MetricsReport>& rows,
                        const Provenance& prov) {
  write_file(join(dir, stem + ".json"), metrics_json(rows, prov) + "\n");
  write_file(join(dir, stem + ".csv"), metrics_csv(rows));
  write_file(join(dir, stem + ".txt"), metrics_table(hard_rows(rows)));
}

}  // namespace

// ---------------------------------------------------------------------------
// rq1

Rq1Result cmd_run_rq1(const ExperimentConfig& cfg) {
  if (cfg.top_cwes.empty()) fail("run-rq1 needs a non-empty top_cwes list");
  const Prepared prep = load_prepared(cfg);
  const CorpusIndex index(prep.corpus);
  const std::string dir = join(cfg.out, "rq1");
  const Provenance prov = provenance_for(cfg);

  Rq1Result result;
  result.cwe_order = cwe_build_order(cfg.top_cwes, prep.corpus);

  NonVulnPool train_pool(prep.nv_split.train_ids, cfg.seed);
  NonVulnPool test_pool(prep.nv_split.test_ids, cfg.seed);

  std::vector<std::pair<int, SetPair>> per_cwe;
  for (const int cwe : result.cwe_order) {
    SetPair pair = build_cwe_specific_sets(cwe, prep.v_split, index, train_pool,
                                           test_pool, cfg.allow_empty_cwe_sets);
    if (pair.train.entries.empty() || pair.test.entries.empty()) {
      std::fprintf(stderr, "skipping CWE-%d: no records on one side of the split\n",
                   cwe);
      continue;
    }
    per_cwe.emplace_back(cwe, std::move(pair));
  }
  const SetPair balanced = build_balanced_binary_sets(prep.v_split, train_pool, test_pool);
  const LabeledSet test_all = full_test_set(prep);

  write_manifest(manifest_from(balanced, cfg.seed, prep.corpus_digest),
                 join(dir, "sets/balanced.json"));
  for (const auto& [cwe, pair] : per_cwe)
    write_manifest(manifest_from(pair, cfg.seed, prep.corpus_digest),
                   join(dir, "sets/cwe_" + std::to_string(cwe) + ".json"));
  write_manifest(single_set_manifest(test_all, cfg.seed, prep.corpus_digest),
                 join(dir, "sets/d_test_all.json"));

  // m_all first, then the per-CWE models in build order.
  std::vector<std::pair<std::string, Model>> models;
  models.emplace_back(
      "m_all", train_model(balanced.train, index, cfg, ModelKind::binary, {}, "m_all"));
  for (const auto& [cwe, pair] : per_cwe) {
    const std::string name = "m_" + std::to_string(cwe);
    models.emplace_back(
        name, train_model(pair.train, index, cfg, ModelKind::binary, {}, name));
  }
  for (const auto& [name, model] : models)
    write_model(model, join(dir, "models/" + name + ".json"));

  std::vector<const LabeledSet*> tests = {&balanced.test, &test_all};
  for (const auto& [cwe, pair] : per_cwe) tests.push_back(&pair.test);

  const auto truth_all = truth_from(test_all);
  for (const auto& [name, model] : models) {
    for (const LabeledSet* test : tests) {
      const PredictionSet pred = predict(model, ids_of(*test), index);
      eval_cell(result.rows, pred, *test, cfg.r, name);
      if (test == &test_all && name != "m_all") {
        const int cwe = std::stoi(name.substr(2));
        result.breakdowns.push_back(
            {name, test_all.name, tp_breakdown(pred, index, truth_all, cwe)});
      }
    }
  }

  write_report_files(dir, "reports", result.rows, prov);
  write_file(join(dir, "breakdowns.json"), breakdown_json(result.breakdowns, prov) + "\n");
  write_file(join(dir, "breakdowns.txt"), breakdown_table(result.breakdowns));
  return result;
}

// ---------------------------------------------------------------------------
// rq2

Rq2Result cmd_run_rq2(const ExperimentConfig& cfg) {
  if (cfg.top_cwes.empty()) fail("run-rq2 needs a non-empty top_cwes list");
  const Prepared prep = load_prepared(cfg);
  const CorpusIndex index(prep.corpus);
  const std::string dir = join(cfg.out, "rq2");
  const Provenance prov = provenance_for(cfg);

  Rq2Result result;
  result.cwe_order = cwe_build_order(cfg.top_cwes, prep.corpus);

  // Same pools and same per-CWE draw prefix as rq1, so both runs agree on
  // what each d_test_<cwe> contains.
  NonVulnPool train_pool(prep.nv_split.train_ids, cfg.seed);
  NonVulnPool test_pool(prep.nv_split.test_ids, cfg.seed);
  std::vector<std::pair<int, SetPair>> per_cwe;
  for (const int cwe : result.cwe_order) {
    SetPair pair = build_cwe_specific_sets(cwe, prep.v_split, index, train_pool,
                                           test_pool, cfg.allow_empty_cwe_sets);
    if (pair.train.entries.empty() || pair.test.entries.empty()) {
      std::fprintf(stderr, "skipping CWE-%d: no records on one side of the split\n",
                   cwe);
      continue;
    }
    per_cwe.emplace_back(cwe, std::move(pair));
  }

  const Rq2Sets sets = build_rq2_sets(result.cwe_order, prep.v_split, prep.nv_split,
                                      index, train_pool);

  write_manifest(manifest_from(SetPair{sets.train_binary, sets.test}, cfg.seed,
                               prep.corpus_digest),
                 join(dir, "sets/rq2_binary.json"));
  write_manifest(manifest_from(SetPair{sets.train_multiclass, sets.test}, cfg.seed,
                               prep.corpus_digest),
                 join(dir, "sets/rq2_multiclass.json"));
  for (const auto& [cwe, pair] : per_cwe)
    write_manifest(manifest_from(pair, cfg.seed, prep.corpus_digest),
                   join(dir, "sets/cwe_" + std::to_string(cwe) + ".json"));

  const Model m_binary = train_model(sets.train_binary, index, cfg,
                                     ModelKind::binary, {}, "m_binary");
  const Model m_multiclass =
      train_model(sets.train_multiclass, index, cfg, ModelKind::multiclass,
                  result.cwe_order, "m_multiclass");
  write_model(m_binary, join(dir, "models/m_binary.json"));
  write_model(m_multiclass, join(dir, "models/m_multiclass.json"));

  std::vector<const LabeledSet*> tests = {&sets.test};
  for (const auto& [cwe, pair] : per_cwe) tests.push_back(&pair.test);

  // The raw multiclass output and its collapsed binary view are both
  // persisted for the pooled test set, so the collapse is inspectable.
  PredictionSet binary_pooled;
  PredictionSet collapsed_pooled;
  for (const LabeledSet* test : tests) {
    const PredictionSet bin = predict(m_binary, ids_of(*test), index);
    eval_cell(result.rows, bin, *test, cfg.r, "m_binary");
    const PredictionSet raw = predict(m_multiclass, ids_of(*test), index);
    const PredictionSet collapsed = collapse_multiclass(raw);
    eval_cell(result.rows, collapsed, *test, cfg.r, "m_multiclass");
    if (test == &sets.test) {
      write_predictions_jsonl(bin, join(dir, "predictions/m_binary_d_test_rq2.jsonl"));
      write_predictions_jsonl(raw,
                              join(dir, "predictions/m_multiclass_d_test_rq2.jsonl"));
      write_predictions_jsonl(
          collapsed, join(dir, "predictions/m_multiclass_d_test_rq2_collapsed.jsonl"));
      binary_pooled = bin;
      collapsed_pooled = collapsed;
    }
  }

  // Stricter FPR budget on the pooled test set only.
  eval_cell(result.strict_rows, binary_pooled, sets.test, cfg.pairwise_r, "m_binary");
  eval_cell(result.strict_rows, collapsed_pooled, sets.test, cfg.pairwise_r,
            "m_multiclass");

  // Paired evaluation over (vulnerable, fixed) links whose two sides both
  // landed in the pooled test set.
  std::unordered_set<std::string> members;
  for (const auto& e : sets.test.entries) members.insert(e.id);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& p : collect_pairs(prep.corpus))
    if (members.count(p.first) && members.count(p.second)) pairs.push_back(p);
  if (!pairs.empty()) {
    result.pairwise.push_back(
        {"m_binary", sets.test.name, pairwise_eval(binary_pooled, pairs)});
    result.pairwise.push_back(
        {"m_multiclass", sets.test.name, pairwise_eval(collapsed_pooled, pairs)});
  }

  write_report_files(dir, "reports", result.rows, prov);
  write_report_files(dir, "strict", result.strict_rows, prov);
  if (!result.pairwise.empty()) {
    write_file(join(dir, "pairwise.json"), pairwise_json(result.pairwise, prov) + "\n");
    write_file(join(dir, "pairwise.txt"), pairwise_table(result.pairwise));
  }
  return result;
}

// ---------------------------------------------------------------------------
// external predictions

std::vector<MetricsReport> cmd_evaluate(const std::string& predictions_path,
                                        const std::string& manifest_path, double r,
                                        ModelKind kind, const std::string& out_dir) {
  const Manifest m = read_manifest(manifest_path);
  if (m.test_ids.empty()) fail("manifest has no test entries: " + manifest_path);
  std::vector<TruthEntry> truth;
  truth.reserve(m.test_ids.size());
  for (const auto& id : m.test_ids) {
    const auto it = m.labels.find(id);
    if (it == m.labels.end()) fail("manifest is missing a label for id " + id);
    truth.push_back({id, it->second != 0});
  }

  PredictionSet pred = load_external_predictions(predictions_path, kind);
  if (kind == ModelKind::multiclass) pred = collapse_multiclass(pred);
  const std::string model_name =
      pred.model_name.empty() ? "external" : pred.model_name;

  std::vector<MetricsReport> rows;
  rows.push_back(evaluate_predictions(pred, truth, r, EvalMode::hard, model_name, m.name));
  rows.push_back(
      evaluate_predictions(pred, truth, r, EvalMode::score, model_name, m.name));

  if (!out_dir.empty()) {
    const Provenance prov = {{"corpus_digest", m.corpus_digest},
                             {"manifest", m.name},
                             {"seed", std::to_string(m.seed)}};
    write_report_files(out_dir, "reports", rows, prov);
  }
  return rows;
}

}  // namespace vdlab
