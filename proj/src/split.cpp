#include "vdlab/split.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "json.hpp"
#include "vdlab/error.hpp"
#include "vdlab/io.hpp"
#include "vdlab/rng.hpp"

namespace vdlab {
namespace {

std::size_t train_count(std::size_t n, double ratio) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio));
}

void check_ratio(double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0))
    fail("train_ratio must be strictly between 0 and 1");
}

void append_labeled(LabeledSet& set, const std::vector<std::string>& ids, int label) {
  for (const auto& id : ids) set.entries.push_back({id, label});
}

}  // namespace

std::int64_t LabeledSet::positives() const {
  std::int64_t n = 0;
  for (const auto& e : entries) n += e.label != 0;
  return n;
}

std::int64_t LabeledSet::negatives() const {
  return static_cast<std::int64_t>(entries.size()) - positives();
}

NonVulnPool::NonVulnPool(std::vector<std::string> ids, std::uint64_t seed)
    : ids_(std::move(ids)), seed_(seed) {}

std::vector<std::string> NonVulnPool::draw(std::size_t n, const std::string& set_name) {
  if (n > ids_.size())
    fail("non-vulnerable pool exhausted drawing " + set_name + ": need " +
         std::to_string(n) + ", have " + std::to_string(ids_.size()));
  std::vector<std::string> shuffled = ids_;
  Rng rng(derive_seed(seed_, "nvdraw", fnv1a64(set_name)));
  rng.shuffle(shuffled);
  shuffled.resize(n);

  // Drop the drawn ids; the remainder keeps its original stable order so
  // later draws do not depend on this draw's shuffle.
  std::unordered_set<std::string> taken(shuffled.begin(), shuffled.end());
  std::vector<std::string> rest;
  rest.reserve(ids_.size() - n);
  for (auto& id : ids_)
    if (!taken.count(id)) rest.push_back(std::move(id));
  ids_ = std::move(rest);
  return shuffled;
}

DatasetSplit stratified_split_vulnerable(const Corpus& corpus, const SplitConfig& cfg) {
  check_ratio(cfg.train_ratio);
  DatasetSplit split;
  split.name = "d_v";
  split.seed = cfg.seed;
  split.corpus_digest = corpus_digest(corpus);

  std::map<int, std::vector<std::string>> by_cwe;  // ascending CWE order
  for (const auto& r : corpus.records) {
    if (!r.vulnerable()) continue;
    if (r.cwes.empty()) {
      ++split.neglected;
      continue;
    }
    by_cwe[r.primary_cwe()].push_back(r.id);
  }

  for (auto& [cwe, ids] : by_cwe) {
    Rng rng(derive_seed(cfg.seed, "stratify", static_cast<std::uint64_t>(cwe)));
    rng.shuffle(ids);
    const std::size_t cut = train_count(ids.size(), cfg.train_ratio);
    split.per_cwe_train[cwe] = static_cast<std::int64_t>(cut);
    split.per_cwe_test[cwe] = static_cast<std::int64_t>(ids.size() - cut);
    for (std::size_t i = 0; i < ids.size(); ++i)
      (i < cut ? split.train_ids : split.test_ids).push_back(std::move(ids[i]));
  }
  return split;
}

DatasetSplit split_nonvulnerable(const Corpus& corpus, const SplitConfig& cfg) {
  check_ratio(cfg.train_ratio);
  DatasetSplit split;
  split.name = "d_nv";
  split.seed = cfg.seed;
  split.corpus_digest = corpus_digest(corpus);

  std::vector<std::string> ids;
  for (const auto& r : corpus.records)
    if (!r.vulnerable()) ids.push_back(r.id);

  Rng rng(derive_seed(cfg.seed, "nvsplit"));
  rng.shuffle(ids);
  const std::size_t cut = train_count(ids.size(), cfg.train_ratio);
  for (std::size_t i = 0; i < ids.size(); ++i)
    (i < cut ? split.train_ids : split.test_ids).push_back(std::move(ids[i]));
  return split;
}

SetPair build_cwe_specific_sets(int cwe, const DatasetSplit& v_split,
                                const CorpusIndex& index, NonVulnPool& train_pool,
                                NonVulnPool& test_pool, bool allow_empty) {
  const std::string tag = std::to_string(cwe);
  SetPair pair;
  pair.train.name = "d_train_" + tag;
  pair.test.name = "d_test_" + tag;

  auto select = [&](const std::vector<std::string>& side) {
    std::vector<std::string> out;
    for (const auto& id : side)
      if (index.at(id).primary_cwe() == cwe) out.push_back(id);
    return out;
  };
  const std::vector<std::string> train_v = select(v_split.train_ids);
  const std::vector<std::string> test_v = select(v_split.test_ids);
  if (!allow_empty && (train_v.empty() || test_v.empty()))
    fail("CWE-" + tag + " has no vulnerable samples on the " +
         (train_v.empty() ? std::string("train") : std::string("test")) + " side");

  append_labeled(pair.train, train_v, 1);
  append_labeled(pair.train, train_pool.draw(train_v.size(), pair.train.name), 0);
  append_labeled(pair.test, test_v, 1);
  append_labeled(pair.test, test_pool.draw(test_v.size(), pair.test.name), 0);
  return pair;
}

SetPair build_balanced_binary_sets(const DatasetSplit& v_split,
                                   NonVulnPool& train_pool, NonVulnPool& test_pool) {
  SetPair pair;
  pair.train.name = "d_train_balanced";
  pair.test.name = "d_test_balanced";
  append_labeled(pair.train, v_split.train_ids, 1);
  append_labeled(pair.train, train_pool.draw(v_split.train_ids.size(), pair.train.name), 0);
  append_labeled(pair.test, v_split.test_ids, 1);
  append_labeled(pair.test, test_pool.draw(v_split.test_ids.size(), pair.test.name), 0);
  return pair;
}

Rq2Sets build_rq2_sets(const std::vector<int>& top_cwes, const DatasetSplit& v_split,
                       const DatasetSplit& nv_split, const CorpusIndex& index,
                       NonVulnPool& train_pool) {
  if (top_cwes.empty()) fail("top_cwes must not be empty");
  const std::unordered_set<int> wanted(top_cwes.begin(), top_cwes.end());

  Rq2Sets sets;
  sets.train_binary.name = "d_train_rq2";
  sets.train_multiclass.name = "d_train_rq2_mc";
  sets.test.name = "d_test_rq2";

  std::vector<std::string> train_v;
  for (const auto& id : v_split.train_ids)
    if (wanted.count(index.at(id).primary_cwe())) train_v.push_back(id);

  const std::vector<std::string> nv_draw =
      train_pool.draw(train_v.size(), sets.train_binary.name);
  append_labeled(sets.train_binary, train_v, 1);
  append_labeled(sets.train_binary, nv_draw, 0);
  for (const auto& id : train_v)
    sets.train_multiclass.entries.push_back({id, index.at(id).primary_cwe()});
  append_labeled(sets.train_multiclass, nv_draw, 0);

  for (const auto& id : v_split.test_ids)
    if (wanted.count(index.at(id).primary_cwe())) sets.test.entries.push_back({id, 1});
  append_labeled(sets.test, nv_split.test_ids, 0);
  return sets;
}

Manifest manifest_from(const SetPair& pair, std::uint64_t seed,
                       const std::string& corpus_digest) {
  Manifest m;
  m.name = pair.train.name + "+" + pair.test.name;
  m.seed = seed;
  m.corpus_digest = corpus_digest;
  for (const auto& e : pair.train.entries) {
    m.train_ids.push_back(e.id);
    m.labels[e.id] = e.label;
  }
  for (const auto& e : pair.test.entries) {
    m.test_ids.push_back(e.id);
    m.labels[e.id] = e.label;
  }
  m.counts["train_vulnerable"] = pair.train.positives();
  m.counts["train_non_vulnerable"] = pair.train.negatives();
  m.counts["test_vulnerable"] = pair.test.positives();
  m.counts["test_non_vulnerable"] = pair.test.negatives();
  return m;
}

Manifest manifest_from(const DatasetSplit& split) {
  Manifest m;
  m.name = split.name;
  m.seed = split.seed;
  m.corpus_digest = split.corpus_digest;
  m.train_ids = split.train_ids;
  m.test_ids = split.test_ids;
  m.counts["train"] = static_cast<std::int64_t>(split.train_ids.size());
  m.counts["test"] = static_cast<std::int64_t>(split.test_ids.size());
  m.counts["neglected"] = split.neglected;
  for (const auto& [cwe, n] : split.per_cwe_train)
    m.counts["train_cwe_" + std::to_string(cwe)] = n;
  for (const auto& [cwe, n] : split.per_cwe_test)
    m.counts["test_cwe_" + std::to_string(cwe)] = n;
  return m;
}

std::string manifest_to_json(const Manifest& m) {
  nlohmann::ordered_json j;
  j["name"] = m.name;
  j["seed"] = m.seed;
  j["corpus_digest"] = m.corpus_digest;
  j["train"] = m.train_ids;
  j["test"] = m.test_ids;
  j["labels"] = m.labels;
  j["counts"] = m.counts;
  return j.dump(2);
}

Manifest manifest_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail("manifest is not a JSON object");
  Manifest m;
  try {
    m.name = j.at("name").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.corpus_digest = j.at("corpus_digest").get<std::string>();
    m.train_ids = j.at("train").get<std::vector<std::string>>();
    m.test_ids = j.at("test").get<std::vector<std::string>>();
    m.labels = j.at("labels").get<std::map<std::string, int>>();
    m.counts = j.at("counts").get<std::map<std::string, std::int64_t>>();
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const Manifest& m, const std::string& path) {
  write_file(path, manifest_to_json(m) + "\n");
}

Manifest read_manifest(const std::string& path) {
  return manifest_from_json(read_file(path));
}

}  // namespace vdlab
