#include <algorithm>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "vdlab/error.hpp"
#include "vdlab/split.hpp"

using namespace vdlab;
using vdlab::testing::TempDir;
using vdlab::testing::corpus_of;
using vdlab::testing::rec;

namespace {

/// n_a vulnerable CWE-125, n_b vulnerable CWE-787, n_untagged vulnerable
/// without CWE info, n_nv non-vulnerable.
Corpus split_corpus(int n_a, int n_b, int n_untagged, int n_nv) {
  std::vector<FunctionRecord> records;
  for (int i = 0; i < n_a; ++i)
    records.push_back(rec("a" + std::to_string(i), "a" + std::to_string(i) + "();", 1, {125}));
  for (int i = 0; i < n_b; ++i)
    records.push_back(rec("b" + std::to_string(i), "b" + std::to_string(i) + "();", 1, {787}));
  for (int i = 0; i < n_untagged; ++i)
    records.push_back(rec("u" + std::to_string(i), "u" + std::to_string(i) + "();", 1));
  for (int i = 0; i < n_nv; ++i)
    records.push_back(rec("n" + std::to_string(i), "n" + std::to_string(i) + "();", 0));
  return corpus_of(std::move(records));
}

template <typename C>
std::set<std::string> as_set(const C& ids) {
  return std::set<std::string>(ids.begin(), ids.end());
}

}  // namespace

TEST_CASE("stratified split takes floor(ratio*n) per CWE and skips untagged") {
  const Corpus c = split_corpus(23, 7, 3, 0);
  const DatasetSplit split = stratified_split_vulnerable(c, {0.9, 5});

  CHECK(split.per_cwe_train.at(125) == 20);  // floor(0.9 * 23)
  CHECK(split.per_cwe_test.at(125) == 3);
  CHECK(split.per_cwe_train.at(787) == 6);  // floor(0.9 * 7)
  CHECK(split.per_cwe_test.at(787) == 1);
  CHECK(split.neglected == 3);
  CHECK(split.train_ids.size() == 26);
  CHECK(split.test_ids.size() == 4);

  // Disjoint, and together exactly the tagged vulnerable ids.
  const auto train = as_set(split.train_ids);
  const auto test = as_set(split.test_ids);
  for (const auto& id : test) CHECK(train.count(id) == 0);
  std::set<std::string> all = train;
  all.insert(test.begin(), test.end());
  CHECK(all.size() == 30);
  CHECK(all.count("u0") == 0);
}

TEST_CASE("floor rule holds across group sizes") {
  for (int n = 1; n <= 25; ++n) {
    const Corpus c = split_corpus(n, 0, 0, 0);
    const DatasetSplit split = stratified_split_vulnerable(c, {0.9, 1});
    CHECK(split.per_cwe_train.at(125) ==
          static_cast<std::int64_t>(static_cast<double>(n) * 0.9));
  }
}

TEST_CASE("invalid ratio is fatal") {
  const Corpus c = split_corpus(5, 0, 0, 5);
  CHECK_THROWS_AS(stratified_split_vulnerable(c, {0.0, 1}), UserError);
  CHECK_THROWS_AS(split_nonvulnerable(c, {1.0, 1}), UserError);
}

TEST_CASE("non-vulnerable split covers all benign records") {
  const Corpus c = split_corpus(4, 0, 0, 50);
  const DatasetSplit split = split_nonvulnerable(c, {0.9, 5});
  CHECK(split.train_ids.size() == 45);
  CHECK(split.test_ids.size() == 5);
  std::set<std::string> all = as_set(split.train_ids);
  all.insert(split.test_ids.begin(), split.test_ids.end());
  CHECK(all.size() == 50);
  for (const auto& id : all) CHECK(id[0] == 'n');
}

TEST_CASE("pool draws are disjoint, deterministic and prefix-stable") {
  std::vector<std::string> ids;
  for (int i = 0; i < 60; ++i) ids.push_back("n" + std::to_string(i));

  NonVulnPool pool(ids, 7);
  const auto d1 = pool.draw(20, "one");
  const auto d2 = pool.draw(20, "two");
  const auto d3 = pool.draw(15, "three");
  CHECK(pool.remaining() == 5);

  std::set<std::string> seen;
  for (const auto* d : {&d1, &d2, &d3}) {
    for (const auto& id : *d) CHECK(seen.insert(id).second);  // pairwise disjoint
  }

  // Same seed, same names: identical draws.
  NonVulnPool again(ids, 7);
  CHECK(again.draw(20, "one") == d1);
  CHECK(again.draw(20, "two") == d2);

  // Earlier draws do not depend on later ones existing.
  NonVulnPool shorter(ids, 7);
  CHECK(shorter.draw(20, "one") == d1);

  CHECK_THROWS_WITH_AS(pool.draw(6, "exhaust"),
                       doctest::Contains("need 6, have 5"), UserError);
}

TEST_CASE("cwe-specific sets are balanced and label-correct") {
  const Corpus c = split_corpus(23, 7, 0, 80);
  const CorpusIndex index(c);
  const DatasetSplit v = stratified_split_vulnerable(c, {0.9, 3});
  const DatasetSplit nv = split_nonvulnerable(c, {0.9, 3});

  NonVulnPool train_pool(nv.train_ids, 3);
  NonVulnPool test_pool(nv.test_ids, 3);
  const SetPair pair = build_cwe_specific_sets(125, v, index, train_pool, test_pool);

  CHECK(pair.train.name == "d_train_125");
  CHECK(pair.test.name == "d_test_125");
  CHECK(pair.train.positives() == 20);
  CHECK(pair.train.negatives() == 20);
  CHECK(pair.test.positives() == 3);
  CHECK(pair.test.negatives() == 3);
  for (const auto& e : pair.train.entries) {
    const auto& r = index.at(e.id);
    CHECK(e.label == (r.vulnerable() ? 1 : 0));
    if (r.vulnerable()) CHECK(r.primary_cwe() == 125);
  }

  // Absent CWE: fatal by default, empty sets when explicitly allowed.
  CHECK_THROWS_AS(build_cwe_specific_sets(999, v, index, train_pool, test_pool),
                  UserError);
  const SetPair empty = build_cwe_specific_sets(999, v, index, train_pool,
                                                test_pool, /*allow_empty=*/true);
  CHECK(empty.train.entries.empty());
  CHECK(empty.test.entries.empty());
}

TEST_CASE("balanced binary sets cover the whole vulnerable split") {
  const Corpus c = split_corpus(23, 7, 0, 80);
  const CorpusIndex index(c);
  const DatasetSplit v = stratified_split_vulnerable(c, {0.9, 3});
  const DatasetSplit nv = split_nonvulnerable(c, {0.9, 3});
  NonVulnPool train_pool(nv.train_ids, 3);
  NonVulnPool test_pool(nv.test_ids, 3);

  const SetPair pair = build_balanced_binary_sets(v, train_pool, test_pool);
  CHECK(pair.train.name == "d_train_balanced");
  CHECK(pair.train.positives() == 26);
  CHECK(pair.train.negatives() == 26);
  CHECK(pair.test.positives() == 4);
  CHECK(pair.test.negatives() == 4);
}

TEST_CASE("rq2 sets share membership and keep the full benign test side") {
  const Corpus c = split_corpus(23, 7, 0, 300);
  const CorpusIndex index(c);
  const DatasetSplit v = stratified_split_vulnerable(c, {0.9, 3});
  const DatasetSplit nv = split_nonvulnerable(c, {0.9, 3});
  NonVulnPool train_pool(nv.train_ids, 3);

  const Rq2Sets sets = build_rq2_sets({125}, v, nv, index, train_pool);

  // Binary and multiclass training share ids in the same order; only the
  // labels differ.
  REQUIRE(sets.train_binary.entries.size() == sets.train_multiclass.entries.size());
  for (std::size_t i = 0; i < sets.train_binary.entries.size(); ++i) {
    const auto& bin = sets.train_binary.entries[i];
    const auto& mc = sets.train_multiclass.entries[i];
    CHECK(bin.id == mc.id);
    if (bin.label == 0) {
      CHECK(mc.label == 0);
    } else {
      CHECK(bin.label == 1);
      CHECK(mc.label == index.at(mc.id).primary_cwe());
    }
  }
  CHECK(sets.train_binary.positives() == 20);   // CWE-125 train side only
  CHECK(sets.train_binary.negatives() == 20);

  // Test set: the CWE-125 vulnerable test ids, then ALL benign test ids.
  CHECK(sets.test.name == "d_test_rq2");
  CHECK(sets.test.positives() == 3);
  CHECK(sets.test.negatives() == static_cast<std::int64_t>(nv.test_ids.size()));
}

TEST_CASE("manifests round-trip and are byte-stable across runs") {
  const Corpus c = split_corpus(23, 7, 2, 40);

  std::string first;
  for (int run = 0; run < 3; ++run) {
    const DatasetSplit v = stratified_split_vulnerable(c, {0.9, 11});
    const std::string json = manifest_to_json(manifest_from(v));
    if (run == 0)
      first = json;
    else
      CHECK(json == first);
  }

  const DatasetSplit v = stratified_split_vulnerable(c, {0.9, 11});
  const Manifest m = manifest_from(v);
  CHECK(m.counts.at("neglected") == 2);
  CHECK(m.counts.at("train_cwe_125") == 20);
  const Manifest back = manifest_from_json(manifest_to_json(m));
  CHECK(back == m);

  TempDir tmp("manifest");
  write_manifest(m, tmp.file("d_v.json"));
  CHECK(read_manifest(tmp.file("d_v.json")) == m);

  // A different seed reshuffles the membership.
  const DatasetSplit other = stratified_split_vulnerable(c, {0.9, 12});
  CHECK(other.train_ids != v.train_ids);
}
