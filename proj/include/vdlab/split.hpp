#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vdlab/corpus.hpp"

namespace vdlab {

struct SplitConfig {
  double train_ratio = 0.9;
  std::uint64_t seed = 1;
};

/// A 90/10 partition of one label's records, as id manifests.
struct DatasetSplit {
  std::string name;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::map<int, std::int64_t> per_cwe_train;  // vulnerable split only
  std::map<int, std::int64_t> per_cwe_test;
  std::int64_t neglected = 0;  // vulnerable records without CWE info
  std::uint64_t seed = 0;
  std::string corpus_digest;
};

struct LabeledEntry {
  std::string id;
  int label = 0;  // 0 = benign; 1 for binary regimes, CWE id for multiclass
};

struct LabeledSet {
  std::string name;
  std::vector<LabeledEntry> entries;

  std::int64_t positives() const;  // entries with label != 0
  std::int64_t negatives() const;
};

struct SetPair {
  LabeledSet train;
  LabeledSet test;
};

/// Hands out non-vulnerable ids without replacement across successive draws.
/// Each draw shuffles the remaining pool with a seed derived from the set
/// name, so adding a new set later never perturbs earlier draws.
class NonVulnPool {
 public:
  NonVulnPool(std::vector<std::string> ids, std::uint64_t seed);

  /// UserError naming the set when fewer than n ids remain.
  std::vector<std::string> draw(std::size_t n, const std::string& set_name);
  std::size_t remaining() const { return ids_.size(); }

 private:
  std::vector<std::string> ids_;
  std::uint64_t seed_;
};

/// Shuffles each primary-CWE group with its own derived stream and sends the
/// first floor(train_ratio * n) to train. Vulnerable records without CWE
/// tags are excluded and counted as neglected.
DatasetSplit stratified_split_vulnerable(const Corpus& corpus, const SplitConfig& cfg);

/// One seeded shuffle over all non-vulnerable records, same ratio rule.
DatasetSplit split_nonvulnerable(const Corpus& corpus, const SplitConfig& cfg);

/// Balanced per-CWE sets: every train/test vulnerable record whose primary
/// CWE matches, plus the same number of pool draws. With allow_empty a CWE
/// absent from one side yields an empty set instead of an error.
SetPair build_cwe_specific_sets(int cwe, const DatasetSplit& v_split,
                                const CorpusIndex& index, NonVulnPool& train_pool,
                                NonVulnPool& test_pool, bool allow_empty = false);

/// Pooled binary sets over ALL vulnerable records of the split.
SetPair build_balanced_binary_sets(const DatasetSplit& v_split,
                                   NonVulnPool& train_pool, NonVulnPool& test_pool);

struct Rq2Sets {
  LabeledSet train_binary;      // top-CWE vulnerable + matched draws, labels {1,0}
  LabeledSet train_multiclass;  // same membership, labels {primary CWE} ∪ {0}
  LabeledSet test;              // every non-vulnerable test id + top-CWE vulnerable test ids
};

/// Training restricted to primary CWE ∈ top_cwes; the shared test set keeps
/// the whole non-vulnerable test side.
Rq2Sets build_rq2_sets(const std::vector<int>& top_cwes, const DatasetSplit& v_split,
                       const DatasetSplit& nv_split, const CorpusIndex& index,
                       NonVulnPool& train_pool);

// ---------------------------------------------------------------------------
// Manifests: persisted id lists; code stays in the corpus file.

struct Manifest {
  std::string name;
  std::uint64_t seed = 0;
  std::string corpus_digest;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::map<std::string, int> labels;            // id -> training label
  std::map<std::string, std::int64_t> counts;   // named tallies

  bool operator==(const Manifest&) const = default;
};

Manifest manifest_from(const SetPair& pair, std::uint64_t seed,
                       const std::string& corpus_digest);
Manifest manifest_from(const DatasetSplit& split);
std::string manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const std::string& text);
void write_manifest(const Manifest& m, const std::string& path);
Manifest read_manifest(const std::string& path);

}  // namespace vdlab
