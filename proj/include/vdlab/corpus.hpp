#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace vdlab {

enum class Label { non_vulnerable = 0, vulnerable = 1 };

/// One source-code function with its ground-truth label and CWE tags.
struct FunctionRecord {
  std::string id;              // unique within a corpus, "<source>:<index>"
  std::string code;            // raw function text, valid UTF-8
  Label label = Label::non_vulnerable;
  std::vector<int> cwes;       // ordered; empty iff no CWE info (always empty
                               // for non-vulnerable records)
  std::string source;
  std::string project;         // empty = absent
  std::string commit;          // empty = absent
  std::string pair_id;         // links a vulnerable record to its fixed
                               // counterpart; empty = unpaired

  bool vulnerable() const { return label == Label::vulnerable; }
  /// First listed CWE, the record's class for splitting and training.
  /// 0 when the record has no CWE tags.
  int primary_cwe() const { return cwes.empty() ? 0 : cwes.front(); }
};

struct SourceDescriptor {
  std::string source;
  std::string path;            // empty for generated corpora
  std::int64_t records = 0;
};

struct Corpus {
  std::vector<FunctionRecord> records;
  std::vector<SourceDescriptor> provenance;
};

/// Id lookup over an immutable corpus.
class CorpusIndex {
 public:
  explicit CorpusIndex(const Corpus& corpus);

  const FunctionRecord* find(const std::string& id) const;
  /// UserError naming the id if absent.
  const FunctionRecord& at(const std::string& id) const;

 private:
  std::unordered_map<std::string, std::size_t> by_id_;
  const Corpus* corpus_;
};

// ---------------------------------------------------------------------------
// Ingestion

/// Field names for one JSONL source. Known tags: "diversevul", "cvefixes",
/// "crossvul" (all func/target/cwe/project/commit_id) and "canonical" (the
/// format written by write_canonical_jsonl, which carries ids and sources in
/// the file).
struct SourceSchema {
  std::string code_field = "func";
  std::string label_field = "target";
  std::string cwe_field = "cwe";
  std::string project_field = "project";
  std::string commit_field = "commit_id";
  bool canonical = false;
};

SourceSchema schema_for(const std::string& tag);

struct IngestReport {
  std::string path;
  std::string source;
  std::int64_t lines = 0;       // physical non-blank lines
  std::int64_t ingested = 0;
  std::int64_t skipped = 0;     // malformed lines
  std::int64_t cleared_nonvuln_cwes = 0;  // non-vulnerable records whose CWE
                                          // tags were dropped
  std::vector<std::string> errors;        // first few "line N: why" messages
};

struct IngestResult {
  Corpus corpus;
  IngestReport report;
};

/// Reads one JSONL file; one record per well-formed line, in file order.
/// Malformed lines are skipped, counted and logged with their line number.
/// Record ids are "<source_tag>:<index>" unless the schema is canonical.
IngestResult ingest_jsonl(const std::string& path, const std::string& source_tag);

/// Concatenates corpora in argument order. Duplicate ids are re-suffixed by
/// source; duplicate content is kept (de-duplication is a separate pass).
Corpus merge_corpora(std::vector<Corpus> corpora);

// ---------------------------------------------------------------------------
// Canonical serialization

/// One compact JSON object: id, code, label, cwes, source, then project /
/// commit / pair_id when present. No trailing newline.
std::string canonical_line(const FunctionRecord& r);
std::string to_canonical_jsonl(const Corpus& c);
void write_canonical_jsonl(const Corpus& c, const std::string& path);

/// MD5 over the canonical serialization; identifies the corpus in manifests.
std::string corpus_digest(const Corpus& c);

// ---------------------------------------------------------------------------
// Statistics

/// Length-bucket counts per label: [0,4k) [4k,8k) [8k,12k) [12k,inf), plus a
/// per-length histogram of the whole corpus.
struct LengthBucketReport {
  static constexpr std::array<std::int64_t, 3> kEdges = {4000, 8000, 12000};

  std::array<std::int64_t, 4> vulnerable{};
  std::array<std::int64_t, 4> non_vulnerable{};
  std::vector<std::pair<std::int64_t, std::int64_t>> histogram;  // (length, count)

  std::int64_t bucket_total(std::size_t b) const {
    return vulnerable[b] + non_vulnerable[b];
  }
  std::int64_t all_vulnerable() const;
  std::int64_t all_non_vulnerable() const;
  std::int64_t grand_total() const;
  double bucket_pct(std::size_t b) const;  // share of grand total, in percent
};

LengthBucketReport corpus_stats(const Corpus& c);
std::string stats_csv(const LengthBucketReport& r);
std::string stats_table(const LengthBucketReport& r);
std::string histogram_csv(const LengthBucketReport& r);

/// CWE counts over vulnerable records (a record with k CWEs contributes to
/// each), descending by count, ties ascending by id.
struct CweCount {
  int cwe = 0;
  std::int64_t count = 0;
  bool operator==(const CweCount&) const = default;
};

std::vector<CweCount> cwe_distribution(const Corpus& c);

struct CweDistributionView {
  std::vector<CweCount> top;     // most frequent first
  std::vector<CweCount> bottom;  // least frequent, in ranked order
};

CweDistributionView cwe_top_bottom(const std::vector<CweCount>& ranked,
                                   std::size_t n = 15);
std::string cwe_distribution_csv(const std::vector<CweCount>& ranked);
std::string cwe_distribution_table(const CweDistributionView& view);

}  // namespace vdlab
