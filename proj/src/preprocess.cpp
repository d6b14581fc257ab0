#include "vdlab/preprocess.hpp"

#include <unordered_set>

#include "json.hpp"
#include "vdlab/error.hpp"
#include "vdlab/md5.hpp"
#include "vdlab/text.hpp"

namespace vdlab {

std::string normalize_function(std::string_view code) {
  std::string out;
  out.reserve(code.size());
  for (char ch : code)
    if (ch != ' ' && ch != '\t' && ch != '\n' && ch != '\r') out += ch;
  return out;
}

std::string content_hash(std::string_view normalized) {
  return md5_hex(normalized);
}

std::string DedupReport::to_json() const {
  nlohmann::ordered_json j;
  j["input"] = input;
  j["kept"] = kept;
  j["dropped"] = dropped;
  j["label_conflicts"] = label_conflicts;
  j["by_source"] = by_source;
  return j.dump(2);
}

DedupResult deduplicate(const Corpus& corpus) {
  DedupResult result;
  result.corpus.provenance = corpus.provenance;
  result.report.input = static_cast<std::int64_t>(corpus.records.size());

  std::unordered_map<std::string, Label> seen;  // digest -> label of the kept record
  seen.reserve(corpus.records.size());
  for (const auto& r : corpus.records) {
    const std::string digest = content_hash(normalize_function(r.code));
    auto [it, inserted] = seen.emplace(digest, r.label);
    if (inserted) {
      ++result.report.kept;
      result.corpus.records.push_back(r);
    } else {
      ++result.report.dropped;
      result.report.by_source[r.source] += 1;
      if (it->second != r.label) ++result.report.label_conflicts;
    }
  }
  return result;
}

LengthFilterResult filter_length(const Corpus& corpus, std::int64_t max_len) {
  if (max_len < 1) fail("filter_length: max_len must be >= 1");
  LengthFilterResult result;
  result.corpus.provenance = corpus.provenance;
  result.report.max_len = max_len;
  for (const auto& r : corpus.records) {
    const bool keep = static_cast<std::int64_t>(utf8_length(r.code)) <= max_len;
    if (keep) {
      (r.vulnerable() ? result.report.kept_vulnerable
                      : result.report.kept_non_vulnerable) += 1;
      result.corpus.records.push_back(r);
    } else {
      (r.vulnerable() ? result.report.dropped_vulnerable
                      : result.report.dropped_non_vulnerable) += 1;
    }
  }
  return result;
}

}  // namespace vdlab
