#include "vdlab/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <iostream>
#include <unordered_set>

#include "json.hpp"
#include "vdlab/error.hpp"
#include "vdlab/io.hpp"
#include "vdlab/md5.hpp"
#include "vdlab/table.hpp"
#include "vdlab/text.hpp"

namespace vdlab {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::size_t kMaxReportedErrors = 10;

void note_error(IngestReport& report, std::int64_t line_no, const std::string& why) {
  ++report.skipped;
  std::string msg = "line " + std::to_string(line_no) + ": " + why;
  if (report.errors.size() < kMaxReportedErrors) report.errors.push_back(msg);
  std::cerr << report.path << ": skipped " << msg << "\n";
}

// "125", "CWE-125" or an integer; anything else is a parse failure.
bool parse_cwe(const json& v, int& out) {
  if (v.is_number_integer()) {
    const auto n = v.get<std::int64_t>();
    if (n < 1 || n > 99999) return false;
    out = static_cast<int>(n);
    return true;
  }
  if (!v.is_string()) return false;
  std::string s = v.get<std::string>();
  if (s.rfind("CWE-", 0) == 0 || s.rfind("cwe-", 0) == 0) s = s.substr(4);
  if (s.empty() || s.size() > 5) return false;
  int n = 0;
  for (char ch : s) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
    n = n * 10 + (ch - '0');
  }
  if (n < 1) return false;
  out = n;
  return true;
}

// Accepts an array of CWE tags or a single tag; null / missing means "no
// information". Returns false if any element fails to parse.
bool parse_cwe_field(const json& v, std::vector<int>& out) {
  out.clear();
  if (v.is_null()) return true;
  if (v.is_array()) {
    for (const auto& e : v) {
      int cwe = 0;
      if (!parse_cwe(e, cwe)) return false;
      out.push_back(cwe);
    }
    return true;
  }
  int cwe = 0;
  if (!parse_cwe(v, cwe)) return false;
  out.push_back(cwe);
  return true;
}

bool parse_label(const json& v, Label& out) {
  if (v.is_boolean()) {
    out = v.get<bool>() ? Label::vulnerable : Label::non_vulnerable;
    return true;
  }
  if (v.is_number_integer()) {
    const auto n = v.get<std::int64_t>();
    if (n != 0 && n != 1) return false;
    out = n == 1 ? Label::vulnerable : Label::non_vulnerable;
    return true;
  }
  return false;
}

std::string get_string_or_empty(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return {};
  return it->get<std::string>();
}

std::string fmt2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

}  // namespace

CorpusIndex::CorpusIndex(const Corpus& corpus) : corpus_(&corpus) {
  by_id_.reserve(corpus.records.size());
  for (std::size_t i = 0; i < corpus.records.size(); ++i)
    by_id_.emplace(corpus.records[i].id, i);
}

const FunctionRecord* CorpusIndex::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &corpus_->records[it->second];
}

const FunctionRecord& CorpusIndex::at(const std::string& id) const {
  const FunctionRecord* r = find(id);
  if (!r) fail("unknown record id: " + id);
  return *r;
}

SourceSchema schema_for(const std::string& tag) {
  SourceSchema s;
  if (tag == "diversevul" || tag == "cvefixes" || tag == "crossvul") return s;
  if (tag == "canonical") {
    s.canonical = true;
    return s;
  }
  fail("unknown source schema tag: " + tag +
       " (known: diversevul, cvefixes, crossvul, canonical)");
}

IngestResult ingest_jsonl(const std::string& path, const std::string& source_tag) {
  const SourceSchema schema = schema_for(source_tag);
  const std::string content = read_file(path);

  IngestResult result;
  IngestReport& report = result.report;
  report.path = path;
  report.source = source_tag;

  std::unordered_set<std::string> seen_ids;  // canonical files carry ids
  std::int64_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    const std::size_t nl = content.find('\n', pos);
    std::string line = content.substr(
        pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? content.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++report.lines;

    if (!utf8_valid(line)) line = sanitize_utf8(line);
    json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object()) {
      note_error(report, line_no, "not a JSON object");
      continue;
    }

    FunctionRecord rec;
    if (schema.canonical) {
      rec.id = get_string_or_empty(obj, "id");
      rec.source = get_string_or_empty(obj, "source");
      rec.pair_id = get_string_or_empty(obj, "pair_id");
      if (rec.id.empty() || rec.source.empty()) {
        note_error(report, line_no, "canonical record without id/source");
        continue;
      }
      if (!seen_ids.insert(rec.id).second) {
        note_error(report, line_no, "duplicate id " + rec.id);
        continue;
      }
    } else {
      rec.source = source_tag;
    }

    const std::string code_key = schema.canonical ? "code" : schema.code_field;
    auto code_it = obj.find(code_key);
    if (code_it == obj.end() || !code_it->is_string()) {
      note_error(report, line_no, "missing code field '" + code_key + "'");
      continue;
    }
    rec.code = code_it->get<std::string>();
    if (!utf8_valid(rec.code)) rec.code = sanitize_utf8(rec.code);

    const std::string label_key = schema.canonical ? "label" : schema.label_field;
    auto label_it = obj.find(label_key);
    if (label_it == obj.end() || !parse_label(*label_it, rec.label)) {
      note_error(report, line_no, "missing or non-binary label field '" + label_key + "'");
      continue;
    }

    const std::string cwe_key = schema.canonical ? "cwes" : schema.cwe_field;
    if (auto it = obj.find(cwe_key); it != obj.end()) {
      if (!parse_cwe_field(*it, rec.cwes)) {
        note_error(report, line_no, "unparseable CWE field");
        continue;
      }
    }
    if (!rec.vulnerable() && !rec.cwes.empty()) {
      rec.cwes.clear();
      ++report.cleared_nonvuln_cwes;
    }

    rec.project = get_string_or_empty(obj, schema.canonical ? "project" : schema.project_field);
    rec.commit = get_string_or_empty(obj, schema.canonical ? "commit" : schema.commit_field);
    if (!schema.canonical)
      rec.id = source_tag + ":" + std::to_string(report.ingested);

    ++report.ingested;
    result.corpus.records.push_back(std::move(rec));
  }

  result.corpus.provenance.push_back({source_tag, path, report.ingested});
  return result;
}

Corpus merge_corpora(std::vector<Corpus> corpora) {
  if (corpora.empty()) fail("merge_corpora: no corpora given");
  Corpus merged = std::move(corpora.front());
  std::unordered_set<std::string> ids;
  ids.reserve(merged.records.size());
  for (const auto& r : merged.records) ids.insert(r.id);

  for (std::size_t c = 1; c < corpora.size(); ++c) {
    for (auto& r : corpora[c].records) {
      if (!ids.insert(r.id).second) {
        // Re-suffix until unique; keeps both copies (dedup is a later,
        // content-based pass).
        std::string base = r.id + "#" + r.source;
        std::string candidate = base;
        for (int k = 2; !ids.insert(candidate).second; ++k)
          candidate = base + "#" + std::to_string(k);
        r.id = candidate;
      }
      merged.records.push_back(std::move(r));
    }
    for (auto& p : corpora[c].provenance) merged.provenance.push_back(std::move(p));
  }
  return merged;
}

std::string canonical_line(const FunctionRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["code"] = r.code;
  j["label"] = r.vulnerable() ? 1 : 0;
  j["cwes"] = r.cwes;
  j["source"] = r.source;
  if (!r.project.empty()) j["project"] = r.project;
  if (!r.commit.empty()) j["commit"] = r.commit;
  if (!r.pair_id.empty()) j["pair_id"] = r.pair_id;
  return j.dump();
}

std::string to_canonical_jsonl(const Corpus& c) {
  std::string out;
  for (const auto& r : c.records) {
    out += canonical_line(r);
    out += '\n';
  }
  return out;
}

void write_canonical_jsonl(const Corpus& c, const std::string& path) {
  write_file(path, to_canonical_jsonl(c));
}

std::string corpus_digest(const Corpus& c) {
  Md5 md5;
  for (const auto& r : c.records) {
    md5.update(canonical_line(r));
    md5.update("\n");
  }
  return md5.hex();
}

std::int64_t LengthBucketReport::all_vulnerable() const {
  std::int64_t n = 0;
  for (auto v : vulnerable) n += v;
  return n;
}

std::int64_t LengthBucketReport::all_non_vulnerable() const {
  std::int64_t n = 0;
  for (auto v : non_vulnerable) n += v;
  return n;
}

std::int64_t LengthBucketReport::grand_total() const {
  return all_vulnerable() + all_non_vulnerable();
}

double LengthBucketReport::bucket_pct(std::size_t b) const {
  const std::int64_t total = grand_total();
  if (total == 0) return 0.0;
  return 100.0 * static_cast<double>(bucket_total(b)) / static_cast<double>(total);
}

LengthBucketReport corpus_stats(const Corpus& c) {
  LengthBucketReport r;
  std::map<std::int64_t, std::int64_t> hist;
  for (const auto& rec : c.records) {
    const auto len = static_cast<std::int64_t>(utf8_length(rec.code));
    std::size_t b = 3;
    for (std::size_t i = 0; i < r.kEdges.size(); ++i) {
      if (len < r.kEdges[i]) {
        b = i;
        break;
      }
    }
    (rec.vulnerable() ? r.vulnerable : r.non_vulnerable)[b] += 1;
    hist[len] += 1;
  }
  r.histogram.assign(hist.begin(), hist.end());
  return r;
}

namespace {

const char* kBucketNames[4] = {"0-3999", "4000-7999", "8000-11999", "12000+"};

}  // namespace

std::string stats_csv(const LengthBucketReport& r) {
  std::string out = csv_row({"bucket", "vulnerable", "non_vulnerable", "total", "share_pct"});
  for (std::size_t b = 0; b < 4; ++b)
    out += csv_row({kBucketNames[b], std::to_string(r.vulnerable[b]),
                    std::to_string(r.non_vulnerable[b]),
                    std::to_string(r.bucket_total(b)), fmt2(r.bucket_pct(b))});
  out += csv_row({"total", std::to_string(r.all_vulnerable()),
                  std::to_string(r.all_non_vulnerable()),
                  std::to_string(r.grand_total()), r.grand_total() ? "100.00" : "0.00"});
  return out;
}

std::string stats_table(const LengthBucketReport& r) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Length", "Vulnerable", "Non-vulnerable", "Total", "Share"});
  for (std::size_t b = 0; b < 4; ++b)
    rows.push_back({kBucketNames[b], std::to_string(r.vulnerable[b]),
                    std::to_string(r.non_vulnerable[b]),
                    std::to_string(r.bucket_total(b)), fmt2(r.bucket_pct(b)) + "%"});
  rows.push_back({"total", std::to_string(r.all_vulnerable()),
                  std::to_string(r.all_non_vulnerable()),
                  std::to_string(r.grand_total()),
                  std::string(r.grand_total() ? "100.00" : "0.00") + "%"});
  return format_table(rows, "lrrrr");
}

std::string histogram_csv(const LengthBucketReport& r) {
  std::string out = csv_row({"length", "count"});
  for (const auto& [len, count] : r.histogram)
    out += csv_row({std::to_string(len), std::to_string(count)});
  return out;
}

std::vector<CweCount> cwe_distribution(const Corpus& c) {
  std::map<int, std::int64_t> counts;
  for (const auto& rec : c.records) {
    if (!rec.vulnerable()) continue;
    for (int cwe : rec.cwes) counts[cwe] += 1;  // sums to Σ |cwes|
  }
  std::vector<CweCount> ranked;
  ranked.reserve(counts.size());
  for (const auto& [cwe, count] : counts) ranked.push_back({cwe, count});
  std::stable_sort(ranked.begin(), ranked.end(), [](const CweCount& a, const CweCount& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.cwe < b.cwe;
  });
  return ranked;
}

CweDistributionView cwe_top_bottom(const std::vector<CweCount>& ranked, std::size_t n) {
  CweDistributionView view;
  const std::size_t take = std::min(n, ranked.size());
  view.top.assign(ranked.begin(), ranked.begin() + take);
  view.bottom.assign(ranked.end() - take, ranked.end());
  return view;
}

std::string cwe_distribution_csv(const std::vector<CweCount>& ranked) {
  std::string out = csv_row({"cwe", "count"});
  for (const auto& e : ranked)
    out += csv_row({std::to_string(e.cwe), std::to_string(e.count)});
  return out;
}

std::string cwe_distribution_table(const CweDistributionView& view) {
  auto section = [](const std::string& title, const std::vector<CweCount>& entries) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"CWE", "Count"});
    for (const auto& e : entries)
      rows.push_back({"CWE-" + std::to_string(e.cwe), std::to_string(e.count)});
    return title + "\n" + format_table(rows, "lr");
  };
  std::string out = section("Most frequent CWEs", view.top);
  out += "\n";
  out += section("Least frequent CWEs", view.bottom);
  return out;
}

}  // namespace vdlab
