#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "vdlab/corpus.hpp"

namespace vdlab {

/// Strips space (0x20), tab (0x09), newline (0x0A) and carriage return
/// (0x0D); every other byte is kept verbatim. Idempotent.
std::string normalize_function(std::string_view code);

/// MD5 of already-normalized text, 32 lowercase hex characters.
std::string content_hash(std::string_view normalized);

struct DedupReport {
  std::int64_t input = 0;
  std::int64_t kept = 0;
  std::int64_t dropped = 0;
  std::int64_t label_conflicts = 0;  // dropped records whose label disagreed
                                     // with the kept first occurrence
  std::map<std::string, std::int64_t> by_source;  // dropped per source

  std::string to_json() const;
};

struct DedupResult {
  Corpus corpus;
  DedupReport report;
};

/// Single pass in record order keyed on content_hash(normalize_function(code));
/// the first occurrence survives, later ones are dropped. Label-blind, but
/// cross-label drops are counted. Never reorders kept records.
DedupResult deduplicate(const Corpus& corpus);

struct LengthFilterReport {
  std::int64_t max_len = 0;
  std::int64_t kept_vulnerable = 0;
  std::int64_t kept_non_vulnerable = 0;
  std::int64_t dropped_vulnerable = 0;
  std::int64_t dropped_non_vulnerable = 0;

  std::int64_t kept() const { return kept_vulnerable + kept_non_vulnerable; }
  std::int64_t dropped() const { return dropped_vulnerable + dropped_non_vulnerable; }
};

struct LengthFilterResult {
  Corpus corpus;
  LengthFilterReport report;
};

/// Keeps records whose raw code length (Unicode scalars) is <= max_len,
/// preserving order. UserError if max_len < 1.
LengthFilterResult filter_length(const Corpus& corpus, std::int64_t max_len = 4000);

}  // namespace vdlab
