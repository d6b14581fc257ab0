#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vdlab/corpus.hpp"

namespace vdlab {

/// Recipe for a generated corpus. per_cwe maps a CWE family to the number of
/// vulnerable functions to emit. The non_vulnerable budget covers fixed
/// counterparts of paired vulnerable records first, then a seeded mix of
/// unpaired fixed variants and neutral utility functions.
struct SyntheticSpec {
  std::map<int, std::int64_t> per_cwe;
  std::int64_t non_vulnerable = 0;
  std::uint64_t seed = 1;
  double pair_fraction = 0.5;  // share of vulnerable records that get a fixed
                               // counterpart (pair_id set on both records)
  std::string source = "synthetic";
};

/// CWE families the generator knows, ascending.
const std::vector<int>& synthetic_families();

/// Deterministic for a fixed spec: equal specs give byte-identical corpora.
/// Vulnerable records come first (families in ascending CWE order), then the
/// non-vulnerable section; ids are "<source>:<index>" in emission order and
/// every function body is unique. UserError on an unknown family or a
/// non_vulnerable budget smaller than the paired-counterpart demand.
Corpus generate_synthetic(const SyntheticSpec& spec);

}  // namespace vdlab
