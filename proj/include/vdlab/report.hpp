#pragma once

#include <map>
#include <string>
#include <vector>

#include "vdlab/eval.hpp"

namespace vdlab {

/// Four decimals, half-up: 0.75765 -> "0.7577".
std::string format_fraction4(double x);

/// Aligned text rows in fixed column order: Model, Test, VD-S, Acc, F1,
/// Prec, Rec, FPR, TP, TN, FP, FN. Fractions rendered with format_fraction4.
std::string metrics_table(const std::vector<MetricsReport>& rows);

/// Full-precision CSV (shortest round-trip representation per value).
std::string metrics_csv(const std::vector<MetricsReport>& rows);

/// Provenance stamp copied verbatim into report JSON ("provenance" object);
/// readers ignore it, so it never affects row round-trips.
using Provenance = std::map<std::string, std::string>;

/// Versioned JSON array carrying full precision; the exact inverse of
/// metrics_from_json.
std::string metrics_json(const std::vector<MetricsReport>& rows,
                         const Provenance& provenance = {});
std::vector<MetricsReport> metrics_from_json(const std::string& text);

/// metrics_csv of the rows encoded in a report JSON; byte-equal to the CSV
/// emitted directly from the same rows.
std::string csv_from_json(const std::string& json_text);

struct NamedPairwise {
  std::string model;
  std::string dataset;
  PairwiseReport report;
};

std::string pairwise_table(const std::vector<NamedPairwise>& rows);
std::string pairwise_json(const std::vector<NamedPairwise>& rows,
                          const Provenance& provenance = {});

struct NamedBreakdown {
  std::string model;
  std::string dataset;
  TPBreakdown breakdown;
};

std::string breakdown_table(const std::vector<NamedBreakdown>& rows);
std::string breakdown_json(const std::vector<NamedBreakdown>& rows,
                           const Provenance& provenance = {});

}  // namespace vdlab
