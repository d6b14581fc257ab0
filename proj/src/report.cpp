#include "vdlab/report.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"
#include "vdlab/error.hpp"
#include "vdlab/table.hpp"

namespace vdlab {
namespace {

using nlohmann::ordered_json;

// Shortest representation that parses back to the same double; "inf" for the
// +infinity threshold sentinel (JSON itself stores it as null).
std::string double_repr(double x) {
  if (std::isinf(x)) return "inf";
  return nlohmann::json(x).dump();
}

std::string mode_name(EvalMode mode) {
  return mode == EvalMode::hard ? "hard" : "score";
}

EvalMode mode_from(const std::string& name) {
  if (name == "hard") return EvalMode::hard;
  if (name == "score") return EvalMode::score;
  fail("unknown evaluation mode: " + name);
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

std::string format_fraction4(double x) {
  const bool negative = x < 0.0;
  const double magnitude = negative ? -x : x;
  const auto scaled = static_cast<long long>(std::floor(magnitude * 10000.0 + 0.5));
  std::string out = std::to_string(scaled / 10000) + ".";
  const std::string frac = std::to_string(scaled % 10000);
  out += std::string(4 - frac.size(), '0') + frac;
  return negative ? "-" + out : out;
}

std::string metrics_table(const std::vector<MetricsReport>& rows) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Model", "Test", "VD-S", "Acc", "F1", "Prec", "Rec", "FPR",
                   "TP", "TN", "FP", "FN"});
  for (const auto& row : rows)
    cells.push_back({row.model, row.dataset, format_fraction4(row.vd_s),
                     format_fraction4(row.metrics.acc), format_fraction4(row.metrics.f1),
                     format_fraction4(row.metrics.precision),
                     format_fraction4(row.metrics.recall),
                     format_fraction4(row.metrics.fpr), std::to_string(row.confusion.tp),
                     std::to_string(row.confusion.tn), std::to_string(row.confusion.fp),
                     std::to_string(row.confusion.fn)});
  return format_table(cells, "llrrrrrrrrrr");
}

std::string metrics_csv(const std::vector<MetricsReport>& rows) {
  std::string out = csv_row({"model", "test", "mode", "r", "vd_s", "vd_threshold",
                             "acc", "f1", "precision", "recall", "fpr", "tp", "tn",
                             "fp", "fn", "degenerate"});
  for (const auto& row : rows)
    out += csv_row({row.model, row.dataset, mode_name(row.mode), double_repr(row.r),
                    double_repr(row.vd_s), double_repr(row.vd_threshold),
                    double_repr(row.metrics.acc), double_repr(row.metrics.f1),
                    double_repr(row.metrics.precision), double_repr(row.metrics.recall),
                    double_repr(row.metrics.fpr), std::to_string(row.confusion.tp),
                    std::to_string(row.confusion.tn), std::to_string(row.confusion.fp),
                    std::to_string(row.confusion.fn),
                    join(row.metrics.degenerate, ';')});
  return out;
}

namespace {

void stamp_provenance(ordered_json& j, const Provenance& provenance) {
  if (provenance.empty()) return;
  ordered_json o;
  for (const auto& [key, value] : provenance) o[key] = value;
  j["provenance"] = std::move(o);
}

}  // namespace

std::string metrics_json(const std::vector<MetricsReport>& rows,
                         const Provenance& provenance) {
  ordered_json j;
  j["format"] = "vdlab-report-v1";
  stamp_provenance(j, provenance);
  ordered_json arr = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json o;
    o["model"] = row.model;
    o["test"] = row.dataset;
    o["mode"] = mode_name(row.mode);
    o["r"] = row.r;
    o["confusion"] = {{"tp", row.confusion.tp},
                      {"tn", row.confusion.tn},
                      {"fp", row.confusion.fp},
                      {"fn", row.confusion.fn}};
    o["metrics"] = {{"acc", row.metrics.acc},
                    {"f1", row.metrics.f1},
                    {"precision", row.metrics.precision},
                    {"recall", row.metrics.recall},
                    {"fpr", row.metrics.fpr}};
    o["degenerate"] = row.metrics.degenerate;
    o["vd_s"] = row.vd_s;
    o["vd_threshold"] = row.vd_threshold;  // +infinity serializes as null
    arr.push_back(std::move(o));
  }
  j["rows"] = std::move(arr);
  return j.dump(2);
}

std::vector<MetricsReport> metrics_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("rows"))
    fail("report JSON is malformed");
  if (j.value("format", "") != "vdlab-report-v1") fail("unsupported report format");
  std::vector<MetricsReport> rows;
  try {
    for (const auto& o : j.at("rows")) {
      MetricsReport row;
      row.model = o.at("model").get<std::string>();
      row.dataset = o.at("test").get<std::string>();
      row.mode = mode_from(o.at("mode").get<std::string>());
      row.r = o.at("r").get<double>();
      row.confusion.tp = o.at("confusion").at("tp").get<std::int64_t>();
      row.confusion.tn = o.at("confusion").at("tn").get<std::int64_t>();
      row.confusion.fp = o.at("confusion").at("fp").get<std::int64_t>();
      row.confusion.fn = o.at("confusion").at("fn").get<std::int64_t>();
      row.metrics.acc = o.at("metrics").at("acc").get<double>();
      row.metrics.f1 = o.at("metrics").at("f1").get<double>();
      row.metrics.precision = o.at("metrics").at("precision").get<double>();
      row.metrics.recall = o.at("metrics").at("recall").get<double>();
      row.metrics.fpr = o.at("metrics").at("fpr").get<double>();
      row.metrics.degenerate = o.at("degenerate").get<std::vector<std::string>>();
      row.vd_s = o.at("vd_s").get<double>();
      row.vd_threshold = o.at("vd_threshold").is_null()
                             ? std::numeric_limits<double>::infinity()
                             : o.at("vd_threshold").get<double>();
      rows.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed report JSON: ") + e.what());
  }
  return rows;
}

std::string csv_from_json(const std::string& json_text) {
  return metrics_csv(metrics_from_json(json_text));
}

std::string pairwise_table(const std::vector<NamedPairwise>& rows) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Model", "Test", "P-C", "P-V", "P-B", "P-R", "Pairs"});
  for (const auto& row : rows)
    cells.push_back({row.model, row.dataset, format_fraction4(row.report.p_c()),
                     format_fraction4(row.report.p_v()),
                     format_fraction4(row.report.p_b()),
                     format_fraction4(row.report.p_r()),
                     std::to_string(row.report.pairs)});
  return format_table(cells, "llrrrrr");
}

std::string pairwise_json(const std::vector<NamedPairwise>& rows,
                          const Provenance& provenance) {
  ordered_json j;
  j["format"] = "vdlab-pairwise-v1";
  stamp_provenance(j, provenance);
  ordered_json arr = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json o;
    o["model"] = row.model;
    o["test"] = row.dataset;
    o["pairs"] = row.report.pairs;
    o["counts"] = {{"correct", row.report.correct},
                   {"both_vulnerable", row.report.both_vuln},
                   {"both_benign", row.report.both_benign},
                   {"reversed", row.report.reversed}};
    o["fractions"] = {{"p_c", row.report.p_c()},
                      {"p_v", row.report.p_v()},
                      {"p_b", row.report.p_b()},
                      {"p_r", row.report.p_r()}};
    arr.push_back(std::move(o));
  }
  j["rows"] = std::move(arr);
  return j.dump(2);
}

std::string breakdown_table(const std::vector<NamedBreakdown>& rows) {
  std::string out;
  for (const auto& row : rows) {
    if (!out.empty()) out += "\n";
    out += row.model + " true positives on " + row.dataset + " (" +
           std::to_string(row.breakdown.test_vulnerable) + " vulnerable)\n";
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"CWE", "Count"});
    for (const auto& e : row.breakdown.top)
      cells.push_back({"CWE-" + std::to_string(e.cwe), std::to_string(e.count)});
    cells.push_back({"Rest", std::to_string(row.breakdown.rest)});
    cells.push_back({"Total", std::to_string(row.breakdown.total)});
    out += format_table(cells, "lr");
  }
  return out;
}

std::string breakdown_json(const std::vector<NamedBreakdown>& rows,
                           const Provenance& provenance) {
  ordered_json j;
  j["format"] = "vdlab-breakdown-v1";
  stamp_provenance(j, provenance);
  ordered_json arr = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json o;
    o["model"] = row.model;
    o["test"] = row.dataset;
    o["model_cwe"] = row.breakdown.model_cwe;
    o["test_vulnerable"] = row.breakdown.test_vulnerable;
    ordered_json top = ordered_json::array();
    for (const auto& e : row.breakdown.top)
      top.push_back({{"cwe", e.cwe}, {"count", e.count}});
    o["top"] = std::move(top);
    o["rest"] = row.breakdown.rest;
    o["total"] = row.breakdown.total;
    o["model_cwe_tp"] = row.breakdown.model_cwe_tp;
    arr.push_back(std::move(o));
  }
  j["rows"] = std::move(arr);
  return j.dump(2);
}

}  // namespace vdlab
