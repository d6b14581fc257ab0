#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "vdlab/error.hpp"
#include "vdlab/eval.hpp"
#include "vdlab/report.hpp"
#include "vdlab/table.hpp"

using namespace vdlab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Predictions realizing an exact confusion matrix (hits 0.9, misses 0.1).
MetricsReport row_from_confusion(const std::string& model, const std::string& test,
                                 std::int64_t tp, std::int64_t tn, std::int64_t fp,
                                 std::int64_t fn, double r) {
  PredictionSet pred;
  pred.kind = ModelKind::binary;
  pred.class_labels = {0, 1};
  std::vector<TruthEntry> truth;
  std::int64_t n = 0;
  auto add = [&](bool positive, double score, std::int64_t count) {
    for (std::int64_t i = 0; i < count; ++i) {
      const std::string id = "r" + std::to_string(n++);
      truth.push_back({id, positive});
      pred.entries[id] = {score, {}, -1};
    }
  };
  add(true, 0.9, tp);
  add(false, 0.1, tn);
  add(false, 0.9, fp);
  add(true, 0.1, fn);
  return evaluate_predictions(pred, truth, r, EvalMode::hard, model, test);
}

}  // namespace

TEST_CASE("format_fraction4 rounds half up to four decimals") {
  CHECK(format_fraction4(0.75765) == "0.7577");
  CHECK(format_fraction4(0.0) == "0.0000");
  CHECK(format_fraction4(1.0) == "1.0000");
  CHECK(format_fraction4(0.00005) == "0.0001");
  CHECK(format_fraction4(-0.5) == "-0.5000");
  CHECK(format_fraction4(2.0 / 3.0) == "0.6667");
  CHECK(format_fraction4(0.12344999) == "0.1234");
  CHECK(format_fraction4(0.99995) == "1.0000");  // carry into the units digit
}

TEST_CASE("format_table pads columns and trims trailing blanks") {
  const std::string got = format_table({{"a", "bb"}, {"ccc", "d"}}, "lr");
  CHECK(got == "a    bb\nccc   d\n");

  // A left-aligned short cell in the last column must not leave trailing spaces.
  const std::string left = format_table({{"x", "verylong"}, {"y", "s"}}, "ll");
  CHECK(left == "x  verylong\ny  s\n");
}

TEST_CASE("csv_row quotes exactly the fields that need it") {
  CHECK(csv_row({"plain", "also_plain"}) == "plain,also_plain\n");
  CHECK(csv_row({"a,b", "c"}) == "\"a,b\",c\n");
  CHECK(csv_row({"say \"hi\""}) == "\"say \"\"hi\"\"\"\n");
  CHECK(csv_row({"line\nbreak"}) == "\"line\nbreak\"\n");
  CHECK(csv_row({}) == "\n");
}

TEST_CASE("metrics_table matches an independently formatted fixture") {
  const std::vector<MetricsReport> rows = {
      row_from_confusion("m_all", "d_test_balanced", 1270, 985, 503, 218, 0.2),
      row_from_confusion("m_125", "d_test_125", 137, 128, 22, 13, 0.2),
  };
  const std::string golden =
      "Model  Test               VD-S     Acc      F1    Prec     Rec     FPR    TP   TN   FP   FN\n"
      "m_all  d_test_balanced  1.0000  0.7577  0.7789  0.7163  0.8535  0.3380  1270  985  503  218\n"
      "m_125  d_test_125       0.0867  0.8833  0.8867  0.8616  0.9133  0.1467   137  128   22   13\n";
  CHECK(metrics_table(rows) == golden);
}

TEST_CASE("report JSON round-trips rows exactly") {
  std::vector<MetricsReport> rows = {
      row_from_confusion("m_all", "d_test_balanced", 1270, 985, 503, 218, 0.2),
      row_from_confusion("m_125", "d_test_125", 137, 128, 22, 13, 0.2),
  };
  // Exercise the +infinity threshold and a degenerate metric list too.
  rows[0].vd_threshold = kInf;
  rows[1].metrics.degenerate = {"precision", "f1"};
  rows[1].mode = EvalMode::score;
  rows[1].r = 0.005;

  const std::string json = metrics_json(rows);
  const std::vector<MetricsReport> back = metrics_from_json(json);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CAPTURE(i);
    CHECK(back[i].model == rows[i].model);
    CHECK(back[i].dataset == rows[i].dataset);
    CHECK(back[i].mode == rows[i].mode);
    CHECK(back[i].r == rows[i].r);
    CHECK(back[i].confusion == rows[i].confusion);
    CHECK(back[i].metrics.acc == rows[i].metrics.acc);
    CHECK(back[i].metrics.f1 == rows[i].metrics.f1);
    CHECK(back[i].metrics.precision == rows[i].metrics.precision);
    CHECK(back[i].metrics.recall == rows[i].metrics.recall);
    CHECK(back[i].metrics.fpr == rows[i].metrics.fpr);
    CHECK(back[i].metrics.degenerate == rows[i].metrics.degenerate);
    CHECK(back[i].vd_s == rows[i].vd_s);
    CHECK(back[i].vd_threshold == rows[i].vd_threshold);
  }
  CHECK(std::isinf(back[0].vd_threshold));

  // CSV built from the JSON must equal CSV built from the rows, byte for byte.
  CHECK(csv_from_json(json) == metrics_csv(rows));

  CHECK_THROWS_AS(metrics_from_json("{\"format\": \"other\", \"rows\": []}"), UserError);
  CHECK_THROWS_AS(metrics_from_json("not json"), UserError);
  CHECK_THROWS_AS(metrics_from_json("{}"), UserError);
}

TEST_CASE("csv carries full precision and the infinity sentinel") {
  std::vector<MetricsReport> rows = {
      row_from_confusion("m", "d", 1, 2, 1, 2, 0.2),
  };
  rows[0].vd_s = 1.0 / 3.0;
  rows[0].vd_threshold = kInf;
  const std::string csv = metrics_csv(rows);
  CHECK(csv.find("0.3333333333333333") != std::string::npos);
  CHECK(csv.find(",inf,") != std::string::npos);
  CHECK(csv.rfind("model,test,mode,r,vd_s,vd_threshold,acc,f1,"
                  "precision,recall,fpr,tp,tn,fp,fn,degenerate\n", 0) == 0);
}

TEST_CASE("provenance is stamped into report JSON but ignored by readers") {
  const std::vector<MetricsReport> rows = {
      row_from_confusion("m", "d", 5, 5, 1, 1, 0.2),
  };
  const Provenance prov = {{"config_digest", "abc123"}, {"seed", "7"}};
  const std::string stamped = metrics_json(rows, prov);
  CHECK(stamped.find("\"provenance\"") != std::string::npos);
  CHECK(stamped.find("\"config_digest\": \"abc123\"") != std::string::npos);
  CHECK(stamped.find("\"seed\": \"7\"") != std::string::npos);

  const std::string plain = metrics_json(rows);
  CHECK(plain.find("provenance") == std::string::npos);

  // Stamp changes no row content: both parse to identical rows and CSV.
  CHECK(csv_from_json(stamped) == csv_from_json(plain));
}

TEST_CASE("pairwise table and JSON carry the four outcome fractions") {
  PairwiseReport r;
  r.pairs = 8;
  r.correct = 4;
  r.both_vuln = 2;
  r.both_benign = 1;
  r.reversed = 1;
  const std::vector<NamedPairwise> rows = {{"m_binary", "d_test_rq2", r}};

  const std::string table = pairwise_table(rows);
  const std::string golden =
      "Model     Test           P-C     P-V     P-B     P-R  Pairs\n"
      "m_binary  d_test_rq2  0.5000  0.2500  0.1250  0.1250      8\n";
  CHECK(table == golden);

  const std::string json = pairwise_json(rows, {{"seed", "1"}});
  CHECK(json.find("\"format\": \"vdlab-pairwise-v1\"") != std::string::npos);
  CHECK(json.find("\"both_vulnerable\": 2") != std::string::npos);
  CHECK(json.find("\"p_c\": 0.5") != std::string::npos);
  CHECK(json.find("\"provenance\"") != std::string::npos);
}

TEST_CASE("breakdown table lists top CWEs then Rest and Total") {
  TPBreakdown b;
  b.model_cwe = 125;
  b.test_vulnerable = 600;
  b.top = {{125, 137}, {787, 52}};
  b.rest = 10;
  b.total = 199;
  b.model_cwe_tp = 137;
  const std::vector<NamedBreakdown> rows = {{"m_125", "d_test_all", b}};

  const std::string table = breakdown_table(rows);
  const std::string golden =
      "m_125 true positives on d_test_all (600 vulnerable)\n"
      "CWE      Count\n"
      "CWE-125    137\n"
      "CWE-787     52\n"
      "Rest        10\n"
      "Total      199\n";
  CHECK(table == golden);

  const std::string json = breakdown_json(rows);
  CHECK(json.find("\"format\": \"vdlab-breakdown-v1\"") != std::string::npos);
  CHECK(json.find("\"model_cwe_tp\": 137") != std::string::npos);
  CHECK(json.find("\"cwe\": 787") != std::string::npos);
}
