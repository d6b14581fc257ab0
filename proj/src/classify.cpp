#include "vdlab/classify.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <unordered_map>

#include "json.hpp"
#include "vdlab/error.hpp"
#include "vdlab/io.hpp"
#include "vdlab/rng.hpp"

namespace vdlab {
namespace {

constexpr char kBigramJoiner = '\x1f';
constexpr double kLogClamp = 1e-12;

bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool is_ident(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_number_cont(char c) {
  return is_digit(c) || c == '.' || c == 'x' || c == 'X' ||
         (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}
bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

const char* const kOps3[] = {"<<=", ">>=", "..."};
const char* const kOps2[] = {"->", "==", "<=", ">=", "!=", "&&", "||",
                             "<<", ">>", "++", "--", "+=", "-=", "*=",
                             "/=", "%=", "&=", "|=", "^=", "::"};

// Consumes a quote-delimited literal starting at s[i] (s[i] is the quote).
// Backslash escapes the next character; an unterminated literal runs to the
// end of input.
std::size_t skip_literal(std::string_view s, std::size_t i) {
  const char quote = s[i];
  ++i;
  while (i < s.size()) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      i += 2;
      continue;
    }
    if (s[i] == quote) return i + 1;
    ++i;
  }
  return i;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double dot(const std::vector<double>& w, const FeatureVector& x) {
  double z = 0.0;
  for (const auto& [idx, val] : x.entries) z += w[idx] * val;
  return z;
}

// Probabilities per class; one probability for binary models.
std::vector<double> forward(const Model& m, const FeatureVector& x) {
  if (m.kind == ModelKind::binary)
    return {sigmoid(dot(m.weights[0], x) + m.bias[0])};
  std::vector<double> z(m.weights.size());
  for (std::size_t k = 0; k < m.weights.size(); ++k)
    z[k] = dot(m.weights[k], x) + m.bias[k];
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return z;
}

void check_power_of_two(std::uint32_t dim) {
  if (dim == 0 || (dim & (dim - 1)) != 0)
    fail("feature dimension must be a power of two, got " + std::to_string(dim));
}

std::string kind_name(ModelKind kind) {
  return kind == ModelKind::binary ? "binary" : "multiclass";
}

}  // namespace

std::vector<std::string> tokenize(std::string_view code) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = code.size();
  while (i < n) {
    const char c = code[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && code[i + 1] == '/') {
      while (i < n && code[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && code[i + 1] == '*') {
      i += 2;
      while (i + 1 < n && !(code[i] == '*' && code[i + 1] == '/')) ++i;
      i = i + 1 < n ? i + 2 : n;
      continue;
    }
    if (c == '"') {
      i = skip_literal(code, i);
      tokens.emplace_back("<STR>");
      continue;
    }
    if (c == '\'') {
      i = skip_literal(code, i);
      tokens.emplace_back("<CHR>");
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t j = i + 1;
      while (j < n && is_ident(code[j])) ++j;
      tokens.emplace_back(code.substr(i, j - i));
      i = j;
      continue;
    }
    if (is_digit(c)) {
      std::size_t j = i + 1;
      while (j < n && is_number_cont(code[j])) ++j;
      tokens.emplace_back(code.substr(i, j - i));
      i = j;
      continue;
    }
    bool matched = false;
    if (i + 2 < n) {
      const std::string_view three = code.substr(i, 3);
      for (const char* op : kOps3) {
        if (three == op) {
          tokens.emplace_back(op);
          i += 3;
          matched = true;
          break;
        }
      }
    }
    if (matched) continue;
    if (i + 1 < n) {
      const std::string_view two = code.substr(i, 2);
      for (const char* op : kOps2) {
        if (two == op) {
          tokens.emplace_back(op);
          i += 2;
          matched = true;
          break;
        }
      }
    }
    if (matched) continue;
    tokens.emplace_back(code.substr(i, 1));
    ++i;
  }
  return tokens;
}

FeatureVector featurize(const std::vector<std::string>& tokens, std::uint32_t dim) {
  check_power_of_two(dim);
  FeatureVector fv;
  fv.dim = dim;
  const std::uint64_t mask = dim - 1;

  std::unordered_map<std::uint32_t, double> acc;
  acc.reserve(tokens.size() * 2);
  for (const auto& t : tokens)
    acc[static_cast<std::uint32_t>(fnv1a64(t) & mask)] += 1.0;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    const std::string bigram = tokens[i] + kBigramJoiner + tokens[i + 1];
    acc[static_cast<std::uint32_t>(fnv1a64(bigram) & mask)] += 1.0;
  }

  fv.entries.assign(acc.begin(), acc.end());
  std::sort(fv.entries.begin(), fv.entries.end());
  double norm_sq = 0.0;
  for (const auto& [idx, val] : fv.entries) norm_sq += val * val;
  if (norm_sq > 0.0) {
    const double norm = std::sqrt(norm_sq);
    for (auto& [idx, val] : fv.entries) val /= norm;
  }
  return fv;
}

Model train(const LabeledSet& set, const CorpusIndex& index, const TrainConfig& cfg) {
  if (set.entries.empty()) fail("cannot train on empty set " + set.name);
  if (cfg.epochs < 1) fail("epochs must be >= 1");
  check_power_of_two(cfg.dim);

  Model m;
  m.kind = cfg.kind;
  m.dim = cfg.dim;
  if (cfg.kind == ModelKind::binary) {
    m.class_labels = {0, 1};
  } else {
    if (cfg.cwe_list.empty()) fail("multiclass training requires a class label list");
    m.class_labels.push_back(0);
    for (int cwe : cfg.cwe_list) m.class_labels.push_back(cwe);
    for (std::size_t a = 0; a < m.class_labels.size(); ++a)
      for (std::size_t b = a + 1; b < m.class_labels.size(); ++b)
        if (m.class_labels[a] == m.class_labels[b])
          fail("duplicate class label " + std::to_string(m.class_labels[a]));
  }

  // Resolve labels to class indices and featurize once per record.
  std::vector<FeatureVector> xs;
  std::vector<int> ys;
  xs.reserve(set.entries.size());
  ys.reserve(set.entries.size());
  for (const auto& e : set.entries) {
    const auto it = std::find(m.class_labels.begin(), m.class_labels.end(), e.label);
    if (it == m.class_labels.end())
      fail("label " + std::to_string(e.label) + " of record " + e.id +
           " is outside the model's classes");
    ys.push_back(static_cast<int>(it - m.class_labels.begin()));
    xs.push_back(featurize(tokenize(index.at(e.id).code), cfg.dim));
  }

  const std::size_t rows = cfg.kind == ModelKind::binary ? 1 : m.class_labels.size();
  std::vector<std::vector<double>> v(rows, std::vector<double>(cfg.dim, 0.0));
  std::vector<double> bias(rows, 0.0);
  double scale = 1.0;  // effective weights = scale * v (lazy L2 decay)

  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.learning_rate / (1.0 + epoch);
    Rng rng(derive_seed(cfg.seed, "epoch", static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    for (const std::size_t i : order) {
      const FeatureVector& x = xs[i];
      const int y = ys[i];
      scale *= 1.0 - lr * cfg.l2;
      if (cfg.kind == ModelKind::binary) {
        const double z = scale * dot(v[0], x) + bias[0];
        const double grad = sigmoid(z) - y;
        for (const auto& [idx, val] : x.entries) v[0][idx] -= lr * grad * val / scale;
        bias[0] -= lr * grad;
      } else {
        std::vector<double> z(rows);
        for (std::size_t k = 0; k < rows; ++k) z[k] = scale * dot(v[k], x) + bias[k];
        const double zmax = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double& zk : z) {
          zk = std::exp(zk - zmax);
          sum += zk;
        }
        for (std::size_t k = 0; k < rows; ++k) {
          const double grad = z[k] / sum - (static_cast<int>(k) == y ? 1.0 : 0.0);
          for (const auto& [idx, val] : x.entries) v[k][idx] -= lr * grad * val / scale;
          bias[k] -= lr * grad;
        }
      }
      if (scale < 1e-9) {
        for (auto& row : v)
          for (double& w : row) w *= scale;
        scale = 1.0;
      }
    }
  }

  for (auto& row : v)
    for (double& w : row) w *= scale;
  m.weights = std::move(v);
  m.bias = std::move(bias);

  m.final_loss = dataset_loss(m, xs, ys);
  m.metadata["set"] = set.name;
  m.metadata["samples"] = std::to_string(set.entries.size());
  m.metadata["epochs"] = std::to_string(cfg.epochs);
  m.metadata["learning_rate"] = std::to_string(cfg.learning_rate);
  m.metadata["l2"] = std::to_string(cfg.l2);
  m.metadata["seed"] = std::to_string(cfg.seed);
  return m;
}

PredictionSet predict(const Model& m, const std::vector<std::string>& ids,
                      const CorpusIndex& index) {
  std::vector<std::string> missing;
  for (const auto& id : ids)
    if (!index.find(id) && missing.size() < 10) missing.push_back(id);
  if (!missing.empty()) {
    std::string msg = "predict: unknown ids:";
    for (const auto& id : missing) msg += " " + id;
    fail(msg);
  }

  PredictionSet out;
  out.kind = m.kind;
  out.class_labels = m.class_labels;
  out.model_name = m.metadata.count("name") ? m.metadata.at("name") : "";
  for (const auto& id : ids) {
    const FeatureVector x = featurize(tokenize(index.at(id).code), m.dim);
    const std::vector<double> p = forward(m, x);
    Prediction pred;
    if (m.kind == ModelKind::binary) {
      pred.score = p[0];
    } else {
      pred.dist = p;
      pred.score = 1.0 - p[0];
    }
    out.entries[id] = std::move(pred);
  }
  return out;
}

PredictionSet collapse_multiclass(const PredictionSet& pred) {
  if (pred.kind != ModelKind::multiclass)
    fail("collapse_multiclass requires a multiclass prediction set");
  PredictionSet out;
  out.kind = ModelKind::binary;
  out.class_labels = {0, 1};
  out.model_name = pred.model_name;
  for (const auto& [id, p] : pred.entries) {
    if (p.dist.size() != pred.class_labels.size())
      fail("prediction for " + id + " has a malformed distribution");
    std::size_t best = 0;  // ties keep the earliest class_labels entry
    for (std::size_t k = 1; k < p.dist.size(); ++k)
      if (p.dist[k] > p.dist[best]) best = k;
    Prediction b;
    b.hard = pred.class_labels[best] == 0 ? 0 : 1;
    b.score = 1.0 - p.dist[0];
    out.entries[id] = b;
  }
  return out;
}

PredictionSet load_external_predictions(const std::string& path, ModelKind kind) {
  const std::string content = read_file(path);
  PredictionSet out;
  out.kind = kind;
  if (kind == ModelKind::binary) out.class_labels = {0, 1};

  auto validate_prob = [&](double p, std::int64_t line_no, const char* what) {
    if (p >= 0.0 && p <= 1.0) return p;
    if (p > -1e-6 && p < 1.0 + 1e-6) {
      std::cerr << path << " line " << line_no << ": clamping " << what << " "
                << p << " into [0,1]\n";
      return std::clamp(p, 0.0, 1.0);
    }
    fail(path + " line " + std::to_string(line_no) + ": " + what +
         " out of range: " + std::to_string(p));
  };

  std::int64_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    const std::size_t nl = content.find('\n', pos);
    const std::string line = content.substr(
        pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? content.size() + 1 : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    const auto obj = nlohmann::ordered_json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object())
      fail(path + " line " + std::to_string(line_no) + ": not a JSON object");
    if (!obj.contains("id") || !obj["id"].is_string())
      fail(path + " line " + std::to_string(line_no) + ": missing id field");
    const std::string id = obj["id"].get<std::string>();
    if (out.entries.count(id))
      fail(path + " line " + std::to_string(line_no) + ": duplicate id " + id);

    Prediction pred;
    if (kind == ModelKind::binary) {
      if (!obj.contains("score") || !obj["score"].is_number())
        fail(path + " line " + std::to_string(line_no) + ": missing numeric score");
      pred.score = validate_prob(obj["score"].get<double>(), line_no, "score");
      if (obj.contains("hard")) {
        if (!obj["hard"].is_number_integer())
          fail(path + " line " + std::to_string(line_no) + ": hard label must be 0 or 1");
        const auto h = obj["hard"].get<std::int64_t>();
        if (h != 0 && h != 1)
          fail(path + " line " + std::to_string(line_no) + ": hard label must be 0 or 1");
        pred.hard = static_cast<int>(h);
      }
    } else {
      if (!obj.contains("dist") || !obj["dist"].is_object())
        fail(path + " line " + std::to_string(line_no) + ": missing dist object");
      if (out.class_labels.empty()) {
        for (const auto& [key, val] : obj["dist"].items()) {
          try {
            out.class_labels.push_back(std::stoi(key));
          } catch (const std::exception&) {
            fail(path + " line " + std::to_string(line_no) +
                 ": non-integer class label " + key);
          }
        }
        if (std::find(out.class_labels.begin(), out.class_labels.end(), 0) ==
            out.class_labels.end())
          fail(path + ": multiclass distributions must include class 0");
      }
      if (obj["dist"].size() != out.class_labels.size())
        fail(path + " line " + std::to_string(line_no) +
             ": distribution labels differ from the first line");
      double sum = 0.0;
      for (int label : out.class_labels) {
        const std::string key = std::to_string(label);
        if (!obj["dist"].contains(key) || !obj["dist"][key].is_number())
          fail(path + " line " + std::to_string(line_no) + ": dist is missing class " + key);
        const double p = validate_prob(obj["dist"][key].get<double>(), line_no, "probability");
        pred.dist.push_back(p);
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-6)
        fail(path + " line " + std::to_string(line_no) +
             ": distribution sums to " + std::to_string(sum));
      if (sum > 0.0)
        for (double& p : pred.dist) p /= sum;
      pred.score = 1.0 - pred.dist[0];
    }
    out.entries[id] = std::move(pred);
  }
  if (out.entries.empty()) fail(path + ": no predictions in file");
  return out;
}

void write_predictions_jsonl(const PredictionSet& pred, const std::string& path) {
  std::string out;
  for (const auto& [id, p] : pred.entries) {
    nlohmann::ordered_json j;
    j["id"] = id;
    if (pred.kind == ModelKind::binary) {
      j["score"] = p.score;
      if (p.hard >= 0) j["hard"] = p.hard;
    } else {
      nlohmann::ordered_json dist;
      for (std::size_t k = 0; k < pred.class_labels.size(); ++k)
        dist[std::to_string(pred.class_labels[k])] = p.dist[k];
      j["dist"] = dist;
    }
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

std::string model_to_json(const Model& m) {
  nlohmann::ordered_json j;
  j["format"] = "vdlab-model-v1";
  j["kind"] = kind_name(m.kind);
  j["class_labels"] = m.class_labels;
  j["dim"] = m.dim;
  j["bias"] = m.bias;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : m.weights) {
    nlohmann::ordered_json sparse = nlohmann::ordered_json::array();
    for (std::uint32_t i = 0; i < row.size(); ++i)
      if (row[i] != 0.0) sparse.push_back({i, row[i]});
    rows.push_back(std::move(sparse));
  }
  j["weights"] = std::move(rows);
  j["final_loss"] = m.final_loss;
  j["metadata"] = m.metadata;
  return j.dump();
}

Model model_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail("model file is not a JSON object");
  Model m;
  try {
    if (j.at("format").get<std::string>() != "vdlab-model-v1")
      fail("unsupported model format");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "binary") m.kind = ModelKind::binary;
    else if (kind == "multiclass") m.kind = ModelKind::multiclass;
    else fail("unknown model kind: " + kind);
    m.class_labels = j.at("class_labels").get<std::vector<int>>();
    m.dim = j.at("dim").get<std::uint32_t>();
    m.bias = j.at("bias").get<std::vector<double>>();
    for (const auto& sparse : j.at("weights")) {
      std::vector<double> row(m.dim, 0.0);
      for (const auto& pair : sparse) {
        const auto idx = pair.at(0).get<std::uint32_t>();
        if (idx >= m.dim) fail("weight index out of range");
        row[idx] = pair.at(1).get<double>();
      }
      m.weights.push_back(std::move(row));
    }
    m.final_loss = j.at("final_loss").get<double>();
    if (j.contains("metadata"))
      m.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed model file: ") + e.what());
  }
  check_power_of_two(m.dim);
  const std::size_t rows = m.kind == ModelKind::binary ? 1 : m.class_labels.size();
  if (m.weights.size() != rows || m.bias.size() != rows)
    fail("model weight shape does not match its kind");
  return m;
}

void write_model(const Model& m, const std::string& path) {
  write_file(path, model_to_json(m) + "\n");
}

Model read_model(const std::string& path) { return model_from_json(read_file(path)); }

double dataset_loss(const Model& m, const std::vector<FeatureVector>& xs,
                    const std::vector<int>& y_index) {
  if (xs.size() != y_index.size() || xs.empty())
    fail("dataset_loss: mismatched or empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::vector<double> p = forward(m, xs[i]);
    double py;
    if (m.kind == ModelKind::binary)
      py = y_index[i] == 1 ? p[0] : 1.0 - p[0];
    else
      py = p[static_cast<std::size_t>(y_index[i])];
    total += -std::log(std::max(py, kLogClamp));
  }
  return total / static_cast<double>(xs.size());
}

Gradient batch_gradient(const Model& m, const std::vector<FeatureVector>& xs,
                        const std::vector<int>& y_index) {
  if (xs.size() != y_index.size() || xs.empty())
    fail("batch_gradient: mismatched or empty batch");
  const std::size_t rows = m.weights.size();
  Gradient g;
  g.weights.assign(rows, std::vector<double>(m.dim, 0.0));
  g.bias.assign(rows, 0.0);
  const double inv_n = 1.0 / static_cast<double>(xs.size());

  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::vector<double> p = forward(m, xs[i]);
    if (m.kind == ModelKind::binary) {
      const double err = p[0] - (y_index[i] == 1 ? 1.0 : 0.0);
      for (const auto& [idx, val] : xs[i].entries)
        g.weights[0][idx] += inv_n * err * val;
      g.bias[0] += inv_n * err;
    } else {
      for (std::size_t k = 0; k < rows; ++k) {
        const double err = p[k] - (static_cast<int>(k) == y_index[i] ? 1.0 : 0.0);
        for (const auto& [idx, val] : xs[i].entries)
          g.weights[k][idx] += inv_n * err * val;
        g.bias[k] += inv_n * err;
      }
    }
  }
  return g;
}

}  // namespace vdlab
