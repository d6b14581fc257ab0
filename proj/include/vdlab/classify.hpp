#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vdlab/corpus.hpp"
#include "vdlab/split.hpp"

namespace vdlab {

/// Maximal-munch lexer for C-like source. Identifiers, numeric literals,
/// string/char literals (collapsed to <STR>/<CHR>), a fixed operator table,
/// single punctuation; comments and whitespace vanish.
std::vector<std::string> tokenize(std::string_view code);

/// Hashed unigram+bigram counts, L2-normalized. Entries are sorted by index
/// so downstream float accumulation is order-stable.
struct FeatureVector {
  std::uint32_t dim = 0;
  std::vector<std::pair<std::uint32_t, double>> entries;
};

/// dim must be a power of two.
FeatureVector featurize(const std::vector<std::string>& tokens, std::uint32_t dim);

enum class ModelKind { binary, multiclass };

struct TrainConfig {
  ModelKind kind = ModelKind::binary;
  int epochs = 10;
  double learning_rate = 0.1;  // decays as lr/(1+epoch)
  double l2 = 1e-6;            // applied to weights, not bias
  std::uint32_t dim = 1u << 18;
  std::uint64_t seed = 1;
  std::vector<int> cwe_list;  // multiclass classes after the benign class 0
};

/// Logistic regression (one weight row) or multinomial logistic regression
/// (one row per class). Weights are dense; training folds its weight-scale
/// bookkeeping back in before returning.
struct Model {
  ModelKind kind = ModelKind::binary;
  std::vector<int> class_labels;  // binary: {0, 1}; multiclass: 0 first
  std::uint32_t dim = 0;
  std::vector<std::vector<double>> weights;
  std::vector<double> bias;
  double final_loss = 0.0;  // mean training cross-entropy, no L2 term
  std::map<std::string, std::string> metadata;
};

/// Seeded SGD over the set's records; deterministic for fixed inputs.
/// UserError on an empty set, an unresolvable id, or a label outside the
/// model's classes.
Model train(const LabeledSet& set, const CorpusIndex& index, const TrainConfig& cfg);

struct Prediction {
  double score = 0.0;        // P(vulnerable); for multiclass, 1 - P(class 0)
  std::vector<double> dist;  // multiclass only, aligned with class_labels
  int hard = -1;             // explicit hard label; -1 = threshold score at 0.5
};

struct PredictionSet {
  ModelKind kind = ModelKind::binary;
  std::vector<int> class_labels;
  std::string model_name;
  std::map<std::string, Prediction> entries;
};

/// Sigmoid (binary) or softmax (multiclass) of the linear scores.
/// UserError listing ids absent from the corpus.
PredictionSet predict(const Model& m, const std::vector<std::string>& ids,
                      const CorpusIndex& index);

/// Binary view of a multiclass set: hard label = [argmax class != 0] with
/// ties toward the earliest entry of class_labels, score = 1 - dist[0].
PredictionSet collapse_multiclass(const PredictionSet& pred);

/// JSONL adapter for predictions produced outside this harness: lines
/// {"id", "score"} (binary) or {"id", "dist": {"0": p0, ...}} (multiclass).
/// Values out of [0,1] by at most 1e-6 are clamped with a warning,
/// distributions off unit sum by at most 1e-6 are renormalized; anything
/// worse is fatal with its line number.
PredictionSet load_external_predictions(const std::string& path, ModelKind kind);

void write_predictions_jsonl(const PredictionSet& pred, const std::string& path);

std::string model_to_json(const Model& m);
Model model_from_json(const std::string& text);
void write_model(const Model& m, const std::string& path);
Model read_model(const std::string& path);

// Test hooks: mean cross-entropy and its analytic gradient over a small
// batch, with labels given as indices into class_labels. No L2 term.
double dataset_loss(const Model& m, const std::vector<FeatureVector>& xs,
                    const std::vector<int>& y_index);
struct Gradient {
  std::vector<std::vector<double>> weights;
  std::vector<double> bias;
};
Gradient batch_gradient(const Model& m, const std::vector<FeatureVector>& xs,
                        const std::vector<int>& y_index);

}  // namespace vdlab
