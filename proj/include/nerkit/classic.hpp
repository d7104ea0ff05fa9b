#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nerkit/corpus.hpp"
#include "nerkit/crf.hpp"
#include "nerkit/labels.hpp"

namespace nerkit {

struct FeatureConfig {
  std::vector<std::size_t> suffix_lengths{2, 3};
  /// Emit prev_pos when tokens carry a POS column.
  bool use_pos = true;
};

/// (key, value) pairs, sorted by key, keys unique.
using FeatureVector = std::vector<std::pair<std::string, double>>;

/// Hand-written token features: word identity and shape, suffixes, the previous
/// word and its shape/POS, sentence boundary markers and a bias.
FeatureVector extract_features(const Sentence& sentence, std::size_t index,
                               const FeatureConfig& config = {});

struct ClassicModel {
  std::vector<std::string> labels;  // fine BIO labels, index-aligned with the CRF
  std::unordered_map<std::string, std::vector<double>> weights;  // feature -> per-label weight
  CrfParams crf;
  double lambda = 0.1;
  FeatureConfig features;

  std::size_t num_labels() const { return labels.size(); }
  /// JSON document: {"format":"nerkit-classic","version":1,...}; see docs/formats.md.
  void save(const std::filesystem::path& path) const;
  static ClassicModel load(const std::filesystem::path& path);
};

/// emissions(t, l) = sum over features of value * weight(feature, l).
Matrix emissions_from_features(std::span<const FeatureVector> features, const ClassicModel& model);

struct ClassicTrainOptions {
  double lambda = 0.1;
  std::size_t epochs = 100;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  /// 0 means full-batch gradient descent; otherwise seeded shuffled minibatches.
  std::size_t batch_size = 0;
  FeatureConfig features;
};

/// Flat view of the regularized training objective
///   sum_i nll_i + lambda * ||theta||^2
/// with theta = [feature weights (F x L) | transitions (L x L) | start (L) | end (L)].
class ClassicObjective {
 public:
  ClassicObjective(const Dataset& dataset, const LabelSchema& schema, double lambda,
                   const FeatureConfig& features);

  std::size_t num_params() const;
  std::size_t num_features() const { return feature_names_.size(); }
  std::size_t num_labels() const { return num_labels_; }
  std::size_t num_sentences() const { return sentences_.size(); }

  /// Objective over the sentences in `subset` (all when empty); gradient written to `grad`.
  double value_and_gradient(std::span<const double> theta, std::span<double> grad,
                            std::span<const std::size_t> subset = {}) const;
  double value(std::span<const double> theta) const;

  ClassicModel to_model(std::span<const double> theta, const LabelSchema& schema) const;

 private:
  struct Item {
    std::vector<std::vector<std::pair<std::size_t, double>>> tokens;
    std::vector<int> gold;
  };

  double lambda_;
  FeatureConfig features_;
  std::size_t num_labels_;
  std::vector<std::string> feature_names_;
  std::vector<Item> sentences_;
};

struct ClassicTrainResult {
  ClassicModel model;
  /// Objective at the start of each epoch, plus the final value.
  std::vector<double> objective;
};

/// Gradient descent on ClassicObjective. Throws ConfigError on an empty dataset.
ClassicTrainResult train_classic(const Dataset& dataset, const LabelSchema& schema,
                                 const ClassicTrainOptions& options = {});

/// Viterbi over feature emissions; tags are written into a copy of `dataset`.
Dataset predict_classic(const ClassicModel& model, const Dataset& dataset);

}  // namespace nerkit
