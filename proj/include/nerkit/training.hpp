#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nerkit/corpus.hpp"
#include "nerkit/embeddings.hpp"
#include "nerkit/heads.hpp"
#include "nerkit/labels.hpp"

namespace nerkit {

enum class DecayShape { linear, constant };

/// Weight W of the coarse-grained loss per epoch.
struct LossWeightSchedule {
  std::size_t total_epochs = 1;
  double residual = 0.1;
  DecayShape shape = DecayShape::linear;
  /// W for every epoch when shape == constant.
  double constant = 1.0;
};

/// linear: max(r, 1 - (1 - r) * e / (E - 1)), and 1 when E == 1.
double aux_weight(std::size_t epoch, const LossWeightSchedule& schedule);

/// W * cg + (1 - W) * scale * fg.
double combined_loss(double cg_loss, double fg_loss, double weight, double scale);

struct ScaleSetting {
  bool automatic = true;
  double value = 1.0;
};

inline constexpr double kMinAutoScale = 0.01;
inline constexpr double kMaxAutoScale = 100.0;

/// Fixed value, or clamp(cg0 / fg0, 0.01, 100) from the first batch.
double compute_scale(const ScaleSetting& setting, double first_cg_loss, double first_fg_loss);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  double base_lr = 1e-3;
  std::map<std::string, double> lr_multipliers;
  double residual = 0.1;
  DecayShape decay = DecayShape::linear;
  double constant_weight = 1.0;
  ScaleSetting scale;
  std::uint64_t seed = 0;
  bool shuffle = true;
  /// Restrict CRF decoding to valid BIO sequences.
  bool constrained_decode = false;
  /// Compute training-set micro-F1 after every epoch.
  bool track_train_f1 = true;
  HeadConfig head;

  void validate() const;
  LossWeightSchedule schedule() const;
  double multiplier(const std::string& group) const;
  nlohmann::json to_json() const;
  /// Unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig load(const std::filesystem::path& path);
};

/// Adam with one effective step size per parameter group:
/// lr_group = base_lr * multiplier(group).
class Adam {
 public:
  Adam(double base_lr, std::map<std::string, double> multipliers, double beta1 = 0.9,
       double beta2 = 0.999, double epsilon = 1e-8);

  void step(ModelParams& params, const ModelParams& grads);
  double effective_lr(const std::string& group) const;
  std::size_t steps() const { return steps_; }

 private:
  double base_lr_;
  std::map<std::string, double> multipliers_;
  double beta1_, beta2_, epsilon_;
  std::size_t steps_ = 0;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
};

struct EpochLog {
  std::size_t epoch = 0;
  double weight = 0.0;
  double scale = 1.0;
  double cg_loss = 0.0;
  double fg_loss = 0.0;
  double combined_loss = 0.0;
  double train_micro_f1 = 0.0;

  bool operator==(const EpochLog&) const = default;
};

/// CSV with columns epoch,W,scale,cg_loss,fg_loss,combined_loss,train_micro_f1;
/// W and cg_loss are left out when there is no auxiliary branch.
std::string format_log_csv(const std::vector<EpochLog>& log, bool has_aux);

struct Checkpoint {
  TrainConfig config;
  std::string schema_fingerprint;
  std::size_t epoch = 0;
  double scale = 1.0;
  std::size_t embedding_dim = 0;
  ModelParams params;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

/// Throws AlignmentError if any sentence lacks gold tags or embeddings, and
/// NumericError (naming the batch) on a non-finite loss.
TrainResult train(const Dataset& dataset, const EmbeddingTable& embeddings,
                  const LabelSchema& schema, const TrainConfig& config);
TrainResult train(const Dataset& dataset, const std::filesystem::path& embeddings_path,
                  const LabelSchema& schema, const TrainConfig& config);

/// Fine BIO tags for every sentence; linear heads take the per-token argmax,
/// CRF heads decode with Viterbi. Throws SchemaError on fingerprint mismatch.
Dataset predict(const Checkpoint& checkpoint, const Dataset& dataset,
                const EmbeddingTable& embeddings, const LabelSchema& schema);
Dataset predict(const Checkpoint& checkpoint, const Dataset& dataset,
                const std::filesystem::path& embeddings_path, const LabelSchema& schema);

/// Per-token argmax with ties to the lowest index.
std::vector<int> argmax_rows(const Matrix& scores);

}  // namespace nerkit
