#include "nerkit/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "nerkit/error.hpp"
#include "nerkit/evaluation.hpp"

namespace nerkit {

namespace {

const std::set<std::string> kParamGroups{"bilstm", "projection", "crf", "aux_projection", "aux_crf"};

struct Prepared {
  const Sentence* sentence;
  Matrix input;
  std::vector<int> fg_gold;
  std::vector<int> cg_gold;
};

struct BranchResult {
  double loss = 0.0;
  Matrix d_scores;
  std::optional<CrfGradients> crf;
};

BranchResult branch_loss(const Matrix& scores, const std::vector<int>& gold, const CrfParams* crf) {
  BranchResult r;
  if (crf) {
    CrfGradients g = nll_grad(scores, gold, *crf);
    r.loss = g.nll;
    r.d_scores = std::move(g.emissions);
    r.crf = std::move(g);
  } else {
    std::vector<std::uint8_t> mask(gold.size(), 1);
    r.loss = masked_ce_grad(scores, gold, mask, r.d_scores);
  }
  return r;
}

void scale_in_place(std::span<double> v, double factor) {
  for (double& x : v) x *= factor;
}

void add_scaled(std::span<double> dst, std::span<const double> src, double factor) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += factor * src[i];
}

void add_crf(CrfParams& dst, const CrfGradients& g, double factor) {
  add_scaled(dst.transitions.values(), g.transitions.values(), factor);
  add_scaled(dst.start, g.start, factor);
  add_scaled(dst.end, g.end, factor);
}

std::vector<int> decode(const ModelParams& model, const HeadConfig& head, const Matrix& input,
                        const TransitionMask* mask) {
  Rng unused(0);
  HeadOutput out = head_forward(input, head, model.head, false, unused);
  if (!head.fg_uses_crf()) return argmax_rows(out.fg_scores);
  return viterbi(out.fg_scores, *model.fg_crf, mask).path;
}

std::vector<Prepared> prepare(const Dataset& dataset, const EmbeddingTable& table,
                              const LabelSchema& schema, const HeadConfig& head, bool need_gold) {
  AlignmentReport report = validate_alignment(dataset, table);
  if (!report.missing.empty() || !report.length_mismatches.empty() ||
      (!report.duplicates.empty()))
    throw AlignmentError("corpus and embeddings are not aligned:\n" + report.describe());
  if (table.size() > 0 && table.header().num_layers < head.input_layers_k)
    throw ShapeError("embeddings store " + std::to_string(table.header().num_layers) +
                     " layers, config asks for " + std::to_string(head.input_layers_k));
  std::vector<Prepared> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.sentences) {
    Prepared p{&s, concat_layers(table.at(s.id), head.input_layers_k), {}, {}};
    if (need_gold) {
      if (!s.fg_tags) throw AlignmentError("sentence '" + s.id + "' has no gold tags");
      for (const auto& tag : *s.fg_tags) {
        int fine = schema.index_of(tag, LabelSpace::fine);
        p.fg_gold.push_back(fine);
        p.cg_gold.push_back(schema.project_to_coarse(fine));
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

Dataset with_predictions(const Dataset& dataset, const std::vector<std::vector<int>>& paths,
                         const LabelSchema& schema) {
  Dataset out = dataset;
  for (std::size_t i = 0; i < out.sentences.size(); ++i) {
    std::vector<std::string> tags;
    tags.reserve(paths[i].size());
    for (int y : paths[i]) tags.push_back(schema.label(y, LabelSpace::fine));
    out.sentences[i].fg_tags = std::move(tags);
  }
  return out;
}

}  // namespace

double aux_weight(std::size_t epoch, const LossWeightSchedule& s) {
  if (s.total_epochs == 0 || epoch >= s.total_epochs)
    throw ConfigError("epoch " + std::to_string(epoch) + " outside schedule of " +
                      std::to_string(s.total_epochs) + " epochs");
  if (s.shape == DecayShape::constant) return s.constant;
  if (s.total_epochs == 1 || epoch == 0) return 1.0;
  if (epoch == s.total_epochs - 1) return s.residual;
  double w = 1.0 - (1.0 - s.residual) * static_cast<double>(epoch) /
                       static_cast<double>(s.total_epochs - 1);
  return std::max(s.residual, w);
}

double combined_loss(double cg_loss, double fg_loss, double weight, double scale) {
  return weight * cg_loss + (1.0 - weight) * scale * fg_loss;
}

double compute_scale(const ScaleSetting& setting, double cg0, double fg0) {
  if (!setting.automatic) return setting.value;
  if (fg0 == 0.0) throw NumericError("cannot derive loss scale: first-batch FG loss is zero");
  if (!std::isfinite(cg0) || !std::isfinite(fg0))
    throw NumericError("cannot derive loss scale from non-finite first-batch losses");
  return std::clamp(cg0 / fg0, kMinAutoScale, kMaxAutoScale);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(base_lr > 0.0)) throw ConfigError("base_lr must be > 0");
  if (!(residual >= 0.0 && residual <= 1.0)) throw ConfigError("residual must be in [0, 1]");
  if (!(constant_weight >= 0.0 && constant_weight <= 1.0))
    throw ConfigError("constant_weight must be in [0, 1]");
  if (!scale.automatic && !(scale.value > 0.0 && std::isfinite(scale.value)))
    throw ConfigError("fixed scale must be a positive finite number");
  for (const auto& [group, m] : lr_multipliers) {
    if (!kParamGroups.count(group)) throw ConfigError("unknown parameter group: " + group);
    if (!(m > 0.0)) throw ConfigError("learning-rate multiplier for " + group + " must be > 0");
  }
  head.validate();
}

LossWeightSchedule TrainConfig::schedule() const {
  return {epochs, residual, decay, constant_weight};
}

double TrainConfig::multiplier(const std::string& group) const {
  auto it = lr_multipliers.find(group);
  return it == lr_multipliers.end() ? 1.0 : it->second;
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j{{"epochs", epochs},
                   {"batch_size", batch_size},
                   {"base_lr", base_lr},
                   {"lr_multipliers", lr_multipliers},
                   {"residual", residual},
                   {"decay", decay == DecayShape::linear ? "linear" : "constant"},
                   {"constant_weight", constant_weight},
                   {"seed", seed},
                   {"shuffle", shuffle},
                   {"constrained_decode", constrained_decode},
                   {"track_train_f1", track_train_f1},
                   {"head", head.to_json()}};
  if (scale.automatic) j["scale"] = "auto";
  else j["scale"] = scale.value;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  std::optional<double> dropout_override;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "base_lr") c.base_lr = v.get<double>();
      else if (key == "lr_multipliers") c.lr_multipliers = v.get<std::map<std::string, double>>();
      else if (key == "residual") c.residual = v.get<double>();
      else if (key == "decay") {
        auto d = v.get<std::string>();
        if (d == "linear") c.decay = DecayShape::linear;
        else if (d == "constant") c.decay = DecayShape::constant;
        else throw ConfigError("unknown decay shape: " + d);
      } else if (key == "constant_weight") c.constant_weight = v.get<double>();
      else if (key == "scale") {
        if (v.is_string()) {
          if (v.get<std::string>() != "auto") throw ConfigError("scale must be \"auto\" or a number");
          c.scale = {true, 1.0};
        } else {
          c.scale = {false, v.get<double>()};
        }
      } else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "shuffle") c.shuffle = v.get<bool>();
      else if (key == "constrained_decode") c.constrained_decode = v.get<bool>();
      else if (key == "track_train_f1") c.track_train_f1 = v.get<bool>();
      else if (key == "dropout_p") dropout_override = v.get<double>();
      else if (key == "head") c.head = HeadConfig::from_json(v);
      else throw ConfigError("unknown config key: " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid training config: ") + e.what());
  }
  if (dropout_override) c.head.dropout_p = *dropout_override;
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Adam::Adam(double base_lr, std::map<std::string, double> multipliers, double beta1, double beta2,
           double epsilon)
    : base_lr_(base_lr), multipliers_(std::move(multipliers)), beta1_(beta1), beta2_(beta2),
      epsilon_(epsilon) {}

double Adam::effective_lr(const std::string& group) const {
  auto it = multipliers_.find(group);
  return base_lr_ * (it == multipliers_.end() ? 1.0 : it->second);
}

void Adam::step(ModelParams& params, const ModelParams& grads) {
  std::vector<std::pair<std::string, std::span<double>>> p;
  std::vector<std::span<const double>> g;
  for_each_param(params, [&](const std::string&, std::string_view group, std::span<double> v) {
    p.emplace_back(std::string(group), v);
  });
  for_each_param(grads, [&](const std::string&, std::string_view, std::span<const double> v) {
    g.push_back(v);
  });
  if (p.size() != g.size()) throw ShapeError("Adam: gradient structure does not match parameters");
  if (first_moment_.empty()) {
    for (const auto& [group, v] : p) {
      first_moment_.emplace_back(v.size(), 0.0);
      second_moment_.emplace_back(v.size(), 0.0);
    }
  }
  if (first_moment_.size() != p.size()) throw ShapeError("Adam: parameter structure changed");
  ++steps_;
  double t = static_cast<double>(steps_);
  double c1 = 1.0 - std::pow(beta1_, t);
  double c2 = 1.0 - std::pow(beta2_, t);
  for (std::size_t b = 0; b < p.size(); ++b) {
    auto& [group, values] = p[b];
    if (g[b].size() != values.size()) throw ShapeError("Adam: gradient block size mismatch");
    double lr = effective_lr(group);
    auto& m = first_moment_[b];
    auto& s = second_moment_[b];
    for (std::size_t i = 0; i < values.size(); ++i) {
      double gi = g[b][i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
      s[i] = beta2_ * s[i] + (1.0 - beta2_) * gi * gi;
      values[i] -= lr * (m[i] / c1) / (std::sqrt(s[i] / c2) + epsilon_);
    }
  }
}

std::string format_log_csv(const std::vector<EpochLog>& log, bool has_aux) {
  std::string out = has_aux ? "epoch,W,scale,cg_loss,fg_loss,combined_loss,train_micro_f1\n"
                            : "epoch,scale,fg_loss,combined_loss,train_micro_f1\n";
  for (const auto& e : log) {
    if (has_aux)
      out += fmt::format("{},{:.8g},{:.8g},{:.8g},{:.8g},{:.8g},{:.6f}\n", e.epoch, e.weight, e.scale,
                         e.cg_loss, e.fg_loss, e.combined_loss, e.train_micro_f1);
    else
      out += fmt::format("{},{:.8g},{:.8g},{:.8g},{:.6f}\n", e.epoch, e.scale, e.fg_loss,
                         e.combined_loss, e.train_micro_f1);
  }
  return out;
}

std::vector<int> argmax_rows(const Matrix& scores) {
  std::vector<int> out(scores.rows(), 0);
  for (std::size_t t = 0; t < scores.rows(); ++t) {
    auto row = scores.row(t);
    out[t] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

TrainResult train(const Dataset& dataset, const EmbeddingTable& embeddings, const LabelSchema& schema,
                  const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) throw ConfigError("cannot train on an empty dataset");
  const HeadConfig& head = config.head;
  std::vector<Prepared> items = prepare(dataset, embeddings, schema, head, true);
  const bool has_aux = head.has_aux();
  const auto schedule = config.schedule();

  TrainResult result;
  Checkpoint& ck = result.checkpoint;
  ck.config = config;
  ck.schema_fingerprint = schema.fingerprint();
  ck.embedding_dim = embeddings.header().dim;
  ck.params = init_model(head, items.front().input.cols(), schema, derive_seed(config.seed, "init"));
  ModelParams& model = ck.params;

  Adam optimizer(config.base_lr, config.lr_multipliers);
  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
  std::optional<double> scale;
  if (!has_aux) scale = 1.0;

  std::optional<TransitionMask> mask;
  if (config.constrained_decode && head.fg_uses_crf()) mask = bio_mask(schema, LabelSpace::fine);

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) shuffle(order, shuffle_rng);
    const double weight = has_aux ? aux_weight(epoch, schedule) : 0.0;
    double sum_cg = 0.0, sum_fg = 0.0, sum_combined = 0.0;

    for (std::size_t begin = 0, batch = 0; begin < order.size(); begin += config.batch_size, ++batch) {
      std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - begin);

      struct Work {
        HeadOutput out;
        BranchResult fg;
        std::optional<BranchResult> cg;
      };
      std::vector<Work> work;
      work.reserve(end - begin);
      double batch_cg = 0.0, batch_fg = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const Prepared& item = items[order[k]];
        Rng rng(derive_seed(config.seed, item.sentence->id, epoch + 1));
        Work w{head_forward(item.input, head, model.head, true, rng), {}, std::nullopt};
        w.fg = branch_loss(w.out.fg_scores, item.fg_gold, model.fg_crf ? &*model.fg_crf : nullptr);
        batch_fg += w.fg.loss;
        if (has_aux) {
          w.cg = branch_loss(*w.out.cg_scores, item.cg_gold, model.cg_crf ? &*model.cg_crf : nullptr);
          batch_cg += w.cg->loss;
        }
        work.push_back(std::move(w));
      }
      if (!scale) scale = compute_scale(config.scale, batch_cg * inv_batch, batch_fg * inv_batch);

      const double fg_factor = has_aux ? (1.0 - weight) * *scale : 1.0;
      const double cg_factor = weight;
      ModelParams grads = ModelParams::zeros_like(model);
      for (auto& w : work) {
        double combined = has_aux ? combined_loss(w.cg->loss, w.fg.loss, weight, *scale) : w.fg.loss;
        if (!std::isfinite(combined))
          throw NumericError(fmt::format("non-finite loss in epoch {} batch {}", epoch, batch));
        sum_fg += w.fg.loss;
        sum_combined += combined;
        if (has_aux) sum_cg += w.cg->loss;

        scale_in_place(w.fg.d_scores.values(), fg_factor * inv_batch);
        if (w.fg.crf) add_crf(*grads.fg_crf, *w.fg.crf, fg_factor * inv_batch);
        Matrix* d_cg = nullptr;
        if (has_aux) {
          scale_in_place(w.cg->d_scores.values(), cg_factor * inv_batch);
          if (w.cg->crf) add_crf(*grads.cg_crf, *w.cg->crf, cg_factor * inv_batch);
          d_cg = &w.cg->d_scores;
        }
        head_backward_accumulate(w.out.trace, model.head, w.fg.d_scores, d_cg, grads.head);
      }
      optimizer.step(model, grads);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.weight = weight;
    entry.scale = *scale;
    double n = static_cast<double>(items.size());
    entry.cg_loss = sum_cg / n;
    entry.fg_loss = sum_fg / n;
    entry.combined_loss = sum_combined / n;
    if (config.track_train_f1) {
      std::vector<std::vector<int>> paths;
      paths.reserve(items.size());
      for (const auto& item : items)
        paths.push_back(decode(model, head, item.input, mask ? &*mask : nullptr));
      entry.train_micro_f1 = score(dataset, with_predictions(dataset, paths, schema)).micro.f1;
    }
    result.log.push_back(entry);
  }
  ck.epoch = config.epochs - 1;
  ck.scale = *scale;
  return result;
}

TrainResult train(const Dataset& dataset, const std::filesystem::path& embeddings_path,
                  const LabelSchema& schema, const TrainConfig& config) {
  return train(dataset, EmbeddingTable::load(embeddings_path), schema, config);
}

Dataset predict(const Checkpoint& checkpoint, const Dataset& dataset, const EmbeddingTable& embeddings,
                const LabelSchema& schema) {
  if (checkpoint.schema_fingerprint != schema.fingerprint())
    throw SchemaError("checkpoint was trained with schema " + checkpoint.schema_fingerprint +
                      ", got " + schema.fingerprint());
  if (embeddings.size() > 0 && embeddings.header().dim != checkpoint.embedding_dim)
    throw ShapeError("embedding width " + std::to_string(embeddings.header().dim) +
                     " differs from training width " + std::to_string(checkpoint.embedding_dim));
  const HeadConfig& head = checkpoint.config.head;
  std::vector<Prepared> items = prepare(dataset, embeddings, schema, head, false);
  std::optional<TransitionMask> mask;
  if (checkpoint.config.constrained_decode && head.fg_uses_crf())
    mask = bio_mask(schema, LabelSpace::fine);
  std::vector<std::vector<int>> paths;
  paths.reserve(items.size());
  for (const auto& item : items)
    paths.push_back(decode(checkpoint.params, head, item.input, mask ? &*mask : nullptr));
  return with_predictions(dataset, paths, schema);
}

Dataset predict(const Checkpoint& checkpoint, const Dataset& dataset,
                const std::filesystem::path& embeddings_path, const LabelSchema& schema) {
  return predict(checkpoint, dataset, EmbeddingTable::load(embeddings_path), schema);
}

}  // namespace nerkit
