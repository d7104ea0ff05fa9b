#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nerkit/crf.hpp"
#include "nerkit/embeddings.hpp"
#include "nerkit/labels.hpp"
#include "nerkit/matrix.hpp"
#include "nerkit/util.hpp"

namespace nerkit {

enum class HeadKind { linear_ce, linear_crf, bilstm_crf };
enum class BlendMode { none, concat, avg };
enum class AuxKind { none, linear_ce, crf };

std::string_view to_string(HeadKind kind);
std::string_view to_string(BlendMode mode);
std::string_view to_string(AuxKind kind);
HeadKind parse_head_kind(std::string_view name);
BlendMode parse_blend_mode(std::string_view name);
AuxKind parse_aux_kind(std::string_view name);

struct HeadConfig {
  HeadKind head_kind = HeadKind::linear_ce;
  BlendMode blend = BlendMode::none;
  double dropout_p = 0.1;
  std::size_t bilstm_hidden = 32;
  AuxKind aux_kind = AuxKind::none;
  std::size_t input_layers_k = 1;

  bool fg_uses_crf() const { return head_kind != HeadKind::linear_ce; }
  bool has_aux() const { return aux_kind != AuxKind::none; }
  /// Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
  static HeadConfig from_json(const nlohmann::json& j);
  bool operator==(const HeadConfig&) const = default;
};

/// y = W x + b, W is out x in.
struct LinearParams {
  Matrix weight;
  std::vector<double> bias;

  std::size_t in_width() const { return weight.cols(); }
  std::size_t out_width() const { return weight.rows(); }
};

/// One LSTM direction. Gate blocks are stacked in the order input, forget,
/// cell candidate, output; each block is `hidden` rows tall.
///
///   i = sigmoid(a_i)  f = sigmoid(a_f)  g = tanh(a_g)  o = sigmoid(a_o)
///   c_t = f * c_{t-1} + i * g            h_t = o * tanh(c_t)
///
/// where a = input_weight x_t + recurrent_weight h_{t-1} + bias, h_{-1} = c_{-1} = 0.
struct LstmParams {
  Matrix input_weight;      // 4H x D
  Matrix recurrent_weight;  // 4H x H
  std::vector<double> bias;  // 4H

  std::size_t hidden() const { return recurrent_weight.cols(); }
};

struct BiLstmParams {
  LstmParams forward;
  LstmParams backward;

  std::size_t hidden() const { return forward.hidden(); }
};

struct HeadParams {
  std::optional<BiLstmParams> bilstm;
  LinearParams fg_projection;
  std::optional<LinearParams> cg_projection;
};

/// Everything a training run updates.
struct ModelParams {
  HeadParams head;
  std::optional<CrfParams> fg_crf;
  std::optional<CrfParams> cg_crf;

  /// Same structure, every value zero.
  static ModelParams zeros_like(const ModelParams& other);
};

namespace detail {
template <class Lin, class Fn>
void visit_linear(Lin& lin, const std::string& prefix, std::string_view group, Fn& fn) {
  fn(prefix + ".weight", group, lin.weight.values());
  fn(prefix + ".bias", group, std::span(lin.bias));
}
template <class Lstm, class Fn>
void visit_lstm(Lstm& lstm, const std::string& prefix, Fn& fn) {
  fn(prefix + ".input_weight", "bilstm", lstm.input_weight.values());
  fn(prefix + ".recurrent_weight", "bilstm", lstm.recurrent_weight.values());
  fn(prefix + ".bias", "bilstm", std::span(lstm.bias));
}
template <class Crf, class Fn>
void visit_crf(Crf& crf, const std::string& prefix, std::string_view group, Fn& fn) {
  fn(prefix + ".transitions", group, crf.transitions.values());
  fn(prefix + ".start", group, std::span(crf.start));
  fn(prefix + ".end", group, std::span(crf.end));
}
}  // namespace detail

/// Visits every parameter block in a fixed order as (name, group, values).
/// Groups: "bilstm", "projection", "crf", "aux_projection", "aux_crf".
template <class Model, class Fn>
void for_each_param(Model& model, Fn&& fn) {
  if (model.head.bilstm) {
    detail::visit_lstm(model.head.bilstm->forward, "bilstm.forward", fn);
    detail::visit_lstm(model.head.bilstm->backward, "bilstm.backward", fn);
  }
  detail::visit_linear(model.head.fg_projection, "fg_projection", "projection", fn);
  if (model.fg_crf) detail::visit_crf(*model.fg_crf, "fg_crf", "crf", fn);
  if (model.head.cg_projection)
    detail::visit_linear(*model.head.cg_projection, "cg_projection", "aux_projection", fn);
  if (model.cg_crf) detail::visit_crf(*model.cg_crf, "cg_crf", "aux_crf", fn);
}

/// Width of the representation entering the projections.
std::size_t projection_input_width(const HeadConfig& config, std::size_t input_width);

/// Glorot-uniform matrices, zero biases except LSTM forget gates (1.0), zero CRF
/// potentials. Main-branch parameters are drawn before auxiliary ones, so adding
/// an auxiliary branch leaves the main-branch initialization unchanged.
ModelParams init_model(const HeadConfig& config, std::size_t input_width,
                       const LabelSchema& schema, std::uint64_t seed);
ModelParams init_model(const HeadConfig& config, std::size_t input_width, std::size_t fg_labels,
                       std::size_t cg_labels, std::uint64_t seed);

/// Combines each token with its neighbours; missing neighbours are zero vectors.
/// concat -> [prev, self, next] (3d wide); avg -> (prev + self + next) / 3.
Matrix blend_triplet(const Matrix& vectors, BlendMode mode);
Matrix blend_triplet_backward(const Matrix& d_out, BlendMode mode);

Matrix linear_forward(const Matrix& x, const LinearParams& params);

struct LstmTrace {
  Matrix inputs;  // processing order
  Matrix gates;   // T x 4H, post-activation
  Matrix cells;   // T x H
  Matrix hidden;  // T x H
};

struct BiLstmTrace {
  LstmTrace forward;
  LstmTrace backward;  // stored in its own (reversed) processing order
};

/// Output row t is [forward h_t, backward h_t], 2H wide.
Matrix bilstm_forward(const Matrix& x, const BiLstmParams& params, BiLstmTrace* trace = nullptr);
/// Accumulates parameter gradients into `grads`; returns the input gradient.
Matrix bilstm_backward(const BiLstmTrace& trace, const BiLstmParams& params, const Matrix& d_out,
                       BiLstmParams& grads);

/// Mean over unmasked positions of -log softmax(logits_t)[gold_t].
/// Throws ShapeError when every position is masked.
double masked_ce(const Matrix& logits, std::span<const int> gold, std::span<const std::uint8_t> mask);
/// Same loss; writes d loss / d logits (zero rows at masked positions).
double masked_ce_grad(const Matrix& logits, std::span<const int> gold,
                      std::span<const std::uint8_t> mask, Matrix& d_logits);

/// Inverted dropout multipliers: 0 with probability p, else 1 / (1 - p).
Matrix dropout_mask(std::size_t rows, std::size_t cols, double p, Rng& rng);

struct ForwardTrace {
  HeadConfig config;
  Matrix input;
  Matrix dropout_scale;  // empty when dropout was not applied
  Matrix dropped;
  std::optional<BiLstmTrace> bilstm;
  Matrix features;  // shared input of the FG and CG projections
};

struct HeadOutput {
  Matrix fg_scores;
  std::optional<Matrix> cg_scores;
  ForwardTrace trace;
};

/// dropout (train mode only) -> triplet blend -> BiLSTM -> FG / CG projections.
/// `input` is the layer-concatenated T x (k * dim) matrix.
HeadOutput head_forward(const Matrix& input, const HeadConfig& config, const HeadParams& params,
                        bool train_mode, Rng& rng);
HeadOutput head_forward(const EmbeddingSequence& embeddings, const HeadConfig& config,
                        const HeadParams& params, bool train_mode, Rng& rng);

struct HeadGradients {
  HeadParams params;
  Matrix input;
};

/// Reverse pass for one head_forward call. `d_cg` must be given iff the trace
/// has an auxiliary branch (a zero matrix is fine). Throws ShapeError on mismatch.
HeadGradients head_backward(const ForwardTrace& trace, const HeadParams& params,
                            const Matrix& d_fg, const Matrix* d_cg);
/// As above, adding into an existing gradient structure.
Matrix head_backward_accumulate(const ForwardTrace& trace, const HeadParams& params,
                                const Matrix& d_fg, const Matrix* d_cg, HeadParams& grads);

}  // namespace nerkit
