#include "nerkit/heads.hpp"

#include <algorithm>
#include <cmath>

#include "nerkit/error.hpp"

namespace nerkit {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void glorot_uniform(Matrix& m, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (double& v : m.values()) v = uniform(rng, -limit, limit);
}

LinearParams make_linear(std::size_t in, std::size_t out, Rng& rng) {
  LinearParams p{Matrix(out, in), std::vector<double>(out, 0.0)};
  glorot_uniform(p.weight, rng);
  return p;
}

LstmParams make_lstm(std::size_t in, std::size_t hidden, Rng& rng) {
  LstmParams p{Matrix(4 * hidden, in), Matrix(4 * hidden, hidden), std::vector<double>(4 * hidden, 0.0)};
  glorot_uniform(p.input_weight, rng);
  glorot_uniform(p.recurrent_weight, rng);
  for (std::size_t h = 0; h < hidden; ++h) p.bias[hidden + h] = 1.0;  // forget gate
  return p;
}

LinearParams zeros_like(const LinearParams& p) {
  return {Matrix(p.weight.rows(), p.weight.cols()), std::vector<double>(p.bias.size(), 0.0)};
}

LstmParams zeros_like(const LstmParams& p) {
  return {Matrix(p.input_weight.rows(), p.input_weight.cols()),
          Matrix(p.recurrent_weight.rows(), p.recurrent_weight.cols()),
          std::vector<double>(p.bias.size(), 0.0)};
}

Matrix reversed_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t t = 0; t < m.rows(); ++t) {
    auto src = m.row(m.rows() - 1 - t);
    std::copy(src.begin(), src.end(), out.row(t).begin());
  }
  return out;
}

void check_lstm(const LstmParams& p, std::size_t in) {
  std::size_t H = p.hidden();
  if (H == 0 || p.recurrent_weight.rows() != 4 * H || p.input_weight.rows() != 4 * H ||
      p.bias.size() != 4 * H)
    throw ShapeError("inconsistent LSTM parameter shapes");
  if (p.input_weight.cols() != in)
    throw ShapeError("LSTM expects input width " + std::to_string(p.input_weight.cols()) + ", got " +
                     std::to_string(in));
}

// Runs one direction over rows of `x` in order.
LstmTrace lstm_run(const Matrix& x, const LstmParams& p) {
  check_lstm(p, x.cols());
  std::size_t T = x.rows(), H = p.hidden(), D = x.cols();
  LstmTrace tr{x, Matrix(T, 4 * H), Matrix(T, H), Matrix(T, H)};
  std::vector<double> a(4 * H);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t r = 0; r < 4 * H; ++r) {
      double s = p.bias[r];
      for (std::size_t d = 0; d < D; ++d) s += p.input_weight(r, d) * x(t, d);
      if (t > 0)
        for (std::size_t h = 0; h < H; ++h) s += p.recurrent_weight(r, h) * tr.hidden(t - 1, h);
      a[r] = s;
    }
    for (std::size_t h = 0; h < H; ++h) {
      double i = sigmoid(a[h]);
      double f = sigmoid(a[H + h]);
      double g = std::tanh(a[2 * H + h]);
      double o = sigmoid(a[3 * H + h]);
      double c_prev = t > 0 ? tr.cells(t - 1, h) : 0.0;
      double c = f * c_prev + i * g;
      tr.gates(t, h) = i;
      tr.gates(t, H + h) = f;
      tr.gates(t, 2 * H + h) = g;
      tr.gates(t, 3 * H + h) = o;
      tr.cells(t, h) = c;
      tr.hidden(t, h) = o * std::tanh(c);
    }
  }
  return tr;
}

// Backpropagation through time for one direction; returns d inputs (processing order).
Matrix lstm_backprop(const LstmTrace& tr, const LstmParams& p, const Matrix& d_hidden,
                     LstmParams& g) {
  std::size_t T = tr.inputs.rows(), H = p.hidden(), D = tr.inputs.cols();
  Matrix dx(T, D);
  std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), da(4 * H);
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t h = 0; h < H; ++h) {
      double i = tr.gates(t, h), f = tr.gates(t, H + h);
      double gg = tr.gates(t, 2 * H + h), o = tr.gates(t, 3 * H + h);
      double c = tr.cells(t, h);
      double tc = std::tanh(c);
      double c_prev = t > 0 ? tr.cells(t - 1, h) : 0.0;
      double dh = d_hidden(t, h) + dh_next[h];
      double dc = dh * o * (1.0 - tc * tc) + dc_next[h];
      da[h] = dc * gg * i * (1.0 - i);
      da[H + h] = dc * c_prev * f * (1.0 - f);
      da[2 * H + h] = dc * i * (1.0 - gg * gg);
      da[3 * H + h] = dh * tc * o * (1.0 - o);
      dc_next[h] = dc * f;
    }
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    for (std::size_t r = 0; r < 4 * H; ++r) {
      double d = da[r];
      if (d == 0.0) continue;
      g.bias[r] += d;
      for (std::size_t k = 0; k < D; ++k) {
        g.input_weight(r, k) += d * tr.inputs(t, k);
        dx(t, k) += d * p.input_weight(r, k);
      }
      if (t > 0)
        for (std::size_t h = 0; h < H; ++h) {
          g.recurrent_weight(r, h) += d * tr.hidden(t - 1, h);
          dh_next[h] += d * p.recurrent_weight(r, h);
        }
    }
  }
  return dx;
}

void check_linear(const LinearParams& p, std::size_t in) {
  if (p.bias.size() != p.out_width()) throw ShapeError("linear bias width mismatch");
  if (p.in_width() != in)
    throw ShapeError("linear layer expects input width " + std::to_string(p.in_width()) + ", got " +
                     std::to_string(in));
}

// Adds W^T d_out into d_in and accumulates the weight/bias gradients.
void linear_backprop(const Matrix& x, const LinearParams& p, const Matrix& d_out, LinearParams& g,
                     Matrix& d_in) {
  for (std::size_t t = 0; t < x.rows(); ++t)
    for (std::size_t o = 0; o < p.out_width(); ++o) {
      double d = d_out(t, o);
      if (d == 0.0) continue;
      g.bias[o] += d;
      for (std::size_t k = 0; k < p.in_width(); ++k) {
        g.weight(o, k) += d * x(t, k);
        d_in(t, k) += d * p.weight(o, k);
      }
    }
}

double softmax_xent_row(std::span<const double> logits, int gold, std::span<double> d_row) {
  double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double z : logits) s += std::exp(z - m);
  double log_z = m + std::log(s);
  if (!d_row.empty()) {
    for (std::size_t j = 0; j < logits.size(); ++j) d_row[j] = std::exp(logits[j] - log_z);
    d_row[static_cast<std::size_t>(gold)] -= 1.0;
  }
  return log_z - logits[static_cast<std::size_t>(gold)];
}

}  // namespace

std::string_view to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::linear_ce: return "linear_ce";
    case HeadKind::linear_crf: return "linear_crf";
    case HeadKind::bilstm_crf: return "bilstm_crf";
  }
  return "?";
}

std::string_view to_string(BlendMode mode) {
  switch (mode) {
    case BlendMode::none: return "none";
    case BlendMode::concat: return "concat";
    case BlendMode::avg: return "avg";
  }
  return "?";
}

std::string_view to_string(AuxKind kind) {
  switch (kind) {
    case AuxKind::none: return "none";
    case AuxKind::linear_ce: return "linear_ce";
    case AuxKind::crf: return "crf";
  }
  return "?";
}

HeadKind parse_head_kind(std::string_view name) {
  for (auto k : {HeadKind::linear_ce, HeadKind::linear_crf, HeadKind::bilstm_crf})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown head_kind: " + std::string(name));
}

BlendMode parse_blend_mode(std::string_view name) {
  for (auto k : {BlendMode::none, BlendMode::concat, BlendMode::avg})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown blend: " + std::string(name));
}

AuxKind parse_aux_kind(std::string_view name) {
  for (auto k : {AuxKind::none, AuxKind::linear_ce, AuxKind::crf})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown aux_kind: " + std::string(name));
}

void HeadConfig::validate() const {
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("dropout_p must be in [0, 1)");
  if (head_kind == HeadKind::bilstm_crf && bilstm_hidden < 1)
    throw ConfigError("bilstm_hidden must be >= 1");
  if (input_layers_k < 1) throw ConfigError("input_layers_k must be >= 1");
}

nlohmann::json HeadConfig::to_json() const {
  return {{"head_kind", to_string(head_kind)}, {"blend", to_string(blend)},
          {"dropout_p", dropout_p},            {"bilstm_hidden", bilstm_hidden},
          {"aux_kind", to_string(aux_kind)},   {"input_layers_k", input_layers_k}};
}

HeadConfig HeadConfig::from_json(const nlohmann::json& j) {
  HeadConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "head_kind") c.head_kind = parse_head_kind(value.get<std::string>());
      else if (key == "blend") c.blend = parse_blend_mode(value.get<std::string>());
      else if (key == "dropout_p") c.dropout_p = value.get<double>();
      else if (key == "bilstm_hidden") c.bilstm_hidden = value.get<std::size_t>();
      else if (key == "aux_kind") c.aux_kind = parse_aux_kind(value.get<std::string>());
      else if (key == "input_layers_k") c.input_layers_k = value.get<std::size_t>();
      else throw ConfigError("unknown head config key: " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid head config: ") + e.what());
  }
  c.validate();
  return c;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
  ModelParams z;
  if (other.head.bilstm)
    z.head.bilstm = BiLstmParams{nerkit::zeros_like(other.head.bilstm->forward),
                                 nerkit::zeros_like(other.head.bilstm->backward)};
  z.head.fg_projection = nerkit::zeros_like(other.head.fg_projection);
  if (other.head.cg_projection) z.head.cg_projection = nerkit::zeros_like(*other.head.cg_projection);
  if (other.fg_crf) z.fg_crf = CrfParams::zeros(other.fg_crf->num_labels());
  if (other.cg_crf) z.cg_crf = CrfParams::zeros(other.cg_crf->num_labels());
  return z;
}

std::size_t projection_input_width(const HeadConfig& config, std::size_t input_width) {
  if (config.head_kind == HeadKind::bilstm_crf) return 2 * config.bilstm_hidden;
  return config.blend == BlendMode::concat ? 3 * input_width : input_width;
}

ModelParams init_model(const HeadConfig& config, std::size_t input_width, const LabelSchema& schema,
                       std::uint64_t seed) {
  return init_model(config, input_width, schema.num_labels(LabelSpace::fine),
                    schema.num_labels(LabelSpace::coarse), seed);
}

ModelParams init_model(const HeadConfig& config, std::size_t input_width, std::size_t fg,
                       std::size_t cg, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ModelParams m;
  std::size_t blended = config.blend == BlendMode::concat ? 3 * input_width : input_width;
  if (config.head_kind == HeadKind::bilstm_crf) {
    m.head.bilstm = BiLstmParams{make_lstm(blended, config.bilstm_hidden, rng),
                                 make_lstm(blended, config.bilstm_hidden, rng)};
  }
  std::size_t rep = projection_input_width(config, input_width);
  m.head.fg_projection = make_linear(rep, fg, rng);
  if (config.fg_uses_crf()) m.fg_crf = CrfParams::zeros(fg);
  if (config.has_aux()) m.head.cg_projection = make_linear(rep, cg, rng);
  if (config.aux_kind == AuxKind::crf) m.cg_crf = CrfParams::zeros(cg);
  return m;
}

Matrix blend_triplet(const Matrix& v, BlendMode mode) {
  std::size_t T = v.rows(), d = v.cols();
  if (mode == BlendMode::none) return v;
  Matrix out(T, mode == BlendMode::concat ? 3 * d : d);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t k = 0; k < d; ++k) {
      double prev = t > 0 ? v(t - 1, k) : 0.0;
      double self = v(t, k);
      double next = t + 1 < T ? v(t + 1, k) : 0.0;
      if (mode == BlendMode::concat) {
        out(t, k) = prev;
        out(t, d + k) = self;
        out(t, 2 * d + k) = next;
      } else {
        out(t, k) = (prev + self + next) / 3.0;
      }
    }
  return out;
}

Matrix blend_triplet_backward(const Matrix& d_out, BlendMode mode) {
  if (mode == BlendMode::none) return d_out;
  std::size_t T = d_out.rows();
  std::size_t d = mode == BlendMode::concat ? d_out.cols() / 3 : d_out.cols();
  Matrix dv(T, d);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t k = 0; k < d; ++k) {
      if (mode == BlendMode::concat) {
        // token t is "self" for row t, "prev" for row t+1, "next" for row t-1
        dv(t, k) += d_out(t, d + k);
        if (t + 1 < T) dv(t, k) += d_out(t + 1, k);
        if (t > 0) dv(t, k) += d_out(t - 1, 2 * d + k);
      } else {
        double s = d_out(t, k);
        if (t + 1 < T) s += d_out(t + 1, k);
        if (t > 0) s += d_out(t - 1, k);
        dv(t, k) = s / 3.0;
      }
    }
  return dv;
}

Matrix linear_forward(const Matrix& x, const LinearParams& p) {
  check_linear(p, x.cols());
  Matrix y(x.rows(), p.out_width());
  for (std::size_t t = 0; t < x.rows(); ++t)
    for (std::size_t o = 0; o < p.out_width(); ++o) {
      double s = p.bias[o];
      for (std::size_t k = 0; k < p.in_width(); ++k) s += p.weight(o, k) * x(t, k);
      y(t, o) = s;
    }
  return y;
}

Matrix bilstm_forward(const Matrix& x, const BiLstmParams& p, BiLstmTrace* trace) {
  if (p.forward.hidden() != p.backward.hidden()) throw ShapeError("BiLSTM directions differ in width");
  LstmTrace fw = lstm_run(x, p.forward);
  LstmTrace bw = lstm_run(reversed_rows(x), p.backward);
  std::size_t T = x.rows(), H = p.hidden();
  Matrix out(T, 2 * H);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t h = 0; h < H; ++h) {
      out(t, h) = fw.hidden(t, h);
      out(t, H + h) = bw.hidden(T - 1 - t, h);
    }
  if (trace) *trace = BiLstmTrace{std::move(fw), std::move(bw)};
  return out;
}

Matrix bilstm_backward(const BiLstmTrace& trace, const BiLstmParams& p, const Matrix& d_out,
                       BiLstmParams& grads) {
  std::size_t T = trace.forward.hidden.rows(), H = p.hidden();
  if (d_out.rows() != T || d_out.cols() != 2 * H) throw ShapeError("BiLSTM upstream gradient shape");
  Matrix d_fw(T, H), d_bw(T, H);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t h = 0; h < H; ++h) {
      d_fw(t, h) = d_out(t, h);
      d_bw(T - 1 - t, h) = d_out(t, H + h);
    }
  Matrix dx = lstm_backprop(trace.forward, p.forward, d_fw, grads.forward);
  Matrix dx_rev = lstm_backprop(trace.backward, p.backward, d_bw, grads.backward);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t k = 0; k < dx.cols(); ++k) dx(t, k) += dx_rev(T - 1 - t, k);
  return dx;
}

double masked_ce_grad(const Matrix& logits, std::span<const int> gold,
                      std::span<const std::uint8_t> mask, Matrix& d_logits) {
  std::size_t T = logits.rows(), L = logits.cols();
  if (gold.size() != T || mask.size() != T) throw ShapeError("masked_ce: gold/mask length mismatch");
  std::size_t n = 0;
  for (auto m : mask) n += m ? 1 : 0;
  if (n == 0) throw ShapeError("masked_ce: every position is masked");
  d_logits = Matrix(T, L);
  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    if (!mask[t]) continue;
    if (gold[t] < 0 || static_cast<std::size_t>(gold[t]) >= L)
      throw ShapeError("masked_ce: gold label out of range");
    total += softmax_xent_row(logits.row(t), gold[t], d_logits.row(t));
  }
  double inv = 1.0 / static_cast<double>(n);
  for (double& v : d_logits.values()) v *= inv;
  return total * inv;
}

double masked_ce(const Matrix& logits, std::span<const int> gold, std::span<const std::uint8_t> mask) {
  Matrix unused;
  return masked_ce_grad(logits, gold, mask, unused);
}

Matrix dropout_mask(std::size_t rows, std::size_t cols, double p, Rng& rng) {
  Matrix m(rows, cols);
  double keep = 1.0 / (1.0 - p);
  for (double& v : m.values()) v = uniform01(rng) < p ? 0.0 : keep;
  return m;
}

HeadOutput head_forward(const Matrix& input, const HeadConfig& config, const HeadParams& params,
                        bool train_mode, Rng& rng) {
  config.validate();
  if (input.rows() == 0) throw ShapeError("head_forward: empty sequence");
  bool wants_lstm = config.head_kind == HeadKind::bilstm_crf;
  if (wants_lstm != params.bilstm.has_value())
    throw ShapeError("head config and parameters disagree on the BiLSTM layer");
  if (config.has_aux() != params.cg_projection.has_value())
    throw ShapeError("head config and parameters disagree on the auxiliary branch");

  HeadOutput out;
  ForwardTrace& tr = out.trace;
  tr.config = config;
  tr.input = input;
  if (train_mode && config.dropout_p > 0.0) {
    tr.dropout_scale = dropout_mask(input.rows(), input.cols(), config.dropout_p, rng);
    tr.dropped = input;
    auto dv = tr.dropped.values();
    auto sv = tr.dropout_scale.values();
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= sv[i];
  } else {
    tr.dropped = input;
  }
  Matrix blended = blend_triplet(tr.dropped, config.blend);
  if (wants_lstm) {
    tr.bilstm.emplace();
    tr.features = bilstm_forward(blended, *params.bilstm, &*tr.bilstm);
  } else {
    tr.features = std::move(blended);
  }
  out.fg_scores = linear_forward(tr.features, params.fg_projection);
  if (params.cg_projection) out.cg_scores = linear_forward(tr.features, *params.cg_projection);
  return out;
}

HeadOutput head_forward(const EmbeddingSequence& embeddings, const HeadConfig& config,
                        const HeadParams& params, bool train_mode, Rng& rng) {
  return head_forward(concat_layers(embeddings, config.input_layers_k), config, params, train_mode, rng);
}

Matrix head_backward_accumulate(const ForwardTrace& trace, const HeadParams& params,
                                const Matrix& d_fg, const Matrix* d_cg, HeadParams& grads) {
  const auto& cfg = trace.config;
  std::size_t T = trace.features.rows();
  if (cfg.has_aux() != params.cg_projection.has_value() ||
      (cfg.head_kind == HeadKind::bilstm_crf) != params.bilstm.has_value() ||
      (cfg.head_kind == HeadKind::bilstm_crf) != trace.bilstm.has_value())
    throw ShapeError("head_backward: trace does not match parameters");
  if (d_fg.rows() != T || d_fg.cols() != params.fg_projection.out_width())
    throw ShapeError("head_backward: FG gradient shape mismatch");
  if (cfg.has_aux() != (d_cg != nullptr))
    throw ShapeError("head_backward: CG gradient must be given iff the aux branch exists");
  if (d_cg && (d_cg->rows() != T || d_cg->cols() != params.cg_projection->out_width()))
    throw ShapeError("head_backward: CG gradient shape mismatch");
  if (grads.bilstm.has_value() != params.bilstm.has_value() ||
      grads.cg_projection.has_value() != params.cg_projection.has_value())
    throw ShapeError("head_backward: gradient structure mismatch");

  Matrix d_features(T, trace.features.cols());
  linear_backprop(trace.features, params.fg_projection, d_fg, grads.fg_projection, d_features);
  if (d_cg) linear_backprop(trace.features, *params.cg_projection, *d_cg, *grads.cg_projection, d_features);

  Matrix d_blended = cfg.head_kind == HeadKind::bilstm_crf
                         ? bilstm_backward(*trace.bilstm, *params.bilstm, d_features, *grads.bilstm)
                         : std::move(d_features);
  Matrix d_input = blend_triplet_backward(d_blended, cfg.blend);
  if (!trace.dropout_scale.empty()) {
    auto dv = d_input.values();
    auto sv = trace.dropout_scale.values();
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= sv[i];
  }
  return d_input;
}

HeadGradients head_backward(const ForwardTrace& trace, const HeadParams& params, const Matrix& d_fg,
                            const Matrix* d_cg) {
  ModelParams shell;
  shell.head = params;
  HeadGradients g{ModelParams::zeros_like(shell).head, Matrix()};
  g.input = head_backward_accumulate(trace, params, d_fg, d_cg, g.params);
  return g;
}

}  // namespace nerkit
