#pragma once
// Per-sentence combined loss assembled from public pieces, plus a
// finite-difference sweep over every model parameter.

#include <cstdint>
#include <vector>

#include "nerkit/crf.hpp"
#include "nerkit/heads.hpp"
#include "nerkit/training.hpp"
#include "oracles.hpp"

namespace oracle {

struct Gold {
  std::vector<int> fg;
  std::vector<int> cg;
};

/// W * cg_loss + (1 - W) * scale * fg_loss for one sentence. Dropout draws come
/// from a fresh Rng(seed), so repeated calls see the same mask.
inline double head_loss(const nerkit::ModelParams& m, const nerkit::HeadConfig& cfg, const Matrix& x,
                        const Gold& gold, double weight, double scale, std::uint64_t seed,
                        nerkit::ModelParams* grads = nullptr, Matrix* d_input = nullptr) {
  using namespace nerkit;
  Rng rng(seed);
  HeadOutput out = head_forward(x, cfg, m.head, true, rng);
  const std::size_t T = x.rows();
  std::vector<std::uint8_t> mask(T, 1);
  double fg_w = cfg.has_aux() ? (1.0 - weight) * scale : 1.0;
  double cg_w = cfg.has_aux() ? weight : 0.0;

  Matrix d_fg(out.fg_scores.rows(), out.fg_scores.cols());
  double fg_loss;
  if (cfg.fg_uses_crf()) {
    auto g = nll_grad(out.fg_scores, gold.fg, *m.fg_crf);
    fg_loss = g.nll;
    d_fg = g.emissions;
    if (grads) {
      for (std::size_t k = 0; k < g.transitions.values().size(); ++k)
        grads->fg_crf->transitions.values()[k] += fg_w * g.transitions.values()[k];
      for (std::size_t k = 0; k < g.start.size(); ++k) {
        grads->fg_crf->start[k] += fg_w * g.start[k];
        grads->fg_crf->end[k] += fg_w * g.end[k];
      }
    }
  } else {
    fg_loss = masked_ce_grad(out.fg_scores, gold.fg, mask, d_fg);
  }
  for (double& v : d_fg.values()) v *= fg_w;

  double cg_loss = 0.0;
  Matrix d_cg;
  if (cfg.has_aux()) {
    d_cg = Matrix(out.cg_scores->rows(), out.cg_scores->cols());
    if (cfg.aux_kind == AuxKind::crf) {
      auto g = nll_grad(*out.cg_scores, gold.cg, *m.cg_crf);
      cg_loss = g.nll;
      d_cg = g.emissions;
      if (grads) {
        for (std::size_t k = 0; k < g.transitions.values().size(); ++k)
          grads->cg_crf->transitions.values()[k] += cg_w * g.transitions.values()[k];
        for (std::size_t k = 0; k < g.start.size(); ++k) {
          grads->cg_crf->start[k] += cg_w * g.start[k];
          grads->cg_crf->end[k] += cg_w * g.end[k];
        }
      }
    } else {
      cg_loss = masked_ce_grad(*out.cg_scores, gold.cg, mask, d_cg);
    }
    for (double& v : d_cg.values()) v *= cg_w;
  }
  if (grads) {
    Matrix din = head_backward_accumulate(out.trace, m.head, d_fg, cfg.has_aux() ? &d_cg : nullptr, grads->head);
    if (d_input) *d_input = din;
  }
  return cfg.has_aux() ? nerkit::combined_loss(cg_loss, fg_loss, weight, scale) : fg_loss;
}

struct GradCheck {
  double worst = 0.0;
  std::size_t checked = 0;
  std::string worst_name;
};

/// Compares analytic gradients with central differences for every parameter
/// and every input entry.
inline GradCheck check_head_gradients(nerkit::ModelParams m, const nerkit::HeadConfig& cfg, Matrix x,
                                      const Gold& gold, double weight, double scale, std::uint64_t seed) {
  using namespace nerkit;
  ModelParams grads = ModelParams::zeros_like(m);
  Matrix d_input;
  head_loss(m, cfg, x, gold, weight, scale, seed, &grads, &d_input);

  std::vector<std::span<double>> analytic;
  for_each_param(grads, [&](const std::string&, std::string_view, std::span<double> v) { analytic.push_back(v); });
  auto f = [&] { return head_loss(m, cfg, x, gold, weight, scale, seed); };
  GradCheck result;
  std::size_t block = 0;
  auto consider = [&](double a, double n, const std::string& name) {
    double e = relative_error(a, n);
    ++result.checked;
    if (e > result.worst) {
      result.worst = e;
      result.worst_name = name;
    }
  };
  for_each_param(m, [&](const std::string& name, std::string_view, std::span<double> values) {
    for (std::size_t k = 0; k < values.size(); ++k)
      consider(analytic[block][k], central_difference(f, values[k]), name + "[" + std::to_string(k) + "]");
    ++block;
  });
  for (std::size_t k = 0; k < x.values().size(); ++k)
    consider(d_input.values()[k], central_difference(f, x.values()[k]), "input[" + std::to_string(k) + "]");
  return result;
}

}  // namespace oracle

namespace oracle {

/// Overwrites every parameter with U(-scale, scale).
inline void randomize(nerkit::ModelParams& m, nerkit::Rng& rng, double scale = 0.5) {
  nerkit::for_each_param(m, [&](const std::string&, std::string_view, std::span<double> v) {
    for (double& x : v) x = nerkit::uniform(rng, -scale, scale);
  });
}

}  // namespace oracle
