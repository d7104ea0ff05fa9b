#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nerkit/labels.hpp"
#include "nerkit/matrix.hpp"

namespace nerkit {

/// Linear-chain CRF potentials. transitions(i, j) scores label i followed by j.
struct CrfParams {
  Matrix transitions;
  std::vector<double> start;
  std::vector<double> end;

  static CrfParams zeros(std::size_t num_labels);
  std::size_t num_labels() const { return start.size(); }
};

/// Allowed transitions for constrained decoding. Never affects training.
struct TransitionMask {
  std::size_t num_labels = 0;
  std::vector<std::uint8_t> allowed;  // num_labels * num_labels, row = from
  std::vector<std::uint8_t> start_allowed;
  std::vector<std::uint8_t> end_allowed;

  static TransitionMask allow_all(std::size_t num_labels);
  bool permits(std::size_t from, std::size_t to) const { return allowed[from * num_labels + to] != 0; }
  /// Throws ShapeError unless every label has an allowed successor and predecessor.
  void validate() const;
};

/// start[y0] + sum_t emissions(t, y_t) + sum_t transitions(y_t, y_t+1) + end[y_T-1].
double path_score(const Matrix& emissions, std::span<const int> tags, const CrfParams& params);

/// log of the sum over all label paths of exp(path_score), by the forward recursion.
double log_partition(const Matrix& emissions, const CrfParams& params);

/// Negative log-likelihood of `tags`: log_partition - path_score.
double nll(const Matrix& emissions, std::span<const int> tags, const CrfParams& params);

struct CrfGradients {
  double nll = 0.0;
  Matrix emissions;
  Matrix transitions;
  std::vector<double> start;
  std::vector<double> end;
};

/// NLL and its gradient (expected counts minus gold counts) via forward-backward.
CrfGradients nll_grad(const Matrix& emissions, std::span<const int> tags, const CrfParams& params);

/// Posterior label marginals, T x L.
Matrix marginals(const Matrix& emissions, const CrfParams& params);

struct ViterbiResult {
  std::vector<int> path;
  double score = 0.0;
};

/// Highest-scoring path. Among exactly tied optima the lexicographically
/// smallest label sequence is returned (lowest index at the earliest
/// differing position). With a mask,
/// only permitted transitions are considered; throws ShapeError if none survive.
ViterbiResult viterbi(const Matrix& emissions, const CrfParams& params,
                      const TransitionMask* mask = nullptr);

/// BIO validity: forbids start->I-X, O->I-X, B-X->I-Y and I-X->I-Y for X != Y.
TransitionMask bio_mask(const LabelSchema& schema, LabelSpace space);

}  // namespace nerkit
