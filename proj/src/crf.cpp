#include "nerkit/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nerkit/error.hpp"

namespace nerkit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

void check_shapes(const Matrix& emissions, const CrfParams& params) {
  std::size_t L = params.num_labels();
  if (L == 0) throw ShapeError("CRF has no labels");
  if (params.transitions.rows() != L || params.transitions.cols() != L || params.end.size() != L)
    throw ShapeError("inconsistent CRF parameter shapes");
  if (emissions.rows() == 0) throw ShapeError("empty emission matrix");
  if (emissions.cols() != L)
    throw ShapeError("emission width " + std::to_string(emissions.cols()) + " != " +
                     std::to_string(L) + " labels");
}

void check_tags(std::span<const int> tags, std::size_t T, std::size_t L) {
  if (tags.size() != T)
    throw ShapeError("tag count " + std::to_string(tags.size()) + " != sequence length " +
                     std::to_string(T));
  for (int y : tags)
    if (y < 0 || static_cast<std::size_t>(y) >= L)
      throw ShapeError("label index out of range: " + std::to_string(y));
}

// alpha(t, j): log-sum of scores of all prefixes ending in label j at t.
Matrix forward_table(const Matrix& em, const CrfParams& p) {
  std::size_t T = em.rows(), L = p.num_labels();
  Matrix alpha(T, L);
  for (std::size_t j = 0; j < L; ++j) alpha(0, j) = p.start[j] + em(0, j);
  std::vector<double> scratch(L);
  for (std::size_t t = 1; t < T; ++t)
    for (std::size_t j = 0; j < L; ++j) {
      for (std::size_t i = 0; i < L; ++i) scratch[i] = alpha(t - 1, i) + p.transitions(i, j);
      alpha(t, j) = em(t, j) + log_sum_exp(scratch);
    }
  return alpha;
}

// beta(t, i): log-sum of scores of all suffixes after label i at t, including end.
Matrix backward_table(const Matrix& em, const CrfParams& p) {
  std::size_t T = em.rows(), L = p.num_labels();
  Matrix beta(T, L);
  for (std::size_t i = 0; i < L; ++i) beta(T - 1, i) = p.end[i];
  std::vector<double> scratch(L);
  for (std::size_t t = T - 1; t-- > 0;)
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < L; ++j)
        scratch[j] = p.transitions(i, j) + em(t + 1, j) + beta(t + 1, j);
      beta(t, i) = log_sum_exp(scratch);
    }
  return beta;
}

double partition_from_alpha(const Matrix& alpha, const CrfParams& p) {
  std::size_t T = alpha.rows(), L = p.num_labels();
  std::vector<double> last(L);
  for (std::size_t j = 0; j < L; ++j) last[j] = alpha(T - 1, j) + p.end[j];
  return log_sum_exp(last);
}

}  // namespace

CrfParams CrfParams::zeros(std::size_t num_labels) {
  return {Matrix(num_labels, num_labels), std::vector<double>(num_labels, 0.0),
          std::vector<double>(num_labels, 0.0)};
}

TransitionMask TransitionMask::allow_all(std::size_t num_labels) {
  return {num_labels, std::vector<std::uint8_t>(num_labels * num_labels, 1),
          std::vector<std::uint8_t>(num_labels, 1), std::vector<std::uint8_t>(num_labels, 1)};
}

void TransitionMask::validate() const {
  std::size_t L = num_labels;
  if (allowed.size() != L * L || start_allowed.size() != L || end_allowed.size() != L)
    throw ShapeError("transition mask has inconsistent shape");
  for (std::size_t a = 0; a < L; ++a) {
    bool succ = false, pred = false;
    for (std::size_t b = 0; b < L; ++b) {
      succ = succ || permits(a, b);
      pred = pred || permits(b, a);
    }
    if (!succ || !pred)
      throw ShapeError("label " + std::to_string(a) + " has no allowed successor or predecessor");
  }
}

double path_score(const Matrix& emissions, std::span<const int> tags, const CrfParams& params) {
  check_shapes(emissions, params);
  check_tags(tags, emissions.rows(), params.num_labels());
  auto y = [&](std::size_t t) { return static_cast<std::size_t>(tags[t]); };
  std::size_t T = tags.size();
  double s = params.start[y(0)];
  for (std::size_t t = 0; t < T; ++t) {
    s += emissions(t, y(t));
    if (t + 1 < T) s += params.transitions(y(t), y(t + 1));
  }
  return s + params.end[y(T - 1)];
}

double log_partition(const Matrix& emissions, const CrfParams& params) {
  check_shapes(emissions, params);
  return partition_from_alpha(forward_table(emissions, params), params);
}

double nll(const Matrix& emissions, std::span<const int> tags, const CrfParams& params) {
  return log_partition(emissions, params) - path_score(emissions, tags, params);
}

Matrix marginals(const Matrix& emissions, const CrfParams& params) {
  check_shapes(emissions, params);
  Matrix alpha = forward_table(emissions, params);
  Matrix beta = backward_table(emissions, params);
  double log_z = partition_from_alpha(alpha, params);
  Matrix m(emissions.rows(), emissions.cols());
  for (std::size_t t = 0; t < m.rows(); ++t)
    for (std::size_t j = 0; j < m.cols(); ++j) m(t, j) = std::exp(alpha(t, j) + beta(t, j) - log_z);
  return m;
}

CrfGradients nll_grad(const Matrix& emissions, std::span<const int> tags, const CrfParams& params) {
  check_shapes(emissions, params);
  std::size_t T = emissions.rows(), L = params.num_labels();
  check_tags(tags, T, L);

  Matrix alpha = forward_table(emissions, params);
  Matrix beta = backward_table(emissions, params);
  double log_z = partition_from_alpha(alpha, params);

  CrfGradients g;
  g.nll = log_z - path_score(emissions, tags, params);
  g.emissions = Matrix(T, L);
  g.transitions = Matrix(L, L);
  g.start.assign(L, 0.0);
  g.end.assign(L, 0.0);

  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < L; ++j) g.emissions(t, j) = std::exp(alpha(t, j) + beta(t, j) - log_z);
  for (std::size_t j = 0; j < L; ++j) {
    g.start[j] = g.emissions(0, j);
    g.end[j] = g.emissions(T - 1, j);
  }
  for (std::size_t t = 0; t + 1 < T; ++t)
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t j = 0; j < L; ++j)
        g.transitions(i, j) += std::exp(alpha(t, i) + params.transitions(i, j) + emissions(t + 1, j) +
                                        beta(t + 1, j) - log_z);

  auto y = [&](std::size_t t) { return static_cast<std::size_t>(tags[t]); };
  g.start[y(0)] -= 1.0;
  g.end[y(T - 1)] -= 1.0;
  for (std::size_t t = 0; t < T; ++t) {
    g.emissions(t, y(t)) -= 1.0;
    if (t + 1 < T) g.transitions(y(t), y(t + 1)) -= 1.0;
  }
  return g;
}

ViterbiResult viterbi(const Matrix& emissions, const CrfParams& params, const TransitionMask* mask) {
  check_shapes(emissions, params);
  std::size_t T = emissions.rows(), L = params.num_labels();
  if (mask) {
    if (mask->num_labels != L) throw ShapeError("mask label count does not match CRF");
    mask->validate();
  }

  // beta(t, j): best score of labels t..T-1 given y_t = j, including the end score.
  Matrix beta(T, L, kNegInf);
  for (std::size_t j = 0; j < L; ++j)
    if (!mask || mask->end_allowed[j]) beta(T - 1, j) = emissions(T - 1, j) + params.end[j];
  for (std::size_t t = T - 1; t > 0; --t)
    for (std::size_t i = 0; i < L; ++i) {
      double best = kNegInf;
      for (std::size_t j = 0; j < L; ++j) {
        if (beta(t, j) == kNegInf || (mask && !mask->permits(i, j))) continue;
        best = std::max(best, params.transitions(i, j) + beta(t, j));
      }
      if (best != kNegInf) beta(t - 1, i) = emissions(t - 1, i) + best;
    }

  // Greedy forward pass: the first maximizer at each step yields the
  // lexicographically smallest optimal path.
  ViterbiResult r;
  r.path.assign(T, 0);
  int prev = -1;
  for (std::size_t t = 0; t < T; ++t) {
    double best = kNegInf;
    int arg = -1;
    for (std::size_t j = 0; j < L; ++j) {
      if (beta(t, j) == kNegInf) continue;
      if (t == 0 ? (mask && !mask->start_allowed[j]) : (mask && !mask->permits(prev, j))) continue;
      double s = beta(t, j) + (t == 0 ? params.start[j] : params.transitions(prev, j));
      if (arg < 0 || s > best) {
        best = s;
        arg = static_cast<int>(j);
      }
    }
    if (arg < 0) throw ShapeError("transition mask admits no complete path");
    r.path[t] = prev = arg;
  }
  r.score = path_score(emissions, r.path, params);
  return r;
}

TransitionMask bio_mask(const LabelSchema& schema, LabelSpace space) {
  const auto& labels = schema.labels(space);
  std::size_t L = labels.size();
  TransitionMask mask = TransitionMask::allow_all(L);
  for (std::size_t b = 0; b < L; ++b) {
    BioTag to = parse_bio(labels[b]);
    if (to.prefix != 'I') continue;
    mask.start_allowed[b] = 0;
    for (std::size_t a = 0; a < L; ++a) {
      BioTag from = parse_bio(labels[a]);
      bool continues = from.prefix != 'O' && from.type == to.type;
      mask.allowed[a * L + b] = continues ? 1 : 0;
    }
  }
  return mask;
}

}  // namespace nerkit
