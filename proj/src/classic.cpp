#include "nerkit/classic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "nerkit/error.hpp"
#include "nerkit/util.hpp"

namespace nerkit {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Last n code points of a UTF-8 string (the whole string when shorter).
std::string utf8_suffix(const std::string& s, std::size_t n) {
  std::size_t pos = s.size();
  for (std::size_t taken = 0; pos > 0 && taken < n; ++taken) {
    --pos;
    while (pos > 0 && (static_cast<unsigned char>(s[pos]) & 0xC0) == 0x80) --pos;
  }
  return s.substr(pos);
}

bool is_digit(std::string_view w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool is_title(std::string_view w) {
  bool seen = false;
  for (unsigned char c : w) {
    if (!std::isalpha(c)) continue;
    if (!seen) {
      if (!std::isupper(c)) return false;
      seen = true;
    } else if (std::isupper(c)) {
      return false;
    }
  }
  return seen;
}

bool is_upper(std::string_view w) {
  bool any = false;
  for (unsigned char c : w) {
    if (!std::isalpha(c)) continue;
    if (!std::isupper(c)) return false;
    any = true;
  }
  return any;
}

const char* flag(bool b) { return b ? "true" : "false"; }

}  // namespace

FeatureVector extract_features(const Sentence& sentence, std::size_t index, const FeatureConfig& config) {
  if (index >= sentence.size()) throw ShapeError("feature index out of range");
  std::vector<std::string> keys;
  const Token& tok = sentence.tokens[index];
  std::string w = lower(tok.text);

  keys.emplace_back("bias");
  keys.push_back("word=" + w);
  for (std::size_t n : config.suffix_lengths) keys.push_back("suffix" + std::to_string(n) + "=" + utf8_suffix(w, n));
  keys.push_back(std::string("isdigit=") + flag(is_digit(tok.text)));
  keys.push_back(std::string("istitle=") + flag(is_title(tok.text)));
  keys.push_back(std::string("isupper=") + flag(is_upper(tok.text)));
  if (config.use_pos && tok.pos) keys.push_back("pos=" + *tok.pos);

  if (index == 0) {
    keys.emplace_back("bos=true");
  } else {
    const Token& prev = sentence.tokens[index - 1];
    std::string pw = lower(prev.text);
    keys.push_back("prev_word=" + pw);
    keys.push_back(std::string("prev_isdigit=") + flag(is_digit(prev.text)));
    keys.push_back(std::string("prev_istitle=") + flag(is_title(prev.text)));
    for (std::size_t n : config.suffix_lengths)
      keys.push_back("prev_suffix" + std::to_string(n) + "=" + utf8_suffix(pw, n));
    if (config.use_pos && prev.pos) keys.push_back("prev_pos=" + *prev.pos);
  }
  if (index + 1 == sentence.size()) keys.emplace_back("eos=true");

  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  FeatureVector out;
  out.reserve(keys.size());
  for (auto& k : keys) out.emplace_back(std::move(k), 1.0);
  return out;
}

Matrix emissions_from_features(std::span<const FeatureVector> features, const ClassicModel& model) {
  std::size_t L = model.num_labels();
  Matrix em(features.size(), L);
  for (std::size_t t = 0; t < features.size(); ++t)
    for (const auto& [key, value] : features[t]) {
      auto it = model.weights.find(key);
      if (it == model.weights.end()) continue;
      for (std::size_t l = 0; l < L; ++l) em(t, l) += value * it->second[l];
    }
  return em;
}

ClassicObjective::ClassicObjective(const Dataset& dataset, const LabelSchema& schema, double lambda,
                                   const FeatureConfig& features)
    : lambda_(lambda), features_(features), num_labels_(schema.num_labels(LabelSpace::fine)) {
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& s : dataset.sentences) {
    if (!s.fg_tags) throw ConfigError("sentence '" + s.id + "' has no gold tags");
    Item item;
    for (std::size_t i = 0; i < s.size(); ++i) {
      std::vector<std::pair<std::size_t, double>> ids;
      for (auto& [key, value] : extract_features(s, i, features_)) {
        auto [it, inserted] = index.emplace(key, feature_names_.size());
        if (inserted) feature_names_.push_back(key);
        ids.emplace_back(it->second, value);
      }
      item.tokens.push_back(std::move(ids));
      item.gold.push_back(schema.index_of((*s.fg_tags)[i], LabelSpace::fine));
    }
    sentences_.push_back(std::move(item));
  }
}

std::size_t ClassicObjective::num_params() const {
  std::size_t L = num_labels_;
  return feature_names_.size() * L + L * L + 2 * L;
}

double ClassicObjective::value_and_gradient(std::span<const double> theta, std::span<double> grad,
                                            std::span<const std::size_t> subset) const {
  std::size_t L = num_labels_, F = feature_names_.size();
  if (theta.size() != num_params()) throw ShapeError("parameter vector has the wrong size");
  bool want_grad = !grad.empty();
  if (want_grad && grad.size() != theta.size()) throw ShapeError("gradient vector has the wrong size");
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  CrfParams crf = CrfParams::zeros(L);
  std::copy_n(theta.begin() + F * L, L * L, crf.transitions.values().begin());
  std::copy_n(theta.begin() + F * L + L * L, L, crf.start.begin());
  std::copy_n(theta.begin() + F * L + L * L + L, L, crf.end.begin());

  std::vector<std::size_t> all;
  if (subset.empty()) {
    all.resize(sentences_.size());
    std::iota(all.begin(), all.end(), 0);
    subset = all;
  }

  double total = 0.0;
  for (std::size_t idx : subset) {
    const Item& item = sentences_.at(idx);
    Matrix em(item.tokens.size(), L);
    for (std::size_t t = 0; t < item.tokens.size(); ++t)
      for (auto [f, v] : item.tokens[t])
        for (std::size_t l = 0; l < L; ++l) em(t, l) += v * theta[f * L + l];
    if (!want_grad) {
      total += nll(em, item.gold, crf);
      continue;
    }
    CrfGradients g = nll_grad(em, item.gold, crf);
    total += g.nll;
    for (std::size_t t = 0; t < item.tokens.size(); ++t)
      for (auto [f, v] : item.tokens[t])
        for (std::size_t l = 0; l < L; ++l) grad[f * L + l] += v * g.emissions(t, l);
    auto tr = g.transitions.values();
    for (std::size_t i = 0; i < L * L; ++i) grad[F * L + i] += tr[i];
    for (std::size_t i = 0; i < L; ++i) {
      grad[F * L + L * L + i] += g.start[i];
      grad[F * L + L * L + L + i] += g.end[i];
    }
  }

  double frac = static_cast<double>(subset.size()) / static_cast<double>(std::max<std::size_t>(1, sentences_.size()));
  double reg = lambda_ * frac;
  double sq = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    sq += theta[i] * theta[i];
    if (want_grad) grad[i] += 2.0 * reg * theta[i];
  }
  return total + reg * sq;
}

double ClassicObjective::value(std::span<const double> theta) const {
  return value_and_gradient(theta, {});
}

ClassicModel ClassicObjective::to_model(std::span<const double> theta, const LabelSchema& schema) const {
  std::size_t L = num_labels_, F = feature_names_.size();
  ClassicModel m;
  m.labels = schema.labels(LabelSpace::fine);
  m.lambda = lambda_;
  m.features = features_;
  m.crf = CrfParams::zeros(L);
  for (std::size_t f = 0; f < F; ++f)
    m.weights.emplace(feature_names_[f], std::vector<double>(theta.begin() + f * L, theta.begin() + (f + 1) * L));
  std::copy_n(theta.begin() + F * L, L * L, m.crf.transitions.values().begin());
  std::copy_n(theta.begin() + F * L + L * L, L, m.crf.start.begin());
  std::copy_n(theta.begin() + F * L + L * L + L, L, m.crf.end.begin());
  return m;
}

ClassicTrainResult train_classic(const Dataset& dataset, const LabelSchema& schema,
                                 const ClassicTrainOptions& options) {
  if (dataset.empty()) throw ConfigError("cannot train on an empty dataset");
  if (!(options.lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(options.learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  ClassicObjective objective(dataset, schema, options.lambda, options.features);
  std::vector<double> theta(objective.num_params(), 0.0), grad(theta.size());

  ClassicTrainResult result;
  Rng rng(derive_seed(options.seed, "classic"));
  std::vector<std::size_t> order(objective.num_sentences());
  std::iota(order.begin(), order.end(), 0);
  auto step = [&](double lr) {
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];
  };

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    if (options.batch_size == 0 || options.batch_size >= order.size()) {
      result.objective.push_back(objective.value_and_gradient(theta, grad));
      step(options.learning_rate);
    } else {
      result.objective.push_back(objective.value(theta));
      shuffle(order, rng);
      for (std::size_t b = 0; b < order.size(); b += options.batch_size) {
        std::span<const std::size_t> batch(order.data() + b, std::min(options.batch_size, order.size() - b));
        objective.value_and_gradient(theta, grad, batch);
        step(options.learning_rate);
      }
    }
    if (!std::isfinite(result.objective.back()))
      throw NumericError("classic CRF objective diverged at epoch " + std::to_string(epoch));
  }
  result.objective.push_back(objective.value(theta));
  result.model = objective.to_model(theta, schema);
  return result;
}

Dataset predict_classic(const ClassicModel& model, const Dataset& dataset) {
  Dataset out = dataset;
  for (auto& s : out.sentences) {
    std::vector<FeatureVector> feats;
    for (std::size_t i = 0; i < s.size(); ++i) feats.push_back(extract_features(s, i, model.features));
    std::vector<std::string> tags;
    if (!feats.empty()) {
      auto path = viterbi(emissions_from_features(feats, model), model.crf).path;
      for (int y : path) tags.push_back(model.labels.at(static_cast<std::size_t>(y)));
    }
    s.fg_tags = std::move(tags);
  }
  return out;
}

void ClassicModel::save(const std::filesystem::path& path) const {
  nlohmann::json w = nlohmann::json::object();
  for (const auto& [key, values] : weights) {
    nlohmann::json row = nlohmann::json::object();
    for (std::size_t l = 0; l < values.size(); ++l)
      if (values[l] != 0.0) row[labels[l]] = values[l];
    if (!row.empty()) w[key] = std::move(row);
  }
  std::vector<std::vector<double>> trans(num_labels());
  for (std::size_t i = 0; i < num_labels(); ++i)
    trans[i].assign(crf.transitions.row(i).begin(), crf.transitions.row(i).end());
  nlohmann::json j{{"format", "nerkit-classic"},
                   {"version", 1},
                   {"labels", labels},
                   {"lambda", lambda},
                   {"features", {{"suffix_lengths", features.suffix_lengths}, {"use_pos", features.use_pos}}},
                   {"crf", {{"transitions", trans}, {"start", crf.start}, {"end", crf.end}}},
                   {"weights", std::move(w)}};
  write_file(path, j.dump(1) + "\n");
}

ClassicModel ClassicModel::load(const std::filesystem::path& path) {
  ClassicModel m;
  try {
    auto j = nlohmann::json::parse(read_file(path));
    if (j.at("format") != "nerkit-classic" || j.at("version") != 1)
      throw FormatError("not a version-1 classic model file", 0);
    m.labels = j.at("labels").get<std::vector<std::string>>();
    m.lambda = j.at("lambda").get<double>();
    m.features.suffix_lengths = j.at("features").at("suffix_lengths").get<std::vector<std::size_t>>();
    m.features.use_pos = j.at("features").at("use_pos").get<bool>();
    std::size_t L = m.labels.size();
    m.crf = CrfParams::zeros(L);
    auto trans = j.at("crf").at("transitions").get<std::vector<std::vector<double>>>();
    m.crf.start = j.at("crf").at("start").get<std::vector<double>>();
    m.crf.end = j.at("crf").at("end").get<std::vector<double>>();
    if (trans.size() != L || m.crf.start.size() != L || m.crf.end.size() != L)
      throw FormatError("CRF block does not match label count", 0);
    for (std::size_t i = 0; i < L; ++i) {
      if (trans[i].size() != L) throw FormatError("CRF transition row has wrong width", 0);
      std::copy(trans[i].begin(), trans[i].end(), m.crf.transitions.row(i).begin());
    }
    std::unordered_map<std::string, std::size_t> label_index;
    for (std::size_t l = 0; l < L; ++l) label_index[m.labels[l]] = l;
    for (const auto& [key, row] : j.at("weights").items()) {
      std::vector<double> v(L, 0.0);
      for (const auto& [label, value] : row.items()) {
        auto it = label_index.find(label);
        if (it == label_index.end()) throw FormatError("weight for unknown label " + label, 0);
        v[it->second] = value.get<double>();
      }
      m.weights.emplace(key, std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what(), 0);
  }
  return m;
}

}  // namespace nerkit
