#include "nerkit/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "nerkit/error.hpp"
#include "nerkit/util.hpp"

namespace nerkit {

namespace {

std::string word_stem(std::string_view type) {
  std::string out;
  for (unsigned char c : type)
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  return out.empty() ? "ent" : out;
}

std::vector<std::string> default_types(const LabelSchema& schema) {
  std::vector<std::string> out;
  std::set<std::string> groups;
  for (const auto& t : schema.types(LabelSpace::fine))
    if (groups.insert(schema.coarse_of(t)).second) out.push_back(t);
  return out;
}

}  // namespace

Dataset make_synthetic_corpus(const LabelSchema& schema, const SyntheticCorpusOptions& o) {
  if (o.min_length < 1 || o.max_length < o.min_length) throw ConfigError("invalid synthetic length range");
  if (o.words_per_type < 1 || o.filler_words < 1) throw ConfigError("synthetic vocabularies must be non-empty");
  std::vector<std::string> types = o.types.empty() ? default_types(schema) : o.types;
  for (const auto& t : types)
    if (!schema.has_type(t, LabelSpace::fine)) throw SchemaError("synthetic type not in schema: " + t);

  Rng rng(derive_seed(o.seed, "synthetic-corpus"));
  auto entity_word = [&](const std::string& type) {
    return word_stem(type) + std::to_string(uniform_index(rng, o.words_per_type));
  };
  auto filler = [&] { return "w" + std::to_string(uniform_index(rng, o.filler_words)); };

  Dataset out;
  for (std::size_t n = 0; n < o.num_sentences; ++n) {
    Sentence s;
    s.id = fmt::format("{}-{:05}", o.id_prefix, n);
    s.fg_tags.emplace();
    std::size_t length = o.min_length + uniform_index(rng, o.max_length - o.min_length + 1);
    std::size_t entities_left = 1 + uniform_index(rng, o.max_entities);
    bool prev_entity = false;
    while (s.size() < length) {
      std::size_t room = length - s.size();
      if (entities_left > 0 && !prev_entity && uniform01(rng) < 0.35) {
        const std::string& type = types[uniform_index(rng, types.size())];
        bool ambiguous = o.ambiguity > 0.0 && uniform01(rng) < o.ambiguity && room >= 2;
        if (ambiguous) {
          s.tokens.push_back({word_stem(type) + "cue", std::nullopt});
          s.fg_tags->emplace_back(kOutside);
          --room;
        }
        std::size_t len = std::min<std::size_t>(room, 1 + uniform_index(rng, 3));
        for (std::size_t k = 0; k < len; ++k) {
          std::string word = ambiguous ? "shared" + std::to_string(uniform_index(rng, o.words_per_type))
                                       : entity_word(type);
          s.tokens.push_back({std::move(word), std::nullopt});
          s.fg_tags->push_back((k == 0 ? "B-" : "I-") + type);
        }
        --entities_left;
        prev_entity = true;
      } else {
        s.tokens.push_back({filler(), std::nullopt});
        s.fg_tags->emplace_back(kOutside);
        prev_entity = false;
      }
    }
    out.sentences.push_back(std::move(s));
  }
  return out;
}

std::vector<EmbeddingSequence> make_synthetic_embeddings(const Dataset& dataset, std::size_t dim,
                                                         std::size_t num_layers, std::uint64_t seed) {
  if (dim < 1 || num_layers < 1) throw ConfigError("synthetic embeddings need dim, layers >= 1");
  std::unordered_map<std::string, std::vector<float>> cache;
  auto word_vectors = [&](const std::string& word) -> const std::vector<float>& {
    auto it = cache.find(word);
    if (it != cache.end()) return it->second;
    std::vector<float> v(num_layers * dim);
    Rng base_rng(derive_seed(seed, word, 0));
    std::vector<double> base(dim);
    for (auto& b : base) b = uniform(base_rng, -1.0, 1.0);
    for (std::size_t l = 0; l < num_layers; ++l) {
      Rng layer_rng(derive_seed(seed, word, l + 1));
      for (std::size_t d = 0; d < dim; ++d)
        v[l * dim + d] = static_cast<float>(base[d] + 0.5 * uniform(layer_rng, -1.0, 1.0));
    }
    return cache.emplace(word, std::move(v)).first->second;
  };

  std::vector<EmbeddingSequence> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.sentences) {
    EmbeddingSequence e(s.id, s.size(), num_layers, dim);
    for (std::size_t t = 0; t < s.size(); ++t) {
      const auto& v = word_vectors(s.tokens[t].text);
      std::copy(v.begin(), v.end(), e.values.begin() + static_cast<std::ptrdiff_t>(t * num_layers * dim));
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace nerkit
