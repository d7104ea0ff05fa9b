#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nerkit/corpus.hpp"
#include "nerkit/embeddings.hpp"
#include "nerkit/labels.hpp"

namespace nerkit {

/// Toy corpora with a learnable structure, for tests and ablations.
///
/// Each entity type owns a small vocabulary of words; filler words are shared.
/// Entities are 1-3 tokens long and never adjacent, so the BIO segmentation
/// is recoverable from word identity plus left context.
struct SyntheticCorpusOptions {
  std::size_t num_sentences = 50;
  std::uint64_t seed = 7;
  /// Empty: the first fine type of each coarse group.
  std::vector<std::string> types;
  std::size_t min_length = 4;
  std::size_t max_length = 16;
  std::size_t max_entities = 3;
  std::size_t words_per_type = 6;
  std::size_t filler_words = 40;
  /// Probability that an entity word is drawn from another type of the same
  /// coarse group, so only context can resolve it.
  double ambiguity = 0.0;
  std::string id_prefix = "synth";
};

Dataset make_synthetic_corpus(const LabelSchema& schema, const SyntheticCorpusOptions& options);

/// Fixed random embeddings: every word type gets a vector per layer drawn from
/// a stream seeded by (seed, word, layer); deeper layers share a common base.
std::vector<EmbeddingSequence> make_synthetic_embeddings(const Dataset& dataset, std::size_t dim,
                                                         std::size_t num_layers,
                                                         std::uint64_t seed);

}  // namespace nerkit
