#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nerkit/corpus.hpp"
#include "nerkit/matrix.hpp"

namespace nerkit {

// SEQEMB01 interchange format, all integers and floats little-endian:
//
//   "SEQEMB01" | u32 header_len | header JSON (UTF-8)
//   repeated: u32 id_len | id bytes | u32 num_tokens | num_tokens*L*D f32
//
// Values are token-major, then layer, then dimension. Layers are stored in
// ascending encoder depth, so the last k stored layers are the k deepest.

inline constexpr char kEmbeddingMagic[8] = {'S', 'E', 'Q', 'E', 'M', 'B', '0', '1'};

struct EmbeddingHeader {
  int version = 1;
  std::size_t dim = 0;
  std::size_t num_layers = 0;
  std::string dtype = "f32";

  bool operator==(const EmbeddingHeader&) const = default;
  /// Exact header bytes: {"version":1,"dim":D,"num_layers":L,"dtype":"f32"}.
  std::string to_json_bytes() const;
  void validate() const;
};

struct EmbeddingSequence {
  std::string sentence_id;
  std::size_t num_tokens = 0;
  std::size_t num_layers = 0;
  std::size_t dim = 0;
  std::vector<float> values;

  EmbeddingSequence() = default;
  EmbeddingSequence(std::string id, std::size_t tokens, std::size_t layers, std::size_t width)
      : sentence_id(std::move(id)), num_tokens(tokens), num_layers(layers), dim(width),
        values(tokens * layers * width, 0.0f) {}

  float& at(std::size_t token, std::size_t layer, std::size_t d) {
    return values[(token * num_layers + layer) * dim + d];
  }
  float at(std::size_t token, std::size_t layer, std::size_t d) const {
    return values[(token * num_layers + layer) * dim + d];
  }
  std::span<const float> vector(std::size_t token, std::size_t layer) const {
    return {values.data() + (token * num_layers + layer) * dim, dim};
  }

  bool operator==(const EmbeddingSequence&) const = default;
};

class EmbeddingWriter {
 public:
  EmbeddingWriter(const std::filesystem::path& path, const EmbeddingHeader& header);
  /// Throws ShapeError when the sequence does not match the header.
  void write(const EmbeddingSequence& sequence);
  void close();

 private:
  std::filesystem::path path_;
  EmbeddingHeader header_;
  std::ofstream out_;
};

/// Streaming reader; each record is validated (shape, finiteness) as it is read.
class EmbeddingReader {
 public:
  explicit EmbeddingReader(const std::filesystem::path& path);
  const EmbeddingHeader& header() const { return header_; }
  /// Next record, or empty at a clean end of file. Throws FormatError otherwise.
  std::optional<EmbeddingSequence> next();

 private:
  void read_exact(char* dst, std::size_t n, const char* what);
  std::uint32_t read_u32(const char* what);

  std::ifstream in_;
  std::size_t offset_ = 0;
  std::size_t file_size_ = 0;
  EmbeddingHeader header_;
};

void write_embeddings(const EmbeddingHeader& header, std::span<const EmbeddingSequence> sequences,
                      const std::filesystem::path& path);
std::pair<EmbeddingHeader, std::vector<EmbeddingSequence>> read_embeddings(
    const std::filesystem::path& path);

/// Per-token concatenation of the last k stored layers, in stored order:
/// a T x (k * dim) matrix.
Matrix concat_layers(const EmbeddingSequence& sequence, std::size_t k);

/// Whole file indexed by sentence id.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(EmbeddingHeader header, std::vector<EmbeddingSequence> sequences);
  static EmbeddingTable load(const std::filesystem::path& path);

  const EmbeddingHeader& header() const { return header_; }
  std::size_t size() const { return sequences_.size(); }
  const EmbeddingSequence* find(const std::string& id) const;
  /// Throws AlignmentError when absent.
  const EmbeddingSequence& at(const std::string& id) const;
  std::span<const EmbeddingSequence> sequences() const { return sequences_; }
  /// Ids seen more than once in the file; only the first record is indexed.
  const std::vector<std::string>& duplicate_ids() const { return duplicates_; }

 private:
  EmbeddingHeader header_;
  std::vector<EmbeddingSequence> sequences_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> duplicates_;
};

struct LengthMismatch {
  std::string id;
  std::size_t expected = 0;
  std::size_t found = 0;
  bool operator==(const LengthMismatch&) const = default;
};

struct AlignmentReport {
  std::vector<std::string> missing;      // in corpus, absent from embeddings
  std::vector<std::string> unexpected;   // in embeddings, absent from corpus
  std::vector<std::string> duplicates;   // repeated ids in either input
  std::vector<LengthMismatch> length_mismatches;

  bool ok() const {
    return missing.empty() && unexpected.empty() && duplicates.empty() &&
           length_mismatches.empty();
  }
  std::string describe() const;
};

AlignmentReport validate_alignment(const Dataset& dataset, const EmbeddingTable& table);
/// Reads the file and reports; format errors still throw.
AlignmentReport validate_alignment(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace nerkit
