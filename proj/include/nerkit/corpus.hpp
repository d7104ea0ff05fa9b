#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nerkit/labels.hpp"

namespace nerkit {

struct Token {
  std::string text;
  std::optional<std::string> pos;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::string id;
  std::vector<Token> tokens;
  /// Gold or predicted fine-grained BIO tags, one per token.
  std::optional<std::vector<std::string>> fg_tags;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const Sentence&) const = default;
};

struct Dataset {
  std::vector<Sentence> sentences;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
};

enum class TagColumn { detect, present, absent };

struct ConllOptions {
  /// Zero-based column holding a part-of-speech tag. Never the first column.
  std::optional<std::size_t> pos_column;
  /// `detect`: a block whose lines carry two or more columns has a tag column.
  TagColumn tags = TagColumn::detect;
  /// When set, every tag is canonicalized against the fine label space.
  const LabelSchema* schema = nullptr;
};

/// Reads blank-line separated blocks of "token ... tag" lines. `# id <value>`
/// comment lines name the following sentence; other comments are skipped.
Dataset parse_conll(std::istream& in, const ConllOptions& options = {},
                    const std::string& source = "<stream>");
Dataset parse_conll(const std::filesystem::path& path, const ConllOptions& options = {});

/// Writes "# id" headers and "token pos _ tag" lines; pos becomes "_" when absent.
/// Tagless sentences write the token (and pos) only.
void write_conll(std::ostream& out, const Dataset& dataset);
void write_conll(const std::filesystem::path& path, const Dataset& dataset);

struct CorpusStats {
  std::size_t num_sentences = 0;
  std::size_t num_tokens = 0;
  /// Bucket lower bound (multiple of kLengthBucketWidth) -> sentence count.
  std::map<std::size_t, std::size_t> length_histogram;
  /// Fine entity type -> number of decoded mentions.
  std::map<std::string, std::size_t> tag_frequency;
};

inline constexpr std::size_t kLengthBucketWidth = 10;

CorpusStats corpus_stats(const Dataset& dataset);
std::set<std::string> distinct_labels(const Dataset& dataset);

}  // namespace nerkit
