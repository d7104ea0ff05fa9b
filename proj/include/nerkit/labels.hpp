#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace nerkit {

enum class LabelSpace { fine, coarse };

inline constexpr std::string_view kOutside = "O";

/// Inclusive token range [start, end] carrying an entity type.
struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string type;

  auto operator<=>(const EntitySpan&) const = default;
};

/// Two-level entity taxonomy and the BIO label spaces derived from it.
///
/// Label index layout, identical in both spaces: 0 is "O"; type k (in
/// declaration order) owns B-k at 1 + 2k and I-k at 2 + 2k.
class LabelSchema {
 public:
  LabelSchema(std::vector<std::string> fine_types, std::vector<std::string> coarse_types,
              std::map<std::string, std::string> fine_to_coarse);

  /// Accepts {"fine_types": [...], "coarse_types": [...], "fine_to_coarse": {...}}.
  static LabelSchema from_json(const nlohmann::json& j);
  static LabelSchema load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Stable hash of the canonical JSON form, hex encoded.
  std::string fingerprint() const;

  const std::vector<std::string>& types(LabelSpace space) const;
  const std::vector<std::string>& labels(LabelSpace space) const;
  std::size_t num_labels(LabelSpace space) const { return labels(space).size(); }

  std::optional<int> find(std::string_view tag, LabelSpace space) const;
  /// Throws SchemaError for tags outside the space.
  int index_of(std::string_view tag, LabelSpace space) const;
  const std::string& label(int index, LabelSpace space) const;

  bool has_type(std::string_view type, LabelSpace space) const;
  /// Throws SchemaError when `fine_type` is not mapped.
  const std::string& coarse_of(std::string_view fine_type) const;
  /// Fine label index -> coarse label index with the B/I prefix preserved.
  int project_to_coarse(int fine_index) const;

  /// Canonical fine-space spelling of a raw tag: prefix and type are matched
  /// case-insensitively. Empty when the tag cannot be mapped.
  std::optional<std::string> repair_tag(std::string_view raw) const;

 private:
  std::vector<std::string> fine_types_;
  std::vector<std::string> coarse_types_;
  std::map<std::string, std::string> fine_to_coarse_;
  std::vector<std::string> fine_labels_;
  std::vector<std::string> coarse_labels_;
  std::unordered_map<std::string, int> fine_index_;
  std::unordered_map<std::string, int> coarse_index_;
  std::unordered_map<std::string, std::string> fine_type_by_lower_;
  std::vector<int> fine_to_coarse_index_;
};

/// Components of a BIO tag. `prefix` is 'O', 'B' or 'I'.
struct BioTag {
  char prefix = 'O';
  std::string_view type;
};

/// Throws SchemaError for strings that are not O, B-<type> or I-<type>.
BioTag parse_bio(std::string_view tag);

/// B-type on the first token of each span, I-type on the rest, O elsewhere.
/// Throws on overlapping or out-of-range spans.
std::vector<std::string> bio_encode(std::span<const EntitySpan> spans, std::size_t length);

struct DecodedSpans {
  std::vector<EntitySpan> spans;
  /// Number of I-X tags that did not continue an X span and were read as B-X.
  std::size_t repairs = 0;
};

/// Extracts spans, treating an I-X that does not continue an open X span as B-X.
DecodedSpans bio_decode_counted(std::span<const std::string> tags);
std::vector<EntitySpan> bio_decode(std::span<const std::string> tags);

/// Replaces each fine type by its coarse type, keeping B-/I- prefixes.
std::vector<std::string> derive_cg_tags(std::span<const std::string> fg_tags,
                                        const LabelSchema& schema);

}  // namespace nerkit
