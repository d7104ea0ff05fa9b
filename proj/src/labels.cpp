#include "nerkit/labels.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "nerkit/error.hpp"
#include "nerkit/util.hpp"

namespace nerkit {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> bio_labels(const std::vector<std::string>& types) {
  std::vector<std::string> labels{std::string(kOutside)};
  labels.reserve(2 * types.size() + 1);
  for (const auto& t : types) {
    labels.push_back("B-" + t);
    labels.push_back("I-" + t);
  }
  return labels;
}

void check_unique(const std::vector<std::string>& names, const char* what) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) throw SchemaError(std::string("empty name in ") + what);
    if (n == kOutside) throw SchemaError(std::string("'O' is reserved, found in ") + what);
    if (!seen.insert(n).second) throw SchemaError("duplicate " + std::string(what) + " entry: " + n);
  }
}

}  // namespace

LabelSchema::LabelSchema(std::vector<std::string> fine_types, std::vector<std::string> coarse_types,
                         std::map<std::string, std::string> fine_to_coarse)
    : fine_types_(std::move(fine_types)),
      coarse_types_(std::move(coarse_types)),
      fine_to_coarse_(std::move(fine_to_coarse)) {
  if (fine_types_.empty()) throw SchemaError("schema has no fine types");
  if (coarse_types_.empty()) throw SchemaError("schema has no coarse types");
  check_unique(fine_types_, "fine_types");
  check_unique(coarse_types_, "coarse_types");

  fine_labels_ = bio_labels(fine_types_);
  coarse_labels_ = bio_labels(coarse_types_);
  for (std::size_t i = 0; i < fine_labels_.size(); ++i) fine_index_[fine_labels_[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < coarse_labels_.size(); ++i)
    coarse_index_[coarse_labels_[i]] = static_cast<int>(i);

  std::unordered_map<std::string, int> coarse_pos;
  for (std::size_t i = 0; i < coarse_types_.size(); ++i) coarse_pos[coarse_types_[i]] = static_cast<int>(i);

  for (const auto& [fine, coarse] : fine_to_coarse_) {
    if (std::find(fine_types_.begin(), fine_types_.end(), fine) == fine_types_.end())
      throw SchemaError("fine_to_coarse names unknown fine type: " + fine);
  }
  fine_to_coarse_index_.assign(fine_labels_.size(), 0);
  for (std::size_t k = 0; k < fine_types_.size(); ++k) {
    const auto& fine = fine_types_[k];
    auto it = fine_to_coarse_.find(fine);
    if (it == fine_to_coarse_.end()) throw SchemaError("fine type has no coarse mapping: " + fine);
    auto c = coarse_pos.find(it->second);
    if (c == coarse_pos.end())
      throw SchemaError("fine type " + fine + " maps to unknown coarse type " + it->second);
    fine_to_coarse_index_[1 + 2 * k] = 1 + 2 * c->second;
    fine_to_coarse_index_[2 + 2 * k] = 2 + 2 * c->second;
    auto [slot, inserted] = fine_type_by_lower_.emplace(lower(fine), fine);
    if (!inserted) throw SchemaError("fine types differ only by case: " + fine + ", " + slot->second);
  }
}

LabelSchema LabelSchema::from_json(const nlohmann::json& j) {
  try {
    return LabelSchema(j.at("fine_types").get<std::vector<std::string>>(),
                       j.at("coarse_types").get<std::vector<std::string>>(),
                       j.at("fine_to_coarse").get<std::map<std::string, std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("invalid schema JSON: ") + e.what());
  }
}

LabelSchema LabelSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json LabelSchema::to_json() const {
  return {{"fine_types", fine_types_},
          {"coarse_types", coarse_types_},
          {"fine_to_coarse", fine_to_coarse_}};
}

std::string LabelSchema::fingerprint() const { return hex64(fnv1a64(to_json().dump())); }

const std::vector<std::string>& LabelSchema::types(LabelSpace space) const {
  return space == LabelSpace::fine ? fine_types_ : coarse_types_;
}

const std::vector<std::string>& LabelSchema::labels(LabelSpace space) const {
  return space == LabelSpace::fine ? fine_labels_ : coarse_labels_;
}

std::optional<int> LabelSchema::find(std::string_view tag, LabelSpace space) const {
  const auto& index = space == LabelSpace::fine ? fine_index_ : coarse_index_;
  auto it = index.find(std::string(tag));
  if (it == index.end()) return std::nullopt;
  return it->second;
}

int LabelSchema::index_of(std::string_view tag, LabelSpace space) const {
  if (auto i = find(tag, space)) return *i;
  throw SchemaError("tag not in " + std::string(space == LabelSpace::fine ? "fine" : "coarse") +
                    " label space: " + std::string(tag));
}

const std::string& LabelSchema::label(int index, LabelSpace space) const {
  const auto& l = labels(space);
  if (index < 0 || static_cast<std::size_t>(index) >= l.size())
    throw SchemaError("label index out of range: " + std::to_string(index));
  return l[static_cast<std::size_t>(index)];
}

bool LabelSchema::has_type(std::string_view type, LabelSpace space) const {
  const auto& t = types(space);
  return std::find(t.begin(), t.end(), type) != t.end();
}

const std::string& LabelSchema::coarse_of(std::string_view fine_type) const {
  auto it = fine_to_coarse_.find(std::string(fine_type));
  if (it == fine_to_coarse_.end()) throw SchemaError("no coarse type for: " + std::string(fine_type));
  return it->second;
}

int LabelSchema::project_to_coarse(int fine_index) const {
  if (fine_index < 0 || static_cast<std::size_t>(fine_index) >= fine_to_coarse_index_.size())
    throw SchemaError("fine label index out of range: " + std::to_string(fine_index));
  return fine_to_coarse_index_[static_cast<std::size_t>(fine_index)];
}

std::optional<std::string> LabelSchema::repair_tag(std::string_view raw) const {
  if (raw == "O" || raw == "o") return std::string(kOutside);
  if (raw.size() < 3 || raw[1] != '-') return std::nullopt;
  char prefix = static_cast<char>(std::toupper(static_cast<unsigned char>(raw[0])));
  if (prefix != 'B' && prefix != 'I') return std::nullopt;
  auto it = fine_type_by_lower_.find(lower(raw.substr(2)));
  if (it == fine_type_by_lower_.end()) return std::nullopt;
  return std::string(1, prefix) + "-" + it->second;
}

BioTag parse_bio(std::string_view tag) {
  if (tag == kOutside) return {'O', {}};
  if (tag.size() >= 3 && tag[1] == '-' && (tag[0] == 'B' || tag[0] == 'I'))
    return {tag[0], tag.substr(2)};
  throw SchemaError("not a BIO tag: '" + std::string(tag) + "'");
}

std::vector<std::string> bio_encode(std::span<const EntitySpan> spans, std::size_t length) {
  std::vector<std::string> tags(length, std::string(kOutside));
  std::vector<std::uint8_t> used(length, 0);
  for (const auto& s : spans) {
    if (s.start > s.end || s.end >= length)
      throw ShapeError("span [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                       "] outside sentence of length " + std::to_string(length));
    if (s.type.empty()) throw SchemaError("span without a type");
    for (std::size_t i = s.start; i <= s.end; ++i) {
      if (used[i]) throw ShapeError("overlapping spans at token " + std::to_string(i));
      used[i] = 1;
      tags[i] = (i == s.start ? "B-" : "I-") + s.type;
    }
  }
  return tags;
}

DecodedSpans bio_decode_counted(std::span<const std::string> tags) {
  DecodedSpans out;
  std::optional<EntitySpan> open;
  auto close = [&] {
    if (open) out.spans.push_back(std::move(*open));
    open.reset();
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    BioTag tag = parse_bio(tags[i]);
    if (tag.prefix == 'O') {
      close();
    } else if (tag.prefix == 'I' && open && open->type == tag.type) {
      open->end = i;
    } else {
      if (tag.prefix == 'I') ++out.repairs;
      close();
      open = EntitySpan{i, i, std::string(tag.type)};
    }
  }
  close();
  return out;
}

std::vector<EntitySpan> bio_decode(std::span<const std::string> tags) {
  return bio_decode_counted(tags).spans;
}

std::vector<std::string> derive_cg_tags(std::span<const std::string> fg_tags,
                                        const LabelSchema& schema) {
  std::vector<std::string> out;
  out.reserve(fg_tags.size());
  for (const auto& t : fg_tags) {
    BioTag tag = parse_bio(t);
    if (tag.prefix == 'O') {
      out.emplace_back(kOutside);
    } else {
      out.push_back(std::string(1, tag.prefix) + "-" + schema.coarse_of(tag.type));
    }
  }
  return out;
}

}  // namespace nerkit
