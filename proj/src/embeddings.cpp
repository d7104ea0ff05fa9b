#include "nerkit/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nerkit/error.hpp"

namespace nerkit {

namespace {

constexpr std::uint32_t kMaxIdLength = 1u << 20;

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  v = to_le(v);
  char b[4];
  std::memcpy(b, &v, 4);
  out.write(b, 4);
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw ShapeError(std::string(what) + " does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

void check_sequence(const EmbeddingHeader& header, const EmbeddingSequence& seq) {
  if (seq.dim != header.dim || seq.num_layers != header.num_layers)
    throw ShapeError("sequence '" + seq.sentence_id + "' has " + std::to_string(seq.num_layers) +
                     " layers of width " + std::to_string(seq.dim) + ", header expects " +
                     std::to_string(header.num_layers) + " x " + std::to_string(header.dim));
  if (seq.num_tokens == 0) throw ShapeError("sequence '" + seq.sentence_id + "' has no tokens");
  if (seq.values.size() != seq.num_tokens * seq.num_layers * seq.dim)
    throw ShapeError("sequence '" + seq.sentence_id + "' value count does not match its shape");
  for (float v : seq.values)
    if (!std::isfinite(v)) throw ShapeError("sequence '" + seq.sentence_id + "' has non-finite values");
}

}  // namespace

std::string EmbeddingHeader::to_json_bytes() const {
  std::ostringstream ss;
  ss << "{\"version\":" << version << ",\"dim\":" << dim << ",\"num_layers\":" << num_layers
     << ",\"dtype\":\"" << dtype << "\"}";
  return ss.str();
}

void EmbeddingHeader::validate() const {
  if (version != 1) throw ShapeError("unsupported embedding format version " + std::to_string(version));
  if (dtype != "f32") throw ShapeError("unsupported dtype " + dtype);
  if (dim < 1) throw ShapeError("embedding dim must be >= 1");
  if (num_layers < 1) throw ShapeError("num_layers must be >= 1");
}

EmbeddingWriter::EmbeddingWriter(const std::filesystem::path& path, const EmbeddingHeader& header)
    : path_(path), header_(header), out_(path, std::ios::binary | std::ios::trunc) {
  header_.validate();
  if (!out_) throw Error("cannot write " + path.string());
  std::string json = header_.to_json_bytes();
  out_.write(kEmbeddingMagic, sizeof kEmbeddingMagic);
  put_u32(out_, checked_u32(json.size(), "header"));
  out_.write(json.data(), static_cast<std::streamsize>(json.size()));
}

void EmbeddingWriter::write(const EmbeddingSequence& seq) {
  check_sequence(header_, seq);
  put_u32(out_, checked_u32(seq.sentence_id.size(), "sentence id length"));
  out_.write(seq.sentence_id.data(), static_cast<std::streamsize>(seq.sentence_id.size()));
  put_u32(out_, checked_u32(seq.num_tokens, "token count"));
  for (float v : seq.values) {
    auto bits = to_le(std::bit_cast<std::uint32_t>(v));
    char b[4];
    std::memcpy(b, &bits, 4);
    out_.write(b, 4);
  }
  if (!out_) throw Error("write failed: " + path_.string());
}

void EmbeddingWriter::close() {
  out_.close();
  if (out_.fail()) throw Error("close failed: " + path_.string());
}

EmbeddingReader::EmbeddingReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary) {
  if (!in_) throw FormatError("cannot open " + path.string(), 0);
  std::error_code ec;
  file_size_ = static_cast<std::size_t>(std::filesystem::file_size(path, ec));
  if (ec) file_size_ = 0;
  char magic[8];
  read_exact(magic, sizeof magic, "magic");
  if (std::memcmp(magic, kEmbeddingMagic, sizeof magic) != 0) throw FormatError("bad magic", 0);
  std::uint32_t len = read_u32("header length");
  std::size_t header_offset = offset_;
  if (len > kMaxIdLength) throw FormatError("implausible header length", header_offset - 4);
  std::string json(len, '\0');
  read_exact(json.data(), len, "header");
  try {
    auto j = nlohmann::json::parse(json);
    header_.version = j.at("version").get<int>();
    header_.dim = j.at("dim").get<std::size_t>();
    header_.num_layers = j.at("num_layers").get<std::size_t>();
    header_.dtype = j.at("dtype").get<std::string>();
    header_.validate();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid header: ") + e.what(), header_offset);
  } catch (const ShapeError& e) {
    throw FormatError(std::string("invalid header: ") + e.what(), header_offset);
  }
}

void EmbeddingReader::read_exact(char* dst, std::size_t n, const char* what) {
  in_.read(dst, static_cast<std::streamsize>(n));
  auto got = static_cast<std::size_t>(in_.gcount());
  if (got != n)
    throw FormatError(std::string("truncated file while reading ") + what, offset_ + got);
  offset_ += n;
}

std::uint32_t EmbeddingReader::read_u32(const char* what) {
  char b[4];
  read_exact(b, 4, what);
  std::uint32_t v;
  std::memcpy(&v, b, 4);
  return to_le(v);
}

std::optional<EmbeddingSequence> EmbeddingReader::next() {
  if (in_.peek() == std::char_traits<char>::eof()) return std::nullopt;
  std::size_t record_offset = offset_;
  std::uint32_t id_len = read_u32("id length");
  if (id_len > kMaxIdLength) throw FormatError("implausible id length", record_offset);
  std::string id(id_len, '\0');
  read_exact(id.data(), id_len, "sentence id");
  std::size_t count_offset = offset_;
  std::uint32_t tokens = read_u32("token count");
  if (tokens == 0) throw FormatError("record '" + id + "' has zero tokens", count_offset);

  std::size_t n = std::size_t{tokens} * header_.num_layers * header_.dim;
  if (file_size_ > 0 && n * 4 > file_size_ - offset_)
    throw FormatError("truncated file while reading values", file_size_);
  EmbeddingSequence seq(std::move(id), tokens, header_.num_layers, header_.dim);
  std::vector<char> raw(n * 4);
  read_exact(raw.data(), raw.size(), "values");
  std::size_t values_offset = offset_ - raw.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, raw.data() + 4 * i, 4);
    float v = std::bit_cast<float>(to_le(bits));
    if (!std::isfinite(v))
      throw FormatError("non-finite value in record '" + seq.sentence_id + "'", values_offset + 4 * i);
    seq.values[i] = v;
  }
  return seq;
}

void write_embeddings(const EmbeddingHeader& header, std::span<const EmbeddingSequence> sequences,
                      const std::filesystem::path& path) {
  for (const auto& s : sequences) check_sequence(header, s);
  EmbeddingWriter writer(path, header);
  for (const auto& s : sequences) writer.write(s);
  writer.close();
}

std::pair<EmbeddingHeader, std::vector<EmbeddingSequence>> read_embeddings(
    const std::filesystem::path& path) {
  EmbeddingReader reader(path);
  std::vector<EmbeddingSequence> out;
  while (auto s = reader.next()) out.push_back(std::move(*s));
  return {reader.header(), std::move(out)};
}

Matrix concat_layers(const EmbeddingSequence& seq, std::size_t k) {
  if (k == 0 || k > seq.num_layers)
    throw ShapeError("cannot take the last " + std::to_string(k) + " of " +
                     std::to_string(seq.num_layers) + " stored layers");
  Matrix out(seq.num_tokens, k * seq.dim);
  std::size_t first = seq.num_layers - k;
  for (std::size_t t = 0; t < seq.num_tokens; ++t)
    for (std::size_t l = 0; l < k; ++l) {
      auto v = seq.vector(t, first + l);
      for (std::size_t d = 0; d < seq.dim; ++d) out(t, l * seq.dim + d) = v[d];
    }
  return out;
}

EmbeddingTable::EmbeddingTable(EmbeddingHeader header, std::vector<EmbeddingSequence> sequences)
    : header_(std::move(header)), sequences_(std::move(sequences)) {
  for (std::size_t i = 0; i < sequences_.size(); ++i) {
    if (!index_.emplace(sequences_[i].sentence_id, i).second)
      duplicates_.push_back(sequences_[i].sentence_id);
  }
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  auto [header, seqs] = read_embeddings(path);
  return EmbeddingTable(std::move(header), std::move(seqs));
}

const EmbeddingSequence* EmbeddingTable::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &sequences_[it->second];
}

const EmbeddingSequence& EmbeddingTable::at(const std::string& id) const {
  if (const auto* s = find(id)) return *s;
  throw AlignmentError("no embeddings for sentence '" + id + "'");
}

std::string AlignmentReport::describe() const {
  std::ostringstream ss;
  if (ok()) {
    ss << "alignment OK\n";
    return ss.str();
  }
  for (const auto& id : missing) ss << "missing embeddings: " << id << '\n';
  for (const auto& id : unexpected) ss << "not in corpus: " << id << '\n';
  for (const auto& id : duplicates) ss << "duplicate id: " << id << '\n';
  for (const auto& m : length_mismatches)
    ss << "token count mismatch: " << m.id << " (expected " << m.expected << ", found " << m.found
       << ")\n";
  return ss.str();
}

AlignmentReport validate_alignment(const Dataset& dataset, const EmbeddingTable& table) {
  AlignmentReport report;
  report.duplicates = table.duplicate_ids();
  std::set<std::string> corpus_ids;
  for (const auto& s : dataset.sentences) {
    if (!corpus_ids.insert(s.id).second) {
      report.duplicates.push_back(s.id);
      continue;
    }
    const auto* e = table.find(s.id);
    if (!e) {
      report.missing.push_back(s.id);
    } else if (e->num_tokens != s.size()) {
      report.length_mismatches.push_back({s.id, s.size(), e->num_tokens});
    }
  }
  for (const auto& e : table.sequences())
    if (!corpus_ids.count(e.sentence_id)) report.unexpected.push_back(e.sentence_id);
  return report;
}

AlignmentReport validate_alignment(const Dataset& dataset, const std::filesystem::path& path) {
  return validate_alignment(dataset, EmbeddingTable::load(path));
}

}  // namespace nerkit
