#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "nerkit/error.hpp"
#include "nerkit/training.hpp"

// Checkpoint layout (little-endian):
//   "NERKCKPT" | u32 version | u32 meta_len | meta JSON
//   u32 block_count | blocks: u32 name_len | name | u64 count | count x f64
// Blocks follow for_each_param order.

namespace nerkit {

namespace {

constexpr char kMagic[8] = {'N', 'E', 'R', 'K', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class T>
T to_le(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    v = std::bit_cast<T>(bytes);
  }
  return v;
}

template <class T>
void put(std::ostream& out, T v) {
  v = to_le(v);
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.write(b, sizeof(T));
}

class Input {
 public:
  explicit Input(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw FormatError("cannot open checkpoint " + path.string(), 0);
  }
  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw FormatError("truncated checkpoint", offset_ + static_cast<std::size_t>(in_.gcount()));
    offset_ += n;
  }
  template <class T>
  T get() {
    char b[sizeof(T)];
    bytes(b, sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return to_le(v);
  }
  std::size_t offset() const { return offset_; }

 private:
  std::ifstream in_;
  std::size_t offset_ = 0;
};

}  // namespace

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  nlohmann::json meta{{"config", config.to_json()},
                      {"schema_fingerprint", schema_fingerprint},
                      {"epoch", epoch},
                      {"scale", scale},
                      {"embedding_dim", embedding_dim},
                      {"fg_labels", params.head.fg_projection.out_width()},
                      {"cg_labels", params.head.cg_projection ? params.head.cg_projection->out_width() : 0},
                      {"input_width", params.head.bilstm ? params.head.bilstm->forward.input_weight.cols()
                                                         : params.head.fg_projection.in_width()}};
  std::string m = meta.dump();
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.size()));
  out.write(m.data(), static_cast<std::streamsize>(m.size()));

  std::uint32_t blocks = 0;
  for_each_param(params, [&](const std::string&, std::string_view, std::span<const double>) { ++blocks; });
  put<std::uint32_t>(out, blocks);
  for_each_param(params, [&](const std::string& name, std::string_view, std::span<const double> v) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(out, v.size());
    for (double x : v) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
  });
  if (!out) throw Error("write failed: " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  Input in(path);
  char magic[8];
  in.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw FormatError("not a checkpoint file", 0);
  auto version = in.get<std::uint32_t>();
  if (version != kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version), 8);
  auto meta_len = in.get<std::uint32_t>();
  std::size_t meta_offset = in.offset();
  if (meta_len > (1u << 24)) throw FormatError("implausible metadata length", meta_offset - 4);
  std::string m(meta_len, '\0');
  in.bytes(m.data(), meta_len);

  Checkpoint ck;
  std::size_t input_width = 0, fg_labels = 0, cg_labels = 0;
  try {
    auto meta = nlohmann::json::parse(m);
    ck.config = TrainConfig::from_json(meta.at("config"));
    ck.schema_fingerprint = meta.at("schema_fingerprint").get<std::string>();
    ck.epoch = meta.at("epoch").get<std::size_t>();
    ck.scale = meta.at("scale").get<double>();
    ck.embedding_dim = meta.at("embedding_dim").get<std::size_t>();
    fg_labels = meta.at("fg_labels").get<std::size_t>();
    cg_labels = meta.at("cg_labels").get<std::size_t>();
    input_width = meta.at("input_width").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid checkpoint metadata: ") + e.what(), meta_offset);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid checkpoint config: ") + e.what(), meta_offset);
  }
  // Projection input width is stored, so undo blending to recover the per-token width.
  std::size_t raw_width = input_width;
  if (ck.config.head.blend == BlendMode::concat) raw_width = input_width / 3;
  ck.params = init_model(ck.config.head, raw_width, fg_labels, cg_labels, 0);

  auto blocks = in.get<std::uint32_t>();
  std::uint32_t expected = 0;
  for_each_param(ck.params, [&](const std::string&, std::string_view, std::span<double>) { ++expected; });
  if (blocks != expected)
    throw FormatError("checkpoint has " + std::to_string(blocks) + " parameter blocks, config implies " +
                          std::to_string(expected),
                      in.offset() - 4);
  for_each_param(ck.params, [&](const std::string& name, std::string_view, std::span<double> v) {
    std::size_t at = in.offset();
    auto len = in.get<std::uint32_t>();
    if (len > 4096) throw FormatError("implausible block name length", at);
    std::string stored(len, '\0');
    in.bytes(stored.data(), len);
    auto count = in.get<std::uint64_t>();
    if (stored != name || count != v.size())
      throw FormatError("parameter block '" + stored + "' does not match expected '" + name + "'", at);
    for (double& x : v) x = std::bit_cast<double>(in.get<std::uint64_t>());
  });
  return ck;
}

}  // namespace nerkit
