#include "nerkit/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "nerkit/error.hpp"

namespace nerkit {

namespace {

std::vector<std::string> split_columns(const std::string& line) {
  std::vector<std::string> cols;
  std::istringstream ss(line);
  std::string c;
  while (ss >> c) cols.push_back(std::move(c));
  return cols;
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

struct PendingLine {
  std::vector<std::string> columns;
  std::size_t line_no;
};

class BlockBuilder {
 public:
  BlockBuilder(const ConllOptions& options, const std::string& source)
      : options_(options), source_(source) {}

  void set_id(std::string id) { id_ = std::move(id); }
  bool empty() const { return lines_.empty(); }
  void add(std::vector<std::string> columns, std::size_t line_no) {
    lines_.push_back({std::move(columns), line_no});
  }

  void flush(Dataset& out) {
    if (lines_.empty()) {
      id_.reset();
      return;
    }
    bool has_tags = decide_tags();
    Sentence s;
    s.id = id_ ? *id_ : std::to_string(out.sentences.size());
    if (has_tags) s.fg_tags.emplace();
    for (auto& [cols, line_no] : lines_) {
      Token tok;
      tok.text = cols.front();
      std::size_t last_data = has_tags ? cols.size() - 1 : cols.size();
      if (options_.pos_column && *options_.pos_column > 0 && *options_.pos_column < last_data)
        tok.pos = cols[*options_.pos_column];
      s.tokens.push_back(std::move(tok));
      if (has_tags) s.fg_tags->push_back(canonical_tag(cols.back(), line_no));
    }
    out.sentences.push_back(std::move(s));
    lines_.clear();
    id_.reset();
  }

 private:
  bool decide_tags() const {
    switch (options_.tags) {
      case TagColumn::absent:
        return false;
      case TagColumn::present:
        for (const auto& l : lines_)
          if (l.columns.size() < 2) throw ParseError(source_, l.line_no, "missing tag column");
        return true;
      case TagColumn::detect:
        break;
    }
    bool single = lines_.front().columns.size() == 1;
    for (const auto& l : lines_) {
      if ((l.columns.size() == 1) != single)
        throw ParseError(source_, l.line_no, "inconsistent column count within sentence");
    }
    return !single;
  }

  std::string canonical_tag(const std::string& raw, std::size_t line_no) const {
    if (!options_.schema) return raw;
    if (auto fixed = options_.schema->repair_tag(raw)) return *fixed;
    throw SchemaError(source_ + ":" + std::to_string(line_no) + ": tag not in schema: " + raw);
  }

  const ConllOptions& options_;
  const std::string& source_;
  std::optional<std::string> id_;
  std::vector<PendingLine> lines_;
};

}  // namespace

Dataset parse_conll(std::istream& in, const ConllOptions& options, const std::string& source) {
  if (options.pos_column && *options.pos_column == 0)
    throw ConfigError("POS column cannot be the token column");
  Dataset out;
  BlockBuilder block(options, source);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) {
      block.flush(out);
      continue;
    }
    if (line.front() == '#' && block.empty()) {
      auto cols = split_columns(line);
      if (cols.size() >= 2 && cols[0] == "#" && cols[1] == "id") {
        if (cols.size() < 3) throw ParseError(source, line_no, "'# id' comment without a value");
        block.set_id(cols[2]);
      }
      continue;
    }
    auto cols = split_columns(line);
    if (cols.empty()) throw ParseError(source, line_no, "malformed line");
    block.add(std::move(cols), line_no);
  }
  block.flush(out);
  return out;
}

Dataset parse_conll(const std::filesystem::path& path, const ConllOptions& options) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return parse_conll(in, options, path.string());
}

void write_conll(std::ostream& out, const Dataset& dataset) {
  for (const auto& s : dataset.sentences) {
    out << "# id " << s.id << '\n';
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const auto& tok = s.tokens[i];
      out << tok.text;
      if (s.fg_tags) {
        out << ' ' << (tok.pos ? *tok.pos : "_") << " _ " << (*s.fg_tags)[i];
      } else if (tok.pos) {
        out << ' ' << *tok.pos;
      }
      out << '\n';
    }
    out << '\n';
  }
}

void write_conll(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_conll(out, dataset);
}

CorpusStats corpus_stats(const Dataset& dataset) {
  CorpusStats stats;
  stats.num_sentences = dataset.size();
  for (const auto& s : dataset.sentences) {
    stats.num_tokens += s.size();
    ++stats.length_histogram[(s.size() / kLengthBucketWidth) * kLengthBucketWidth];
    if (!s.fg_tags) continue;
    for (const auto& span : bio_decode(*s.fg_tags)) ++stats.tag_frequency[span.type];
  }
  return stats;
}

std::set<std::string> distinct_labels(const Dataset& dataset) {
  std::set<std::string> labels;
  for (const auto& s : dataset.sentences)
    if (s.fg_tags) labels.insert(s.fg_tags->begin(), s.fg_tags->end());
  return labels;
}

}  // namespace nerkit
