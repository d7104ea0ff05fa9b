#include "nerkit/evaluation.hpp"

#include <algorithm>
#include <set>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "nerkit/error.hpp"

namespace nerkit {

namespace {

void finalize(TypeScore& s) {
  s.precision = s.tp + s.fp == 0 ? 0.0 : static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
  s.recall = s.tp + s.fn == 0 ? 0.0 : static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn);
  std::size_t d = 2 * s.tp + s.fp + s.fn;
  s.f1 = s.tp == 0 ? 0.0 : static_cast<double>(2 * s.tp) / static_cast<double>(d);
}

std::vector<std::pair<std::string, TypeScore>> ranked(const EvalReport& report) {
  std::vector<std::pair<std::string, TypeScore>> rows;
  for (const auto& [type, s] : report.per_type)
    if (s.tp + s.fp + s.fn > 0) rows.emplace_back(type, s);
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second.f1 != b.second.f1) return a.second.f1 > b.second.f1;
    return a.first < b.first;
  });
  return rows;
}

}  // namespace

MacroOver parse_macro_over(std::string_view name) {
  if (name == "observed") return MacroOver::observed;
  if (name == "schema") return MacroOver::schema;
  throw ConfigError("macro-over must be 'observed' or 'schema', got '" + std::string(name) + "'");
}

EvalReport score(const Dataset& gold, const Dataset& pred, const ScoreOptions& options) {
  if (gold.size() != pred.size())
    throw ShapeError("gold has " + std::to_string(gold.size()) + " sentences, predictions have " +
                     std::to_string(pred.size()));
  if (options.macro_over == MacroOver::schema && !options.schema)
    throw ConfigError("macro over schema types needs a schema");

  EvalReport r;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const Sentence& g = gold.sentences[i];
    const Sentence& p = pred.sentences[i];
    if (g.id != p.id) throw ShapeError("sentence " + std::to_string(i) + ": id '" + g.id + "' vs '" + p.id + "'");
    if (!g.fg_tags || !p.fg_tags) throw ShapeError("sentence '" + g.id + "' lacks tags");
    if (g.fg_tags->size() != p.fg_tags->size())
      throw ShapeError("sentence '" + g.id + "' length differs between gold and predictions");

    auto gd = bio_decode_counted(*g.fg_tags);
    auto pd = bio_decode_counted(*p.fg_tags);
    r.gold_repairs += gd.repairs;
    r.pred_repairs += pd.repairs;

    std::set<EntitySpan> gs(gd.spans.begin(), gd.spans.end());
    std::set<EntitySpan> ps(pd.spans.begin(), pd.spans.end());
    std::set<std::pair<std::size_t, std::size_t>> gb, pb;
    for (const auto& s : gs) {
      gb.emplace(s.start, s.end);
      auto& t = r.per_type[s.type];
      if (ps.count(s)) ++t.tp;
      else ++t.fn;
    }
    for (const auto& s : ps) {
      pb.emplace(s.start, s.end);
      if (!gs.count(s)) ++r.per_type[s.type].fp;
    }
    for (const auto& b : gb) {
      if (pb.count(b)) ++r.mention.tp;
      else ++r.mention.fn;
    }
    for (const auto& b : pb)
      if (!gb.count(b)) ++r.mention.fp;
  }

  for (auto& [type, s] : r.per_type) {
    finalize(s);
    r.micro.tp += s.tp;
    r.micro.fp += s.fp;
    r.micro.fn += s.fn;
  }
  finalize(r.micro);
  finalize(r.mention);

  double sum = 0.0;
  std::size_t n = 0;
  if (options.macro_over == MacroOver::observed) {
    for (const auto& [type, s] : r.per_type) {
      sum += s.f1;
      ++n;
    }
  } else {
    std::set<std::string> types(options.schema->types(LabelSpace::fine).begin(),
                                options.schema->types(LabelSpace::fine).end());
    for (const auto& [type, s] : r.per_type) types.insert(type);
    for (const auto& type : types) {
      auto it = r.per_type.find(type);
      if (it != r.per_type.end()) sum += it->second.f1;
    }
    n = types.size();
  }
  r.macro_f1 = n == 0 ? 0.0 : sum / static_cast<double>(n);
  return r;
}

std::string per_tag_table(const EvalReport& report) {
  std::string out = fmt::format("{:<28}{:>7}{:>7}{:>7}{:>11}{:>9}{:>9}\n", "type", "tp", "fp", "fn",
                                "precision", "recall", "f1");
  for (const auto& [type, s] : ranked(report))
    out += fmt::format("{:<28}{:>7}{:>7}{:>7}{:>11.4f}{:>9.4f}{:>9.4f}\n", type, s.tp, s.fp, s.fn,
                       s.precision, s.recall, s.f1);
  return out;
}

std::string per_tag_csv(const EvalReport& report) {
  std::string out = "type,tp,fp,fn,precision,recall,f1\n";
  for (const auto& [type, s] : ranked(report))
    out += fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f}\n", type, s.tp, s.fp, s.fn, s.precision,
                       s.recall, s.f1);
  return out;
}

std::string summary_text(const EvalReport& r) {
  return fmt::format(
      "micro@P  {:.4f}\nmicro@R  {:.4f}\nmicro@F1 {:.4f}\nmacro@F1 {:.4f}\n"
      "MD@P     {:.4f}\nMD@R     {:.4f}\nMD@F1    {:.4f}\n"
      "gold repairs {}\npred repairs {}\n",
      r.micro.precision, r.micro.recall, r.micro.f1, r.macro_f1, r.mention.precision,
      r.mention.recall, r.mention.f1, r.gold_repairs, r.pred_repairs);
}

}  // namespace nerkit
