#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "nerkit/corpus.hpp"
#include "nerkit/labels.hpp"

namespace nerkit {

enum class MacroOver { observed, schema };

MacroOver parse_macro_over(std::string_view name);

struct TypeScore {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  std::map<std::string, TypeScore> per_type;
  TypeScore micro;
  double macro_f1 = 0.0;
  /// Mention detection: spans matched on boundaries only.
  TypeScore mention;
  std::size_t gold_repairs = 0;
  std::size_t pred_repairs = 0;
};

struct ScoreOptions {
  MacroOver macro_over = MacroOver::observed;
  /// Required for MacroOver::schema.
  const LabelSchema* schema = nullptr;
};

/// Exact-match entity scoring. Sentences are paired by position and must
/// agree on id and length (ShapeError otherwise).
EvalReport score(const Dataset& gold, const Dataset& pred, const ScoreOptions& options = {});

/// Types with any gold or predicted mention, by F1 descending then name.
std::string per_tag_table(const EvalReport& report);
std::string per_tag_csv(const EvalReport& report);
std::string summary_text(const EvalReport& report);

}  // namespace nerkit
