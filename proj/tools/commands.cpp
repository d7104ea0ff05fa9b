#include "commands.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <json.hpp>

#include "nerkit/classic.hpp"
#include "nerkit/corpus.hpp"
#include "nerkit/embeddings.hpp"
#include "nerkit/error.hpp"
#include "nerkit/evaluation.hpp"
#include "nerkit/synthetic.hpp"
#include "nerkit/training.hpp"
#include "nerkit/util.hpp"

#ifndef NERKIT_DEFAULT_SCHEMA
#define NERKIT_DEFAULT_SCHEMA "data/multiconer2_schema.json"
#endif

namespace nerkit::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Everything needed to repeat a run; written as manifest.json in the output directory.
class RunManifest {
 public:
  RunManifest(std::string command, const std::vector<std::string>& args)
      : command_(std::move(command)), args_(args), started_(std::chrono::system_clock::now()),
        clock_(std::chrono::steady_clock::now()) {}

  void set_config(json config) { config_ = std::move(config); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void add_input(const fs::path& p) { inputs_.push_back(p); }
  void add_output(const fs::path& p) { outputs_.push_back(p); }

  void write(const fs::path& dir) const {
    json inputs = json::array();
    for (const auto& p : inputs_) inputs.push_back({{"path", p.string()}, {"fnv1a64", file_fingerprint(p)}});
    json outputs = json::array();
    for (const auto& p : outputs_) outputs.push_back(p.string());
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_).count();
    json m{{"tool", "nerkit"},
           {"version", kToolVersion},
           {"command", command_},
           {"args", args_},
           {"config", config_},
           {"inputs", inputs},
           {"outputs", outputs},
           {"started_at", fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(started_)))},
           {"wall_clock_seconds", wall}};
    if (seed_) m["seed"] = *seed_;
    write_file(dir / "manifest.json", m.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  std::chrono::system_clock::time_point started_;
  std::chrono::steady_clock::time_point clock_;
  json config_ = json::object();
  std::optional<std::uint64_t> seed_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
};

LabelSchema load_schema(const std::string& path) {
  return LabelSchema::load(path.empty() ? fs::path(NERKIT_DEFAULT_SCHEMA) : fs::path(path));
}

fs::path schema_path(const std::string& path) {
  return path.empty() ? fs::path(NERKIT_DEFAULT_SCHEMA) : fs::path(path);
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

// ---------------------------------------------------------------- eda

struct EdaArgs {
  std::vector<std::string> corpora;
  std::string schema;
  std::string out;
  std::optional<std::size_t> pos_column;
};

int cmd_eda(const EdaArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest manifest("eda", argv);
  LabelSchema schema = load_schema(a.schema);
  manifest.add_input(schema_path(a.schema));
  ConllOptions opts;
  opts.schema = &schema;
  opts.pos_column = a.pos_column;

  Dataset all;
  for (const auto& path : a.corpora) {
    Dataset d = parse_conll(fs::path(path), opts);
    out << "corpus " << path << ": " << d.size() << " sentences\n";
    manifest.add_input(path);
    for (auto& s : d.sentences) all.sentences.push_back(std::move(s));
  }
  CorpusStats stats = corpus_stats(all);
  auto labels = distinct_labels(all);
  out << "sentences: " << stats.num_sentences << "\n";
  out << "tokens: " << stats.num_tokens << "\n";
  out << "distinct BIO labels: " << labels.size() << " (of " << schema.num_labels(LabelSpace::fine)
      << " in schema)\n";
  out << "sentence length histogram (bucket width " << kLengthBucketWidth << "):\n";
  for (const auto& [lo, n] : stats.length_histogram)
    out << fmt::format("  [{},{}) {}\n", lo, lo + kLengthBucketWidth, n);

  std::vector<std::pair<std::string, std::size_t>> tags(stats.tag_frequency.begin(), stats.tag_frequency.end());
  std::stable_sort(tags.begin(), tags.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
  out << "entity mentions by type:\n";
  for (const auto& [type, n] : tags) out << fmt::format("  {:<28}{}\n", type, n);

  if (!a.out.empty()) {
    fs::path dir = ensure_dir(a.out);
    std::string s = "metric,value\n";
    s += fmt::format("sentences,{}\ntokens,{}\ndistinct_bio_labels,{}\n", stats.num_sentences, stats.num_tokens,
                     labels.size());
    write_file(dir / "stats.csv", s);
    std::string h = "bucket_start,bucket_end,count\n";
    for (const auto& [lo, n] : stats.length_histogram) h += fmt::format("{},{},{}\n", lo, lo + kLengthBucketWidth, n);
    write_file(dir / "length_histogram.csv", h);
    std::string t = "type,mentions\n";
    for (const auto& [type, n] : tags) t += fmt::format("{},{}\n", type, n);
    write_file(dir / "tag_frequency.csv", t);
    std::string l;
    for (const auto& x : labels) l += x + "\n";
    write_file(dir / "distinct_labels.txt", l);
    for (const char* f : {"stats.csv", "length_histogram.csv", "tag_frequency.csv", "distinct_labels.txt"})
      manifest.add_output(dir / f);
    manifest.write(dir);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- train / predict / eval

struct TrainArgs {
  std::string corpus, embeddings, schema, config, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> pos_column;
};

TrainConfig load_train_config(const std::string& path, std::optional<std::uint64_t> seed) {
  TrainConfig cfg = path.empty() ? TrainConfig{} : TrainConfig::load(path);
  if (seed) cfg.seed = *seed;
  return cfg;
}

int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest manifest("train", argv);
  LabelSchema schema = load_schema(a.schema);
  TrainConfig cfg = load_train_config(a.config, a.seed);
  ConllOptions opts;
  opts.schema = &schema;
  opts.pos_column = a.pos_column;
  Dataset data = parse_conll(fs::path(a.corpus), opts);
  EmbeddingTable table = EmbeddingTable::load(a.embeddings);

  TrainResult result = train(data, table, schema, cfg);
  fs::path dir = ensure_dir(a.out);
  result.checkpoint.save(dir / "checkpoint.bin");
  write_file(dir / "train_log.csv", format_log_csv(result.log, cfg.head.has_aux()));

  const EpochLog& last = result.log.back();
  out << fmt::format("trained {} epochs on {} sentences; final combined loss {:.6f}, train micro-F1 {:.4f}\n",
                     result.log.size(), data.size(), last.combined_loss, last.train_micro_f1);
  manifest.set_config(cfg.to_json());
  manifest.set_seed(cfg.seed);
  for (const auto& p : {schema_path(a.schema), fs::path(a.corpus), fs::path(a.embeddings)}) manifest.add_input(p);
  if (!a.config.empty()) manifest.add_input(a.config);
  manifest.add_output(dir / "checkpoint.bin");
  manifest.add_output(dir / "train_log.csv");
  manifest.write(dir);
  return kExitOk;
}

struct PredictArgs {
  std::string checkpoint, corpus, embeddings, schema, out;
  std::optional<std::size_t> pos_column;
};

int cmd_predict(const PredictArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest manifest("predict", argv);
  LabelSchema schema = load_schema(a.schema);
  Checkpoint ck = Checkpoint::load(a.checkpoint);
  ConllOptions opts;
  opts.schema = &schema;
  opts.pos_column = a.pos_column;
  Dataset data = parse_conll(fs::path(a.corpus), opts);
  Dataset pred = predict(ck, data, EmbeddingTable::load(a.embeddings), schema);

  fs::path dir = ensure_dir(a.out);
  write_conll(dir / "predictions.conll", pred);
  out << "wrote " << pred.size() << " tagged sentences to " << (dir / "predictions.conll").string() << "\n";
  bool gold = !data.empty() && std::all_of(data.sentences.begin(), data.sentences.end(),
                                           [](const Sentence& s) { return s.fg_tags.has_value(); });
  if (gold) out << summary_text(score(data, pred));

  manifest.set_config(ck.config.to_json());
  manifest.set_seed(ck.config.seed);
  for (const auto& p : {schema_path(a.schema), fs::path(a.checkpoint), fs::path(a.corpus), fs::path(a.embeddings)})
    manifest.add_input(p);
  manifest.add_output(dir / "predictions.conll");
  manifest.write(dir);
  return kExitOk;
}

struct EvalArgs {
  std::string gold, pred, schema, out;
  std::string macro_over = "observed";
};

int cmd_eval(const EvalArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest manifest("eval", argv);
  LabelSchema schema = load_schema(a.schema);
  ConllOptions opts;
  opts.schema = &schema;
  Dataset gold = parse_conll(fs::path(a.gold), opts);
  Dataset pred = parse_conll(fs::path(a.pred), opts);
  ScoreOptions so;
  so.macro_over = parse_macro_over(a.macro_over);
  so.schema = &schema;
  EvalReport report = score(gold, pred, so);
  out << summary_text(report) << "\n" << per_tag_table(report);
  if (!a.out.empty()) {
    fs::path dir = ensure_dir(a.out);
    write_file(dir / "report.txt", summary_text(report) + "\n" + per_tag_table(report));
    write_file(dir / "per_type.csv", per_tag_csv(report));
    std::string summary = fmt::format(
        "metric,value\nmicro_p,{:.6f}\nmicro_r,{:.6f}\nmicro_f1,{:.6f}\nmacro_f1,{:.6f}\nmd_p,{:.6f}\nmd_r,{:.6f}\n"
        "md_f1,{:.6f}\npred_repairs,{}\n",
        report.micro.precision, report.micro.recall, report.micro.f1, report.macro_f1, report.mention.precision,
        report.mention.recall, report.mention.f1, report.pred_repairs);
    write_file(dir / "summary.csv", summary);
    manifest.set_config({{"macro_over", a.macro_over}});
    for (const auto& p : {schema_path(a.schema), fs::path(a.gold), fs::path(a.pred)}) manifest.add_input(p);
    for (const char* f : {"report.txt", "per_type.csv", "summary.csv"}) manifest.add_output(dir / f);
    manifest.write(dir);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- ablate

struct AblateArgs {
  std::string config, corpus, embeddings, dev_corpus, dev_embeddings, schema, out;
  std::optional<std::uint64_t> seed;
};

std::string loss_kind(const HeadConfig& h) {
  std::string main = h.fg_uses_crf() ? "CRF loss" : "masked CE";
  switch (h.aux_kind) {
    case AuxKind::none: return main;
    case AuxKind::linear_ce: return main + " + decaying CE aux";
    case AuxKind::crf: return main + " + decaying CRF aux";
  }
  return main;
}

std::string lr_split(const TrainConfig& c) {
  std::vector<std::string> parts;
  for (const auto& [group, m] : c.lr_multipliers)
    if (m != 1.0) parts.push_back(fmt::format("{}x{:g}", group, m));
  return parts.empty() ? "No" : join(parts, " ");
}

int cmd_ablate(const AblateArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  RunManifest manifest("ablate", argv);
  LabelSchema schema = load_schema(a.schema);
  json grid;
  try {
    grid = json::parse(read_file(a.config));
  } catch (const json::exception& e) {
    throw ConfigError(a.config + ": " + e.what());
  }
  if (!grid.contains("rows") || !grid["rows"].is_array()) throw ConfigError("grid config needs a \"rows\" array");
  json base = grid.value("base", json::object());
  if (a.seed) base["seed"] = *a.seed;

  ConllOptions opts;
  opts.schema = &schema;
  Dataset train_data = parse_conll(fs::path(a.corpus), opts);
  EmbeddingTable train_emb = EmbeddingTable::load(a.embeddings);
  bool separate_dev = !a.dev_corpus.empty();
  if (separate_dev != !a.dev_embeddings.empty())
    throw ConfigError("--dev-corpus and --dev-embeddings must be given together");
  Dataset dev_data = separate_dev ? parse_conll(fs::path(a.dev_corpus), opts) : train_data;
  EmbeddingTable dev_emb = separate_dev ? EmbeddingTable::load(a.dev_embeddings) : train_emb;

  fs::path dir = ensure_dir(a.out);
  std::string csv = "config,head,blend,aux,loss,sep_lr,emb_layers,dev_micro_f1,dev_macro_f1\n";
  std::size_t failures = 0;
  for (const auto& row : grid["rows"]) {
    std::string id = row.contains("id") ? (row["id"].is_string() ? row["id"].get<std::string>() : row["id"].dump())
                                        : std::to_string(&row - &grid["rows"][0] + 1);
    std::string head_desc = row.value("head_kind", std::string("?"));
    std::string blend_desc = row.value("blend", std::string("none"));
    std::string aux_desc = row.value("aux_kind", std::string("none"));
    std::string loss_desc = "?", lr_desc = "?", layers_desc = "?";
    try {
      json cfg_json = base;
      json head = cfg_json.value("head", json::object());
      for (const char* key : {"head_kind", "blend", "aux_kind", "bilstm_hidden", "dropout_p"})
        if (row.contains(key)) head[key] = row[key];
      if (row.contains("layers_k")) head["input_layers_k"] = row["layers_k"];
      cfg_json["head"] = head;
      for (const char* key : {"lr_multipliers", "epochs", "batch_size", "base_lr", "constrained_decode"})
        if (row.contains(key)) cfg_json[key] = row[key];
      TrainConfig cfg = TrainConfig::from_json(cfg_json);
      loss_desc = loss_kind(cfg.head);
      lr_desc = lr_split(cfg);
      layers_desc = fmt::format("last {}", cfg.head.input_layers_k);

      TrainResult result = train(train_data, train_emb, schema, cfg);
      Dataset pred = predict(result.checkpoint, dev_data, dev_emb, schema);
      EvalReport report = score(dev_data, pred);
      fs::path row_dir = dir / "rows" / id;
      fs::create_directories(row_dir);
      write_file(row_dir / "train_log.csv", format_log_csv(result.log, cfg.head.has_aux()));
      write_conll(row_dir / "predictions.conll", pred);
      csv += fmt::format("{},{},{},{},{},{},{},{:.4f},{:.4f}\n", id, head_desc, blend_desc, aux_desc, loss_desc,
                         lr_desc, layers_desc, report.micro.f1, report.macro_f1);
      out << fmt::format("row {}: micro-F1 {:.4f} macro-F1 {:.4f}\n", id, report.micro.f1, report.macro_f1);
    } catch (const std::exception& e) {
      ++failures;
      err << "warning: ablation row " << id << " failed: " << e.what() << "\n";
      csv += fmt::format("{},{},{},{},{},{},{},FAILED,FAILED\n", id, head_desc, blend_desc, aux_desc, loss_desc,
                         lr_desc, layers_desc);
    }
  }
  write_file(dir / "ablation.csv", csv);
  out << csv;
  if (failures) err << "warning: " << failures << " ablation row(s) failed\n";

  manifest.set_config(grid);
  if (a.seed) manifest.set_seed(*a.seed);
  for (const auto& p : {schema_path(a.schema), fs::path(a.config), fs::path(a.corpus), fs::path(a.embeddings)})
    manifest.add_input(p);
  if (separate_dev) {
    manifest.add_input(a.dev_corpus);
    manifest.add_input(a.dev_embeddings);
  }
  manifest.add_output(dir / "ablation.csv");
  manifest.write(dir);
  return kExitOk;
}

// ---------------------------------------------------------------- synth / classic / check

struct SynthArgs {
  std::string schema, out;
  std::size_t sentences = 50;
  std::uint64_t seed = 7;
  std::size_t dim = 16;
  std::size_t layers = 3;
  double ambiguity = 0.0;
  std::string types;
  std::string prefix = "synth";
};

int cmd_synth(const SynthArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest manifest("synth", argv);
  LabelSchema schema = load_schema(a.schema);
  SyntheticCorpusOptions o;
  o.num_sentences = a.sentences;
  o.seed = a.seed;
  o.ambiguity = a.ambiguity;
  o.id_prefix = a.prefix;
  if (!a.types.empty()) {
    std::stringstream ss(a.types);
    std::string t;
    while (std::getline(ss, t, ',')) o.types.push_back(t);
  }
  Dataset d = make_synthetic_corpus(schema, o);
  auto emb = make_synthetic_embeddings(d, a.dim, a.layers, a.seed);
  fs::path dir = ensure_dir(a.out);
  write_conll(dir / "corpus.conll", d);
  write_embeddings({1, a.dim, a.layers, "f32"}, emb, dir / "embeddings.seqemb");
  out << "wrote " << d.size() << " sentences and " << a.layers << "x" << a.dim << " embeddings to " << dir.string()
      << "\n";
  manifest.set_seed(a.seed);
  manifest.set_config({{"sentences", a.sentences}, {"dim", a.dim}, {"layers", a.layers}, {"ambiguity", a.ambiguity},
                       {"types", o.types}, {"prefix", a.prefix}});
  manifest.add_input(schema_path(a.schema));
  manifest.add_output(dir / "corpus.conll");
  manifest.add_output(dir / "embeddings.seqemb");
  manifest.write(dir);
  return kExitOk;
}

struct ClassicTrainArgs {
  std::string corpus, schema, out;
  double lambda = 0.1;
  std::size_t epochs = 100;
  double lr = 0.01;
  std::uint64_t seed = 0;
  std::size_t batch_size = 0;
  std::optional<std::size_t> pos_column;
};

int cmd_classic_train(const ClassicTrainArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest manifest("classic-train", argv);
  LabelSchema schema = load_schema(a.schema);
  ConllOptions opts;
  opts.schema = &schema;
  opts.pos_column = a.pos_column;
  Dataset d = parse_conll(fs::path(a.corpus), opts);
  ClassicTrainOptions o;
  o.lambda = a.lambda;
  o.epochs = a.epochs;
  o.learning_rate = a.lr;
  o.seed = a.seed;
  o.batch_size = a.batch_size;
  ClassicTrainResult r = train_classic(d, schema, o);
  fs::path dir = ensure_dir(a.out);
  r.model.save(dir / "classic_model.json");
  std::string trace = "epoch,objective\n";
  for (std::size_t i = 0; i < r.objective.size(); ++i) trace += fmt::format("{},{:.10g}\n", i, r.objective[i]);
  write_file(dir / "objective.csv", trace);
  EvalReport rep = score(d, predict_classic(r.model, d));
  out << fmt::format("final objective {:.6f}; train micro-F1 {:.4f} macro-F1 {:.4f}\n", r.objective.back(),
                     rep.micro.f1, rep.macro_f1);
  manifest.set_seed(a.seed);
  manifest.set_config({{"lambda", a.lambda}, {"epochs", a.epochs}, {"lr", a.lr}, {"batch_size", a.batch_size}});
  manifest.add_input(schema_path(a.schema));
  manifest.add_input(a.corpus);
  manifest.add_output(dir / "classic_model.json");
  manifest.add_output(dir / "objective.csv");
  manifest.write(dir);
  return kExitOk;
}

struct ClassicPredictArgs {
  std::string model, corpus, schema, out;
  std::optional<std::size_t> pos_column;
};

int cmd_classic_predict(const ClassicPredictArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest manifest("classic-predict", argv);
  LabelSchema schema = load_schema(a.schema);
  ConllOptions opts;
  opts.schema = &schema;
  opts.pos_column = a.pos_column;
  Dataset d = parse_conll(fs::path(a.corpus), opts);
  ClassicModel model = ClassicModel::load(a.model);
  if (model.labels != schema.labels(LabelSpace::fine))
    throw SchemaError("classic model labels do not match the schema");
  Dataset pred = predict_classic(model, d);
  fs::path dir = ensure_dir(a.out);
  write_conll(dir / "predictions.conll", pred);
  out << "wrote " << pred.size() << " tagged sentences\n";
  manifest.add_input(schema_path(a.schema));
  manifest.add_input(a.model);
  manifest.add_input(a.corpus);
  manifest.add_output(dir / "predictions.conll");
  manifest.write(dir);
  return kExitOk;
}

struct CheckArgs {
  std::string corpus, embeddings;
};

int cmd_check(const CheckArgs& a, std::ostream& out) {
  Dataset d = parse_conll(fs::path(a.corpus), {});
  EmbeddingTable table = EmbeddingTable::load(a.embeddings);
  AlignmentReport r = validate_alignment(d, table);
  out << fmt::format("corpus sentences {}, embedding records {}, layers {}, dim {}\n", d.size(), table.size(),
                     table.header().num_layers, table.header().dim);
  out << r.describe();
  return r.ok() ? kExitOk : kExitData;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"nerkit: sequence-labeling heads over precomputed encoder embeddings", "nerkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  const std::string schema_help = "Label schema JSON (defaults to the bundled MultiCoNER II schema)";

  EdaArgs eda;
  auto* eda_cmd = app.add_subcommand("eda", "Corpus statistics: sentence counts, length histogram, label inventory");
  eda_cmd->add_option("--corpus", eda.corpora, "CoNLL file(s); repeat to pool several splits")->required();
  eda_cmd->add_option("--schema", eda.schema, schema_help);
  eda_cmd->add_option("--out", eda.out, "Directory for CSV tables and the run manifest");
  eda_cmd->add_option("--pos-column", eda.pos_column, "Zero-based column holding POS tags");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a head on a corpus and its embeddings");
  train_cmd->add_option("--corpus", tr.corpus, "Training CoNLL file")->required();
  train_cmd->add_option("--embeddings", tr.embeddings, "SEQEMB01 embeddings for the corpus")->required();
  train_cmd->add_option("--schema", tr.schema, schema_help);
  train_cmd->add_option("--config", tr.config, "Training config JSON (see docs/formats.md)");
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->add_option("--seed", tr.seed, "Override the config seed");
  train_cmd->add_option("--pos-column", tr.pos_column, "Zero-based column holding POS tags");

  PredictArgs pr;
  auto* predict_cmd = app.add_subcommand("predict", "Tag a corpus with a trained checkpoint");
  predict_cmd->add_option("--checkpoint", pr.checkpoint, "checkpoint.bin written by train")->required();
  predict_cmd->add_option("--corpus", pr.corpus, "CoNLL file to tag")->required();
  predict_cmd->add_option("--embeddings", pr.embeddings, "SEQEMB01 embeddings for the corpus")->required();
  predict_cmd->add_option("--schema", pr.schema, schema_help);
  predict_cmd->add_option("--out", pr.out, "Output directory")->required();
  predict_cmd->add_option("--pos-column", pr.pos_column, "Zero-based column holding POS tags");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Entity-level scores of predictions against gold tags");
  eval_cmd->add_option("--gold", ev.gold, "Gold CoNLL file")->required();
  eval_cmd->add_option("--pred", ev.pred, "Predicted CoNLL file")->required();
  eval_cmd->add_option("--schema", ev.schema, schema_help);
  eval_cmd->add_option("--macro-over", ev.macro_over, "Types averaged by macro-F1: observed or schema");
  eval_cmd->add_option("--out", ev.out, "Directory for report files and the run manifest");

  AblateArgs ab;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and score every row of an ablation grid");
  ablate_cmd->add_option("--config", ab.config, "Grid JSON with \"base\" and \"rows\"")->required();
  ablate_cmd->add_option("--corpus", ab.corpus, "Training CoNLL file")->required();
  ablate_cmd->add_option("--embeddings", ab.embeddings, "Training embeddings")->required();
  ablate_cmd->add_option("--dev-corpus", ab.dev_corpus, "Held-out CoNLL file (default: score on training data)");
  ablate_cmd->add_option("--dev-embeddings", ab.dev_embeddings, "Held-out embeddings");
  ablate_cmd->add_option("--schema", ab.schema, schema_help);
  ablate_cmd->add_option("--out", ab.out, "Output directory")->required();
  ablate_cmd->add_option("--seed", ab.seed, "Override the grid seed");

  SynthArgs sy;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic corpus with fixed random embeddings");
  synth_cmd->add_option("--schema", sy.schema, schema_help);
  synth_cmd->add_option("--out", sy.out, "Output directory")->required();
  synth_cmd->add_option("--sentences", sy.sentences, "Number of sentences");
  synth_cmd->add_option("--seed", sy.seed, "Generator seed");
  synth_cmd->add_option("--dim", sy.dim, "Embedding width per layer");
  synth_cmd->add_option("--layers", sy.layers, "Stored layers per token");
  synth_cmd->add_option("--ambiguity", sy.ambiguity, "Share of entities that need a context cue");
  synth_cmd->add_option("--types", sy.types, "Comma-separated fine types to use");
  synth_cmd->add_option("--prefix", sy.prefix, "Sentence id prefix");

  ClassicTrainArgs ct;
  auto* ctrain_cmd = app.add_subcommand("classic-train", "Train the feature-based CRF baseline");
  ctrain_cmd->add_option("--corpus", ct.corpus, "Training CoNLL file")->required();
  ctrain_cmd->add_option("--schema", ct.schema, schema_help);
  ctrain_cmd->add_option("--out", ct.out, "Output directory")->required();
  ctrain_cmd->add_option("--lambda", ct.lambda, "L2 strength");
  ctrain_cmd->add_option("--epochs", ct.epochs, "Gradient-descent epochs");
  ctrain_cmd->add_option("--lr", ct.lr, "Learning rate");
  ctrain_cmd->add_option("--seed", ct.seed, "Shuffle seed (minibatch mode)");
  ctrain_cmd->add_option("--batch-size", ct.batch_size, "Sentences per step; 0 = full batch");
  ctrain_cmd->add_option("--pos-column", ct.pos_column, "Zero-based column holding POS tags");

  ClassicPredictArgs cp;
  auto* cpredict_cmd = app.add_subcommand("classic-predict", "Tag a corpus with the feature-based CRF");
  cpredict_cmd->add_option("--model", cp.model, "classic_model.json")->required();
  cpredict_cmd->add_option("--corpus", cp.corpus, "CoNLL file to tag")->required();
  cpredict_cmd->add_option("--schema", cp.schema, schema_help);
  cpredict_cmd->add_option("--out", cp.out, "Output directory")->required();
  cpredict_cmd->add_option("--pos-column", cp.pos_column, "Zero-based column holding POS tags");

  CheckArgs ck;
  auto* check_cmd = app.add_subcommand("check-embeddings", "Verify ids and token counts between corpus and embeddings");
  check_cmd->add_option("--corpus", ck.corpus, "CoNLL file")->required();
  check_cmd->add_option("--embeddings", ck.embeddings, "SEQEMB01 file")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*eda_cmd) return cmd_eda(eda, args, out);
    if (*train_cmd) return cmd_train(tr, args, out);
    if (*predict_cmd) return cmd_predict(pr, args, out);
    if (*eval_cmd) return cmd_eval(ev, args, out);
    if (*ablate_cmd) return cmd_ablate(ab, args, out, err);
    if (*synth_cmd) return cmd_synth(sy, args, out);
    if (*ctrain_cmd) return cmd_classic_train(ct, args, out);
    if (*cpredict_cmd) return cmd_classic_predict(cp, args, out);
    if (*check_cmd) return cmd_check(ck, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace nerkit::cli
