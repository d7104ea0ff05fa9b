// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any gating criterion fails.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "commands.hpp"
#include "head_loss.hpp"
#include "nerkit/classic.hpp"
#include "nerkit/corpus.hpp"
#include "nerkit/embeddings.hpp"
#include "nerkit/error.hpp"
#include "nerkit/evaluation.hpp"
#include "nerkit/synthetic.hpp"
#include "nerkit/training.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace nerkit;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kCrfInstances = 500;
constexpr double kCrfPartitionTol = 1e-8;
constexpr double kCrfSeconds = 10.0;
constexpr double kHeadGradTol = 1e-3;
constexpr double kCrfGradTol = 1e-4;
constexpr double kClassicGradTol = 1e-4;
constexpr double kGradSeconds = 60.0;
constexpr std::size_t kBioCases = 10000;
constexpr std::size_t kOverfitEpochs = 200;
constexpr double kOverfitF1 = 0.99;
constexpr double kOverfitSeconds = 300.0;
constexpr std::size_t kOfficialTrain = 16778;
constexpr std::size_t kOfficialDev = 871;
constexpr std::size_t kOfficialLabels = 67;

enum class Status { pass, fail, skip, report };

struct Outcome {
  Status status;
  std::string detail;
};

int failures = 0;

void emit(const std::string& name, const std::function<Outcome()>& check) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {Status::fail, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL"
                    : o.status == Status::skip ? "SKIP" : "REPORT";
  if (o.status == Status::fail) ++failures;
  std::cout << fmt::format("{:<6} {:<22} {} [{:.1f}s]", tag, name, o.detail, secs) << std::endl;
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------------ CRF oracle

Outcome crf_oracle() {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  double worst = 0.0;
  std::size_t path_mismatch = 0;
  for (std::size_t i = 0; i < kCrfInstances; ++i) {
    std::size_t T = 1 + uniform_index(rng, 5), L = 1 + uniform_index(rng, 4);
    auto em = oracle::random_matrix(T, L, rng, 2.0);
    auto p = oracle::random_crf(L, rng, 2.0);
    if (i % 10 == 0) {
      // Force exact ties so the tie-break rule is exercised.
      for (double& v : em.values()) v = std::round(v);
      for (double& v : p.transitions.values()) v = std::round(v);
      for (double& v : p.start) v = std::round(v);
      for (double& v : p.end) v = std::round(v);
    }
    worst = std::max(worst, std::abs(log_partition(em, p) - oracle::brute_log_partition(em, p)));
    if (viterbi(em, p).path != oracle::brute_viterbi(em, p).path) ++path_mismatch;
  }
  double secs = seconds_since(t0);
  return verdict(worst < kCrfPartitionTol && path_mismatch == 0 && secs < kCrfSeconds,
                 fmt::format("{} instances, max |logZ - brute| = {:.2e} (tol {:.0e}), viterbi mismatches {}, "
                             "ties to lowest index",
                             kCrfInstances, worst, kCrfPartitionTol, path_mismatch));
}

// ------------------------------------------------------------------ gradients

double crf_grad_worst(Rng& rng) {
  double worst = 0.0;
  for (int i = 0; i < 40; ++i) {
    std::size_t T = 1 + uniform_index(rng, 5), L = 1 + uniform_index(rng, 4);
    auto em = oracle::random_matrix(T, L, rng);
    auto p = oracle::random_crf(L, rng);
    std::vector<int> y(T);
    for (int& v : y) v = static_cast<int>(uniform_index(rng, L));
    auto g = nll_grad(em, y, p);
    auto f = [&] { return nll(em, y, p); };
    auto sweep = [&](std::span<double> values, std::span<const double> analytic) {
      for (std::size_t k = 0; k < values.size(); ++k)
        worst = std::max(worst, oracle::relative_error(analytic[k], oracle::central_difference(f, values[k])));
    };
    sweep(em.values(), g.emissions.values());
    sweep(p.transitions.values(), g.transitions.values());
    sweep(p.start, g.start);
    sweep(p.end, g.end);
  }
  return worst;
}

double classic_grad_worst(Rng& rng) {
  auto schema = testing_support::tiny_schema();
  auto make = [](std::string id, std::vector<std::string> w, std::vector<std::string> t) {
    Sentence s;
    s.id = std::move(id);
    for (auto& x : w) s.tokens.push_back({x, {}});
    s.fg_tags = std::move(t);
    return s;
  };
  Dataset d{{make("a", {"Ann", "met", "Bob"}, {"B-Politician", "O", "B-Scientist"}),
             make("b", {"in", "Paris", "city"}, {"O", "B-City", "I-City"}),
             make("c", {"Bob", "Ann"}, {"B-Scientist", "I-Scientist"})}};
  ClassicObjective obj(d, schema, 0.1, {});
  std::vector<double> theta(obj.num_params()), grad(theta.size());
  for (double& v : theta) v = uniform(rng, -0.5, 0.5);
  obj.value_and_gradient(theta, grad);
  double worst = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k)
    worst = std::max(worst, oracle::relative_error(grad[k],
                                                   oracle::central_difference([&] { return obj.value(theta); }, theta[k])));
  return worst;
}

Outcome gradient_gate() {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(77);
  double crf = crf_grad_worst(rng);
  double head = 0.0;
  std::string head_where;
  std::size_t combos = 0, checked = 0;
  for (auto kind : {HeadKind::linear_ce, HeadKind::linear_crf, HeadKind::bilstm_crf})
    for (auto blend : {BlendMode::none, BlendMode::concat, BlendMode::avg})
      for (auto aux : {AuxKind::none, AuxKind::linear_ce, AuxKind::crf})
        for (int rep = 0; rep < 2; ++rep) {
          HeadConfig cfg;
          cfg.head_kind = kind;
          cfg.blend = blend;
          cfg.aux_kind = aux;
          cfg.bilstm_hidden = 3;
          cfg.dropout_p = 0.2;
          const std::size_t T = 1 + uniform_index(rng, 4), D = 3, Lf = 5, Lc = 3;
          ModelParams m = init_model(cfg, D, Lf, Lc, rng());
          oracle::randomize(m, rng);
          Matrix x = oracle::random_matrix(T, D, rng);
          oracle::Gold gold;
          for (std::size_t t = 0; t < T; ++t) {
            gold.fg.push_back(static_cast<int>(uniform_index(rng, Lf)));
            gold.cg.push_back(static_cast<int>(uniform_index(rng, Lc)));
          }
          auto r = oracle::check_head_gradients(m, cfg, x, gold, uniform01(rng), uniform(rng, 0.1, 2.0), rng());
          checked += r.checked;
          if (r.worst > head) {
            head = r.worst;
            head_where = fmt::format("{}/{}/{} {}", to_string(kind), to_string(blend), to_string(aux), r.worst_name);
          }
          combos += rep == 0;
        }
  double classic = classic_grad_worst(rng);
  double secs = seconds_since(t0);
  bool ok = crf < kCrfGradTol && head < kHeadGradTol && classic < kClassicGradTol && secs < kGradSeconds;
  return verdict(ok, fmt::format("crf {:.1e} (tol {:.0e}); heads {:.1e} over {} combos, {} partials (tol {:.0e}, "
                                 "worst {}); classic {:.1e} (tol {:.0e})",
                                 crf, kCrfGradTol, head, combos, checked, kHeadGradTol, head_where, classic,
                                 kClassicGradTol));
}

// ------------------------------------------------------------------ loss schedule

Outcome loss_schedule() {
  std::size_t bad = 0;
  for (std::size_t E = 2; E <= 1000; ++E) {
    LossWeightSchedule s{E, 0.1};
    if (aux_weight(0, s) != 1.0 || aux_weight(E - 1, s) != 0.1) ++bad;
  }
  Rng rng(3);
  std::size_t bad_combined = 0;
  for (int i = 0; i < 10000; ++i) {
    double cg = uniform(rng, 0, 50), fg = uniform(rng, 0, 50), scale = uniform(rng, 0.01, 100);
    if (combined_loss(cg, fg, 1.0, scale) != cg) ++bad_combined;
    if (combined_loss(cg, fg, 0.0, 1.0) != fg) ++bad_combined;
  }
  return verdict(bad == 0 && bad_combined == 0,
                 fmt::format("W(0)=1 and W(E-1)=0.1 for E in [2,1000]: {} violations; combined_loss endpoints over "
                             "10^4 draws: {} mismatches",
                             bad, bad_combined));
}

// ------------------------------------------------------------------ BIO algebra

Outcome bio_algebra() {
  const auto& schema = testing_support::bundled_schema();
  const auto& fine = schema.labels(LabelSpace::fine);
  const auto& types = schema.types(LabelSpace::fine);
  Rng rng(10);
  std::size_t round_trip = 0, idempotence = 0, cg_positions = 0;
  for (std::size_t c = 0; c < kBioCases; ++c) {
    std::size_t n = 1 + uniform_index(rng, 20);
    std::vector<EntitySpan> spans;
    for (std::size_t t = 0; t < n;) {
      if (uniform01(rng) < 0.35) {
        std::size_t end = std::min(n - 1, t + uniform_index(rng, 4));
        spans.push_back({t, end, types[uniform_index(rng, types.size())]});
        t = end + 1;
      } else {
        ++t;
      }
    }
    if (bio_decode(bio_encode(spans, n)) != spans) ++round_trip;

    std::vector<std::string> noisy(n);
    for (auto& tag : noisy) tag = fine[uniform_index(rng, fine.size())];
    auto once = bio_encode(bio_decode(noisy), n);
    auto twice = bio_encode(bio_decode(once), n);
    if (once != twice || bio_decode_counted(once).repairs != 0) ++idempotence;

    auto cg = derive_cg_tags(noisy, schema);
    for (std::size_t t = 0; t < n; ++t)
      if (parse_bio(cg[t]).prefix != parse_bio(noisy[t]).prefix) {
        ++cg_positions;
        break;
      }
  }
  return verdict(round_trip + idempotence + cg_positions == 0,
                 fmt::format("{} cases: round-trip failures {}, repair idempotence failures {}, CG O/B/I position "
                             "changes {}",
                             kBioCases, round_trip, idempotence, cg_positions));
}

// ------------------------------------------------------------------ interchange format

Outcome interchange() {
  auto dir = testing_support::scratch_dir("acceptance_interchange");
  Rng rng(55);
  std::size_t mismatches = 0, undetected = 0, nan_undetected = 0, files = 0, truncations = 0;
  for (int f = 0; f < 20; ++f) {
    EmbeddingHeader h{1, 1 + uniform_index(rng, 8), 1 + uniform_index(rng, 4), "f32"};
    std::vector<EmbeddingSequence> seqs;
    std::size_t n = uniform_index(rng, 12);
    for (std::size_t i = 0; i < n; ++i) {
      EmbeddingSequence s(fmt::format("s{}-{}", f, i), 1 + uniform_index(rng, 10), h.num_layers, h.dim);
      for (float& v : s.values) {
        do v = std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
        while (!std::isfinite(v));
      }
      seqs.push_back(std::move(s));
    }
    fs::path path = dir / "f.seqemb";
    write_embeddings(h, seqs, path);
    ++files;
    auto [h2, back] = read_embeddings(path);
    bool same = h2 == h && back.size() == seqs.size();
    for (std::size_t i = 0; same && i < seqs.size(); ++i)
      same = back[i].sentence_id == seqs[i].sentence_id && back[i].values.size() == seqs[i].values.size() &&
             std::memcmp(back[i].values.data(), seqs[i].values.data(), seqs[i].values.size() * 4) == 0;
    if (!same) ++mismatches;

    std::string bytes = read_file(path);
    std::size_t header_end = 12 + h.to_json_bytes().size();
    for (int k = 0; k < 10; ++k) {
      std::size_t cut = uniform_index(rng, bytes.size());
      // A cut exactly at a record boundary leaves a shorter valid file.
      bool boundary = cut == header_end;
      std::size_t off = header_end;
      for (const auto& s : seqs) {
        off += 4 + s.sentence_id.size() + 4 + s.values.size() * 4;
        boundary = boundary || cut == off;
      }
      if (boundary) continue;
      ++truncations;
      write_file(dir / "t.seqemb", bytes.substr(0, cut));
      try {
        read_embeddings(dir / "t.seqemb");
        ++undetected;
      } catch (const FormatError&) {
      }
    }
    if (!seqs.empty()) {
      std::string b = bytes;
      std::size_t at = b.size() - 4 * (1 + uniform_index(rng, seqs.back().values.size()));
      float nan = std::numeric_limits<float>::quiet_NaN();
      std::memcpy(b.data() + at, &nan, 4);
      write_file(dir / "n.seqemb", b);
      try {
        read_embeddings(dir / "n.seqemb");
        ++nan_undetected;
      } catch (const FormatError& e) {
        if (e.offset() != at) ++nan_undetected;
      }
    }
  }
  return verdict(mismatches + undetected + nan_undetected == 0,
                 fmt::format("{} random files: bit-exact mismatches {}; {} truncations, undetected {}; NaN "
                             "injections undetected or misplaced {}",
                             files, mismatches, truncations, undetected, nan_undetected));
}

// ------------------------------------------------------------------ overfit

struct Fixture {
  Dataset data;
  EmbeddingTable table;
};

Fixture load_fixture() {
  ConllOptions o;
  o.schema = &testing_support::bundled_schema();
  Fixture f;
  f.data = parse_conll(testing_support::fixtures_dir() / "synth50.conll", o);
  f.table = EmbeddingTable({1, 16, 3, "f32"}, make_synthetic_embeddings(f.data, 16, 3, 7));
  return f;
}

Outcome overfit() {
  auto t0 = std::chrono::steady_clock::now();
  Fixture f = load_fixture();
  TrainConfig cfg = TrainConfig::load(fs::path(NERKIT_TEST_CONFIGS) / "config11.json");
  cfg.epochs = kOverfitEpochs;
  const auto& h = cfg.head;
  bool shape = h.head_kind == HeadKind::bilstm_crf && h.blend == BlendMode::concat && h.aux_kind == AuxKind::crf &&
               h.dropout_p == 0.2 && cfg.batch_size == 16;
  auto r = train(f.data, f.table, testing_support::bundled_schema(), cfg);
  double final_f1 = r.log.back().train_micro_f1;
  long first = -1;
  for (const auto& e : r.log)
    if (e.train_micro_f1 >= kOverfitF1) {
      first = static_cast<long>(e.epoch);
      break;
    }
  auto pred = predict(r.checkpoint, f.data, f.table, testing_support::bundled_schema());
  std::size_t reproduced = 0;
  for (std::size_t i = 0; i < f.data.size(); ++i) reproduced += pred.sentences[i].fg_tags == f.data.sentences[i].fg_tags;
  double secs = seconds_since(t0);
  return verdict(shape && final_f1 >= kOverfitF1 && secs < kOverfitSeconds,
                 fmt::format("{} sentences, {} epochs: final train micro-F1 {:.4f} (need {:.2f}), first reached at "
                             "epoch {}, {}/{} sentences reproduced exactly",
                             f.data.size(), kOverfitEpochs, final_f1, kOverfitF1, first, reproduced, f.data.size()));
}

// ------------------------------------------------------------------ metric oracle

Outcome metric_oracle() {
  auto tagged = [](std::string id, std::vector<std::string> tags) {
    Sentence s;
    s.id = std::move(id);
    for (std::size_t i = 0; i < tags.size(); ++i) s.tokens.push_back({"w", {}});
    s.fg_tags = std::move(tags);
    return s;
  };
  std::vector<std::string> problems;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };
  {
    Dataset g{{tagged("a", {"B-PER", "I-PER", "O", "B-LOC", "O"})}};
    Dataset p{{tagged("a", {"B-PER", "I-PER", "O", "O", "B-LOC"})}};
    auto r = score(g, p);
    expect(r.micro.tp == 1 && r.micro.fp == 1 && r.micro.fn == 1, "tp/fp/fn counts");
    expect(r.micro.precision == 0.5 && r.micro.recall == 0.5 && r.micro.f1 == 0.5, "micro P/R/F1 = 0.5");
    expect(r.mention.f1 == 0.5, "MD F1 = 0.5");
  }
  {
    Dataset g{{tagged("a", {"B-PER", "I-PER"})}};
    Dataset p{{tagged("a", {"B-LOC", "I-LOC"})}};
    auto r = score(g, p);
    expect(r.micro.f1 == 0.0 && r.mention.f1 == 1.0, "span right, type wrong");
  }
  {
    Dataset g{{tagged("a", {"B-A", "I-A", "O", "B-B"}), tagged("b", {"B-A", "O", "B-C", "I-C"})}};
    auto r = score(g, g);
    expect(r.micro.f1 == 1.0 && r.macro_f1 == 1.0 && r.mention.f1 == 1.0, "pred = gold");
  }
  {
    Dataset g{{tagged("a", {"B-A", "I-A", "O", "B-B"}), tagged("b", {"B-A", "O", "B-C", "I-C"}),
               tagged("c", {"O", "O", "O"})}};
    Dataset p{{tagged("a", {"B-A", "I-A", "O", "B-A"}), tagged("b", {"B-A", "O", "B-C", "O"}),
               tagged("c", {"O", "I-B", "O"})}};
    auto r = score(g, p);
    expect(r.micro.tp == 2 && r.micro.fp == 3 && r.micro.fn == 2, "multi-sentence micro counts");
    expect(r.micro.f1 == 2.0 * 2 / (2.0 * 2 + 3 + 2), "multi-sentence micro F1 = 4/9");
    expect(r.mention.tp == 3 && r.mention.fp == 2 && r.mention.fn == 1, "multi-sentence MD counts");
    expect(std::abs(r.macro_f1 - 0.8 / 3.0) < 1e-15, "multi-sentence macro F1");
  }
  std::string detail = problems.empty() ? "4 hand-counted fixtures reproduced exactly"
                                        : "mismatched: " + fmt::format("{}", fmt::join(problems, "; "));
  return verdict(problems.empty(), detail);
}

// ------------------------------------------------------------------ determinism

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "nerkit");
  std::ostringstream o, e;
  int code = cli::run(args, o, e);
  if (out) *out = o.str() + e.str();
  return code;
}

Outcome determinism() {
  auto dir = testing_support::scratch_dir("acceptance_determinism");
  Fixture f = load_fixture();
  write_conll(dir / "corpus.conll", f.data);
  write_embeddings(f.table.header(), f.table.sequences(), dir / "emb.seqemb");
  auto cfg = nlohmann::json::parse(read_file(fs::path(NERKIT_TEST_CONFIGS) / "config11.json"));
  cfg["epochs"] = 20;
  write_file(dir / "cfg.json", cfg.dump());
  std::string logs[2], preds[2];
  for (int run = 0; run < 2; ++run) {
    fs::path out = dir / ("run" + std::to_string(run));
    std::string msg;
    if (cli({"train", "--corpus", (dir / "corpus.conll").string(), "--embeddings", (dir / "emb.seqemb").string(),
             "--config", (dir / "cfg.json").string(), "--out", out.string()},
            &msg) != 0)
      return {Status::fail, "train failed: " + msg};
    if (cli({"predict", "--checkpoint", (out / "checkpoint.bin").string(), "--corpus",
             (dir / "corpus.conll").string(), "--embeddings", (dir / "emb.seqemb").string(), "--out",
             (out / "pred").string()},
            &msg) != 0)
      return {Status::fail, "predict failed: " + msg};
    logs[run] = read_file(out / "train_log.csv");
    preds[run] = read_file(out / "pred" / "predictions.conll");
  }
  bool same_ckpt = read_file(dir / "run0" / "checkpoint.bin") == read_file(dir / "run1" / "checkpoint.bin");
  return verdict(logs[0] == logs[1] && preds[0] == preds[1],
                 fmt::format("two train+predict runs (20 epochs): logs identical {}, predictions identical {}, "
                             "checkpoints byte-identical {}",
                             logs[0] == logs[1], preds[0] == preds[1], same_ckpt));
}

// ------------------------------------------------------------------ official data

Outcome official_data() {
  const char* train_path = std::getenv("NERKIT_OFFICIAL_TRAIN");
  const char* dev_path = std::getenv("NERKIT_OFFICIAL_DEV");
  if (!train_path || !dev_path || !fs::exists(train_path) || !fs::exists(dev_path))
    return {Status::skip, "set NERKIT_OFFICIAL_TRAIN and NERKIT_OFFICIAL_DEV to the English train/dev CoNLL files"};
  std::string out;
  int code = cli({"eda", "--corpus", train_path, "--corpus", dev_path}, &out);
  if (code != 0) return {Status::fail, "eda exited " + std::to_string(code) + ": " + out};
  std::string want_train = fmt::format("{}: {} sentences", train_path, kOfficialTrain);
  std::string want_dev = fmt::format("{}: {} sentences", dev_path, kOfficialDev);
  std::string want_labels = fmt::format("distinct BIO labels: {} ", kOfficialLabels);
  bool ok = out.find(want_train) != std::string::npos && out.find(want_dev) != std::string::npos &&
            out.find(want_labels) != std::string::npos;
  std::string first_lines = out.substr(0, out.find("sentence length"));
  for (char& c : first_lines)
    if (c == '\n') c = ';';
  return verdict(ok, fmt::format("expected {}/{} sentences and {} labels; eda said: {}", kOfficialTrain,
                                 kOfficialDev, kOfficialLabels, first_lines));
}

// ------------------------------------------------------------------ CRF vs CE trend

Outcome crf_trend() {
  const auto& schema = testing_support::bundled_schema();
  double sum_ce = 0.0, sum_crf = 0.0;
  std::vector<std::string> rows;
  for (std::uint64_t seed : {101, 202, 303}) {
    SyntheticCorpusOptions o;
    o.ambiguity = 0.3;
    o.num_sentences = 500;
    o.seed = seed;
    o.id_prefix = "train";
    Dataset train_set = make_synthetic_corpus(schema, o);
    o.seed = seed + 1;
    o.id_prefix = "heldout";
    Dataset held = make_synthetic_corpus(schema, o);
    EmbeddingTable te({1, 64, 1, "f32"}, make_synthetic_embeddings(train_set, 64, 1, seed));
    EmbeddingTable he({1, 64, 1, "f32"}, make_synthetic_embeddings(held, 64, 1, seed));
    double f1[2];
    int k = 0;
    for (auto kind : {HeadKind::linear_ce, HeadKind::linear_crf}) {
      TrainConfig cfg;
      cfg.epochs = 15;
      cfg.batch_size = 16;
      cfg.base_lr = 0.01;
      cfg.seed = seed;
      cfg.track_train_f1 = false;
      cfg.head.head_kind = kind;
      cfg.head.blend = BlendMode::concat;
      auto r = train(train_set, te, schema, cfg);
      f1[k++] = score(held, predict(r.checkpoint, held, he, schema)).micro.f1;
    }
    sum_ce += f1[0];
    sum_crf += f1[1];
    rows.push_back(fmt::format("seed {}: CE {:.4f} CRF {:.4f}", seed, f1[0], f1[1]));
  }
  double ce = sum_ce / 3, crf = sum_crf / 3;
  return {Status::report, fmt::format("500 train / 500 held-out sentences, 64-dim embeddings, 3 seeds; mean micro-F1 CE {:.4f}, "
                                      "CRF {:.4f}; CRF >= CE: {} ({})",
                                      ce, crf, crf >= ce ? "yes" : "no", fmt::join(rows, ", "))};
}

}  // namespace

int main() {
  emit("crf_oracle", crf_oracle);
  emit("gradient_gate", gradient_gate);
  emit("loss_schedule", loss_schedule);
  emit("bio_algebra", bio_algebra);
  emit("interchange_format", interchange);
  emit("overfit_capacity", overfit);
  emit("metric_oracle", metric_oracle);
  emit("determinism", determinism);
  emit("official_data", official_data);
  emit("crf_vs_ce_trend", crf_trend);
  std::cout << (failures == 0 ? "acceptance: all gating criteria passed" : fmt::format("acceptance: {} failed", failures))
            << std::endl;
  return failures == 0 ? 0 : 1;
}
