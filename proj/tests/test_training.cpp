#include <doctest.h>

#include <cmath>

#include "nerkit/crf.hpp"
#include "nerkit/error.hpp"
#include "nerkit/evaluation.hpp"
#include "nerkit/synthetic.hpp"
#include "nerkit/training.hpp"
#include "test_support.hpp"

using namespace nerkit;
using testing_support::bundled_schema;

namespace {

struct Toy {
  Dataset data;
  EmbeddingTable table;
};

Toy toy(std::size_t n, std::uint64_t seed = 3, std::size_t layers = 2) {
  SyntheticCorpusOptions o;
  o.num_sentences = n;
  o.seed = seed;
  o.max_length = 8;
  Toy t;
  t.data = make_synthetic_corpus(bundled_schema(), o);
  t.table = EmbeddingTable({1, 6, layers, "f32"}, make_synthetic_embeddings(t.data, 6, layers, seed));
  return t;
}

TrainConfig quick(HeadKind kind, AuxKind aux, std::size_t epochs = 3) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 4;
  c.base_lr = 0.01;
  c.seed = 5;
  c.head.head_kind = kind;
  c.head.aux_kind = aux;
  c.head.bilstm_hidden = 4;
  return c;
}

}  // namespace

TEST_CASE("aux_weight examples") {
  for (std::size_t E : {2, 3, 10, 37, 200}) {
    LossWeightSchedule s{E, 0.1};
    CHECK(aux_weight(0, s) == 1.0);
    CHECK(aux_weight(E - 1, s) == 0.1);
  }
  LossWeightSchedule ten{10, 0.1};
  CHECK(aux_weight(5, ten) == doctest::Approx(0.5).epsilon(1e-15));
  for (std::size_t e = 1; e < 10; ++e) CHECK(aux_weight(e, ten) <= aux_weight(e - 1, ten));
  CHECK(aux_weight(0, LossWeightSchedule{1, 0.1}) == 1.0);
  CHECK_THROWS_AS(aux_weight(10, ten), ConfigError);
  LossWeightSchedule flat{10, 0.1, DecayShape::constant, 0.0};
  CHECK(aux_weight(3, flat) == 0.0);
}

TEST_CASE("combined_loss examples") {
  CHECK(combined_loss(2.75, 9.5, 1.0, 0.3) == 2.75);
  CHECK(combined_loss(2.75, 9.5, 0.0, 1.0) == 9.5);
  CHECK(combined_loss(2.0, 4.0, 0.5, 0.5) == doctest::Approx(2.0));
}

TEST_CASE("compute_scale examples") {
  CHECK(compute_scale({false, 0.5}, 3.0, 7.0) == 0.5);
  CHECK(compute_scale({true, 1.0}, 2.56, 4.29) == doctest::Approx(2.56 / 4.29));
  CHECK(compute_scale({true, 1.0}, 1000.0, 1.0) == 100.0);
  CHECK(compute_scale({true, 1.0}, 1.0, 1000.0) == 0.01);
  CHECK_THROWS_AS(compute_scale({true, 1.0}, 1.0, 0.0), NumericError);
}

TEST_CASE("config parsing") {
  auto c = TrainConfig::from_json(nlohmann::json::parse(
      R"({"epochs": 5, "dropout_p": 0.3, "scale": 0.25, "lr_multipliers": {"projection": 10},
          "head": {"head_kind": "linear_crf", "blend": "avg"}})"));
  CHECK(c.epochs == 5);
  CHECK(c.head.dropout_p == 0.3);
  CHECK_FALSE(c.scale.automatic);
  CHECK(c.scale.value == 0.25);
  CHECK(c.multiplier("projection") == 10);
  CHECK(c.multiplier("bilstm") == 1);
  CHECK(c.head.blend == BlendMode::avg);
  auto back = TrainConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());

  CHECK_THROWS_AS(TrainConfig::from_json(nlohmann::json::parse(R"({"epoch": 5})")), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json(nlohmann::json::parse(R"({"lr_multipliers": {"lstm": 2}})")),
                  ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json(nlohmann::json::parse(R"({"residual": 1.5})")), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json(nlohmann::json::parse(R"({"head": {"blend": "sum"}})")), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json(nlohmann::json::parse(R"({"head": {"dropout_p": 1.0}})")), ConfigError);
}

TEST_CASE("per-group learning rates") {
  Adam adam(1e-3, {{"projection", 10.0}});
  CHECK(adam.effective_lr("bilstm") == 1e-3);
  CHECK(std::abs(adam.effective_lr("projection") / adam.effective_lr("bilstm") - 10.0) < 1e-9);

  // One step on 0.5 * ||theta||^2: the first Adam step is lr * g / (|g| + eps).
  HeadConfig cfg;
  cfg.head_kind = HeadKind::bilstm_crf;
  cfg.bilstm_hidden = 2;
  ModelParams m = init_model(cfg, 2, 3, 3, 1);
  for_each_param(m, [](const std::string&, std::string_view, std::span<double> v) {
    for (double& x : v) x = 1.0;
  });
  ModelParams before = m;
  ModelParams grads = m;
  adam.step(m, grads);
  double lstm_step = before.head.bilstm->forward.bias[0] - m.head.bilstm->forward.bias[0];
  double proj_step = before.head.fg_projection.bias[0] - m.head.fg_projection.bias[0];
  CHECK(proj_step / lstm_step == doctest::Approx(10.0).epsilon(1e-6));
  CHECK(adam.steps() == 1);
}

TEST_CASE("log columns depend on the auxiliary branch") {
  std::vector<EpochLog> log{{0, 1.0, 0.5, 2.0, 3.0, 2.0, 0.25}};
  auto with = format_log_csv(log, true);
  auto without = format_log_csv(log, false);
  CHECK(with.rfind("epoch,W,scale,cg_loss,fg_loss,combined_loss,train_micro_f1\n", 0) == 0);
  CHECK(without.find("cg_loss") == std::string::npos);
  CHECK(without.find(",W,") == std::string::npos);
}

TEST_CASE("training is deterministic and checkpoints round trip") {
  auto t = toy(12);
  auto cfg = quick(HeadKind::bilstm_crf, AuxKind::crf);
  cfg.head.blend = BlendMode::concat;
  cfg.head.input_layers_k = 2;
  auto a = train(t.data, t.table, bundled_schema(), cfg);
  auto b = train(t.data, t.table, bundled_schema(), cfg);
  CHECK(a.log == b.log);
  REQUIRE(a.log.size() == 3);
  CHECK(a.log[0].weight == 1.0);
  CHECK(a.log[2].weight == 0.1);

  auto dir = testing_support::scratch_dir("ckpt");
  a.checkpoint.save(dir / "c.bin");
  Checkpoint back = Checkpoint::load(dir / "c.bin");
  CHECK(back.config.to_json() == a.checkpoint.config.to_json());
  CHECK(back.schema_fingerprint == bundled_schema().fingerprint());
  std::vector<double> x, y;
  for_each_param(a.checkpoint.params, [&](const std::string&, std::string_view, std::span<double> v) {
    x.insert(x.end(), v.begin(), v.end());
  });
  for_each_param(back.params, [&](const std::string&, std::string_view, std::span<double> v) {
    y.insert(y.end(), v.begin(), v.end());
  });
  CHECK(x == y);
  auto p1 = predict(a.checkpoint, t.data, t.table, bundled_schema());
  auto p2 = predict(back, t.data, t.table, bundled_schema());
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1.sentences[i].fg_tags == p2.sentences[i].fg_tags);

  std::string bytes = read_file(dir / "c.bin");
  write_file(dir / "bad.bin", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(Checkpoint::load(dir / "bad.bin"), FormatError);
}

TEST_CASE("no auxiliary branch equals zero CG weight with unit scale") {
  auto t = toy(10);
  auto plain = quick(HeadKind::linear_crf, AuxKind::none);
  plain.head.dropout_p = 0.0;
  auto aux = plain;
  aux.head.aux_kind = AuxKind::linear_ce;
  aux.decay = DecayShape::constant;
  aux.constant_weight = 0.0;
  aux.scale = {false, 1.0};
  auto a = train(t.data, t.table, bundled_schema(), plain);
  auto b = train(t.data, t.table, bundled_schema(), aux);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t e = 0; e < a.log.size(); ++e) {
    CHECK(a.log[e].fg_loss == b.log[e].fg_loss);
    CHECK(a.log[e].combined_loss == b.log[e].combined_loss);
  }
  CHECK(a.checkpoint.params.head.fg_projection.weight == b.checkpoint.params.head.fg_projection.weight);
}

TEST_CASE("linear_ce prediction is the per-token argmax") {
  auto t = toy(8);
  auto cfg = quick(HeadKind::linear_ce, AuxKind::none, 2);
  auto r = train(t.data, t.table, bundled_schema(), cfg);
  auto pred = predict(r.checkpoint, t.data, t.table, bundled_schema());
  Rng unused(0);
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    auto out = head_forward(t.table.at(t.data.sentences[i].id), cfg.head, r.checkpoint.params.head, false, unused);
    auto idx = argmax_rows(out.fg_scores);
    for (std::size_t k = 0; k < idx.size(); ++k)
      CHECK((*pred.sentences[i].fg_tags)[k] == bundled_schema().label(idx[k], LabelSpace::fine));
  }
  Matrix tie(1, 3);
  CHECK(argmax_rows(tie) == std::vector<int>{0});
}

TEST_CASE("constrained decoding yields well-formed BIO") {
  auto t = toy(10);
  auto cfg = quick(HeadKind::linear_crf, AuxKind::none, 1);
  cfg.constrained_decode = true;
  cfg.base_lr = 0.5;
  auto r = train(t.data, t.table, bundled_schema(), cfg);
  auto pred = predict(r.checkpoint, t.data, t.table, bundled_schema());
  for (const auto& s : pred.sentences) CHECK(bio_decode_counted(*s.fg_tags).repairs == 0);
}

TEST_CASE("training input errors") {
  auto t = toy(6);
  auto cfg = quick(HeadKind::linear_ce, AuxKind::none, 1);
  Dataset missing = t.data;
  missing.sentences[2].id = "not-there";
  CHECK_THROWS_AS(train(missing, t.table, bundled_schema(), cfg), AlignmentError);
  Dataset untagged = t.data;
  untagged.sentences[1].fg_tags.reset();
  CHECK_THROWS_AS(train(untagged, t.table, bundled_schema(), cfg), AlignmentError);
  auto deep = cfg;
  deep.head.input_layers_k = 3;
  CHECK_THROWS_AS(train(t.data, t.table, bundled_schema(), deep), ShapeError);
  CHECK_THROWS_AS(train(Dataset{}, t.table, bundled_schema(), cfg), ConfigError);

  auto huge = cfg;
  huge.base_lr = 1e308;
  huge.epochs = 3;
  CHECK_THROWS_AS(train(t.data, t.table, bundled_schema(), huge), NumericError);
}

TEST_CASE("prediction refuses a different schema") {
  auto t = toy(6);
  auto r = train(t.data, t.table, bundled_schema(), quick(HeadKind::linear_ce, AuxKind::none, 1));
  auto other = LabelSchema({"A"}, {"X"}, {{"A", "X"}});
  CHECK_THROWS_AS(predict(r.checkpoint, t.data, t.table, other), SchemaError);
}
