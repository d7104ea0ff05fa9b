#include <doctest.h>

#include <sstream>

#include "nerkit/corpus.hpp"
#include "nerkit/error.hpp"
#include "nerkit/synthetic.hpp"
#include "test_support.hpp"

using namespace nerkit;
using testing_support::bundled_schema;

namespace {

Dataset parse(const std::string& text, const ConllOptions& options = {}) {
  std::istringstream in(text);
  return parse_conll(in, options, "test.conll");
}

}  // namespace

TEST_CASE("single-line block with filler columns") {
  auto d = parse("uruguay _ _ B-Location\n");
  REQUIRE(d.size() == 1);
  CHECK(d.sentences[0].tokens[0].text == "uruguay");
  CHECK(d.sentences[0].fg_tags == std::vector<std::string>{"B-Location"});
}

TEST_CASE("empty input gives an empty dataset") {
  CHECK(parse("").empty());
  CHECK(parse("\n\n  \n").empty());
}

TEST_CASE("id comments, other comments and running ids") {
  auto d = parse(
      "# id abc-1\tdomain=en\n"
      "a _ _ O\n"
      "b _ _ B-Politician\n"
      "\n"
      "# a free comment\n"
      "c _ _ O\n");
  REQUIRE(d.size() == 2);
  CHECK(d.sentences[0].id == "abc-1");
  CHECK(d.sentences[0].size() == 2);
  CHECK(d.sentences[1].id == "1");
}

TEST_CASE("pos column and tag detection") {
  ConllOptions o;
  o.pos_column = 1;
  auto d = parse("The DT _ O\nParis NNP _ B-City\n", o);
  REQUIRE(d.size() == 1);
  CHECK(d.sentences[0].tokens[1].pos == std::optional<std::string>("NNP"));
  auto untagged = parse("The\nParis\n");
  CHECK_FALSE(untagged.sentences[0].fg_tags.has_value());
}

TEST_CASE("schema canonicalization and errors") {
  ConllOptions o;
  o.schema = &bundled_schema();
  auto d = parse("x _ _ b-musicalwork\ny _ _ i-MUSICALWORK\n", o);
  CHECK(d.sentences[0].fg_tags == std::vector<std::string>{"B-MusicalWork", "I-MusicalWork"});
  try {
    parse("x _ _ O\ny _ _ B-Martian\n", o);
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("test.conll:2") != std::string::npos);
  }
}

TEST_CASE("mixed column counts are a parse error") {
  CHECK_THROWS_AS(parse("a _ _ O\nb\n"), ParseError);
}

TEST_CASE("CoNLL write then parse is the identity") {
  SyntheticCorpusOptions so;
  so.num_sentences = 30;
  Dataset d = make_synthetic_corpus(bundled_schema(), so);
  d.sentences[3].tokens[0].pos = "NN";
  for (auto& t : d.sentences[3].tokens) t.pos = "NN";
  std::ostringstream out;
  write_conll(out, d);
  std::istringstream in(out.str());
  Dataset back = parse_conll(in);
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back.sentences[i].id == d.sentences[i].id);
    CHECK(back.sentences[i].fg_tags == d.sentences[i].fg_tags);
    for (std::size_t t = 0; t < d.sentences[i].size(); ++t)
      CHECK(back.sentences[i].tokens[t].text == d.sentences[i].tokens[t].text);
  }
  ConllOptions o;
  o.pos_column = 1;
  std::istringstream in2(out.str());
  Dataset with_pos = parse_conll(in2, o);
  CHECK(with_pos.sentences[3] == d.sentences[3]);
}

TEST_CASE("corpus_stats examples") {
  Sentence s;
  s.id = "a";
  for (int i = 0; i < 12; ++i) s.tokens.push_back({"w", {}});
  Dataset d{{s}};
  auto st = corpus_stats(d);
  CHECK(st.length_histogram == std::map<std::size_t, std::size_t>{{10, 1}});

  Sentence p{"b", {{"x", {}}, {"y", {}}, {"z", {}}}, std::vector<std::string>{"B-PER", "I-PER", "B-PER"}};
  auto st2 = corpus_stats(Dataset{{p}});
  CHECK(st2.tag_frequency == std::map<std::string, std::size_t>{{"PER", 2}});
  CHECK(st2.num_tokens == 3);
}

TEST_CASE("distinct_labels examples") {
  Sentence o{"a", {{"x", {}}, {"y", {}}}, std::vector<std::string>{"O", "O"}};
  CHECK(distinct_labels(Dataset{{o}}) == std::set<std::string>{"O"});
  CHECK(distinct_labels(Dataset{}).empty());
}

TEST_CASE("committed fixture parses against the bundled schema") {
  ConllOptions o;
  o.schema = &bundled_schema();
  auto d = parse_conll(testing_support::fixtures_dir() / "synth50.conll", o);
  CHECK(d.size() == 50);
  CHECK(d.sentences[0].id == "synth-00000");
}
