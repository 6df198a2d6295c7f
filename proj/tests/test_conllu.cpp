#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "nucleus/conllu.hpp"
#include "nucleus/numeric.hpp"

using namespace nucleus;
using conllu::Sentence;
using conllu::Token;
using conllu::Treebank;

namespace {

// "I did this": heads (2, 0, 2), root at the finite verb.
const char* kDidThis =
    "# text = I did this\n"
    "1\tI\tI\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
    "2\tdid\tdo\tVERB\t_\tVerbForm=Fin\t0\troot\t_\t_\n"
    "3\tthis\tthis\tPRON\t_\t_\t2\tobj\t_\t_\n\n";

Sentence random_sentence(numeric::Rng& rng) {
  const int n = 1 + static_cast<int>(rng.below(9));
  Sentence s;
  if (rng.below(2)) s.comments.push_back("# sent_id = r" +
                                         std::to_string(rng.below(1000)));
  // random tree: token i attaches to a random earlier token or the root,
  // then one token is promoted to the single root
  std::vector<int> head(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 2; i <= n; ++i)
    head[static_cast<std::size_t>(i)] =
        static_cast<int>(rng.below(static_cast<std::size_t>(i - 1))) + 1;
  const int root = 1;
  const char* upos[] = {"NOUN", "VERB", "AUX", "ADV", "PUNCT"};
  const char* rels[] = {"nsubj", "obj", "aux", "advmod", "punct"};
  for (int i = 1; i <= n; ++i) {
    Token t;
    t.id = i;
    t.form = "w" + std::to_string(rng.below(50));
    t.lemma = "l" + std::to_string(rng.below(20));
    t.upos = upos[rng.below(5)];
    t.xpos = rng.below(2) ? "_" : "X" + std::to_string(rng.below(5));
    if (rng.below(2)) t.feats.set("Person", std::to_string(1 + rng.below(3)));
    if (rng.below(2)) t.feats.set("Number", rng.below(2) ? "Sing" : "Plur");
    t.head = i == root ? 0 : head[static_cast<std::size_t>(i)];
    t.deprel = i == root ? "root" : rels[rng.below(5)];
    t.misc = rng.below(3) ? "_" : "SpaceAfter=No";
    s.tokens.push_back(std::move(t));
  }
  // re-hang any stray 0-headed token onto the root to keep a single root
  for (auto& t : s.tokens)
    if (t.head == 0 && t.id != root) t.head = root;
  return s;
}

}  // namespace

TEST_CASE("morph features parse, lookup, and round-trip") {
  auto f = conllu::MorphFeatures::parse("Person=3|Number=Sing");
  CHECK(f.get("Person") == std::optional<std::string>("3"));
  CHECK(f.get("Number") == std::optional<std::string>("Sing"));
  CHECK(f.has("Person", "3"));
  CHECK_FALSE(f.has("person", "3"));  // case-sensitive
  // canonical sorting by feature name
  CHECK(f.str() == "Number=Sing|Person=3");

  CHECK(conllu::MorphFeatures::parse("_").empty());
  auto v = conllu::MorphFeatures::parse("VerbForm=Fin");
  CHECK(v.has("VerbForm", "Fin"));

  CHECK_THROWS_AS(conllu::MorphFeatures::parse("NoEquals"),
                  conllu::FormatError);
}

TEST_CASE("parse a 3-token sentence with root at the finite verb") {
  const Treebank tb = conllu::parse_conllu_string(kDidThis);
  REQUIRE(tb.size() == 1);
  const Sentence& s = tb[0];
  REQUIRE(s.size() == 3);
  CHECK(s.at(1).head == 2);
  CHECK(s.at(2).head == 0);
  CHECK(s.at(2).deprel == "root");
  CHECK(s.at(3).head == 2);
  CHECK(s.at(2).feats.has("VerbForm", "Fin"));
  CHECK(s.comments == std::vector<std::string>{"# text = I did this"});
  CHECK(s.children(2) == std::vector<int>{1, 3});
}

TEST_CASE("empty input gives an empty treebank") {
  CHECK(conllu::parse_conllu_string("").empty());
  CHECK(conllu::parse_conllu_string("\n\n").empty());
}

TEST_CASE("format errors name the offending line") {
  // 9 columns
  const char* bad9 = "1\tI\tI\tPRON\t_\t_\t2\tnsubj\t_\n\n";
  CHECK_THROWS_WITH_AS(conllu::parse_conllu_string(bad9),
                       doctest::Contains("line 1"), conllu::FormatError);
  // non-integer head
  const char* badh = "1\tI\tI\tPRON\t_\t_\tx\tnsubj\t_\t_\n\n";
  CHECK_THROWS_AS(conllu::parse_conllu_string(badh), conllu::FormatError);
}

TEST_CASE("strict mode rejects cycles, off by default it does not") {
  const char* cyc =
      "1\ta\ta\tNOUN\t_\t_\t2\tdep\t_\t_\n"
      "2\tb\tb\tNOUN\t_\t_\t1\tdep\t_\t_\n\n";
  CHECK_THROWS_AS(conllu::parse_conllu_string(cyc, /*strict=*/true),
                  conllu::ValidationError);
  CHECK(conllu::parse_conllu_string(cyc).size() == 1);
}

TEST_CASE("validate_tree flags exactly the malformed shapes") {
  Treebank ok = conllu::parse_conllu_string(kDidThis);
  CHECK_NOTHROW(conllu::validate_tree(ok[0]));

  Sentence s = ok[0];
  s.at(3).head = 9;  // out of range
  CHECK_THROWS_AS(conllu::validate_tree(s), conllu::ValidationError);

  s = ok[0];
  s.at(3).head = 3;  // self loop
  CHECK_THROWS_AS(conllu::validate_tree(s), conllu::ValidationError);

  s = ok[0];
  s.at(3).head = 0;  // second root
  CHECK_THROWS_AS(conllu::validate_tree(s), conllu::ValidationError);
  CHECK_NOTHROW(conllu::validate_tree(s, /*single_root=*/false));
}

TEST_CASE("multiword tokens and empty nodes pass through serialization") {
  const char* text =
      "# sent_id = mwt\n"
      "1-2\tdella\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "1\tdi\tdi\tADP\t_\t_\t3\tcase\t_\t_\n"
      "2\tla\tla\tDET\t_\t_\t3\tdet\t_\t_\n"
      "3\tcasa\tcasa\tNOUN\t_\t_\t0\troot\t_\t_\n"
      "3.1\tnull\t_\t_\t_\t_\t_\t_\t_\t_\n\n";
  const Treebank tb = conllu::parse_conllu_string(text);
  REQUIRE(tb.size() == 1);
  CHECK(tb[0].size() == 3);  // only syntactic words
  REQUIRE(tb[0].passthrough.size() == 2);
  CHECK(tb[0].passthrough[0].first == 0);  // before any word
  CHECK(tb[0].passthrough[1].first == 3);  // after the third word
  CHECK(conllu::serialize_conllu_string(tb) == text);
}

TEST_CASE("crlf input is accepted, lf is emitted") {
  std::string crlf =
      "1\tI\tI\tPRON\t_\t_\t2\tnsubj\t_\t_\r\n"
      "2\tdid\tdo\tVERB\t_\t_\t0\troot\t_\t_\r\n\r\n";
  const Treebank tb = conllu::parse_conllu_string(crlf);
  REQUIRE(tb.size() == 1);
  CHECK(tb[0].size() == 2);
  CHECK(conllu::serialize_conllu_string(tb).find('\r') == std::string::npos);
}

TEST_CASE("round-trip identity on the worked example") {
  const Treebank tb = conllu::parse_conllu_string(kDidThis);
  const std::string text = conllu::serialize_conllu_string(tb);
  CHECK(conllu::parse_conllu_string(text) == tb);
  CHECK(conllu::serialize_conllu_string(conllu::parse_conllu_string(text)) ==
        text);
}

TEST_CASE("property: serialization round-trip on random valid sentences") {
  numeric::Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    Treebank tb;
    const std::size_t m = 1 + rng.below(4);
    for (std::size_t i = 0; i < m; ++i) tb.push_back(random_sentence(rng));
    for (const auto& s : tb) REQUIRE_NOTHROW(conllu::validate_tree(s));
    const std::string text = conllu::serialize_conllu_string(tb);
    const Treebank back = conllu::parse_conllu_string(text, /*strict=*/true);
    REQUIRE(back == tb);
    CHECK(conllu::serialize_conllu_string(back) == text);
  }
}
