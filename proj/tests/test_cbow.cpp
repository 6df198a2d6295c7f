#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "nucleus/cbow.hpp"
#include "nucleus/numeric.hpp"

using namespace nucleus;
using cbow::CbowConfig;
using cbow::TypeEmbeddingTable;

namespace {

// A corpus where "alpha" and "beta" occur in identical contexts while the
// filler words occur in unrelated contexts. CBOW should place alpha and beta
// close together.
std::vector<std::vector<std::string>> synthetic_corpus(std::uint64_t seed,
                                                       std::size_t n = 400) {
  numeric::Rng rng(seed);
  std::vector<std::vector<std::string>> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string target = (i % 2 == 0) ? "alpha" : "beta";
    out.push_back({"left1", "left2", target, "right1", "right2"});
    // unrelated background sentences
    out.push_back({"noise" + std::to_string(rng.below(6)), "filler",
                   "noise" + std::to_string(rng.below(6))});
  }
  return out;
}

CbowConfig small_cfg() {
  CbowConfig cfg;
  cfg.dim = 16;
  cfg.window = 2;
  cfg.min_count = 5;
  cfg.negatives = 4;
  cfg.epochs = 5;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("min_count excludes rare words") {
  std::vector<std::vector<std::string>> corpus;
  // "rare" appears 4 times, "common" 6 times; pad with frequent filler so
  // training has material
  for (int i = 0; i < 4; ++i) corpus.push_back({"pad", "rare", "pad"});
  for (int i = 0; i < 6; ++i) corpus.push_back({"pad", "common", "pad"});
  CbowConfig cfg = small_cfg();
  cfg.epochs = 1;
  const auto res = cbow::train_cbow(corpus, cfg);
  CHECK(!res.table.id("rare").has_value());
  CHECK(res.table.id("common").has_value());
  CHECK(res.table.id("pad").has_value());
  CHECK(res.table.dim == 16);
  for (double v : res.table.vectors) CHECK(std::isfinite(v));
}

TEST_CASE("empty corpus is a usage error") {
  CHECK_THROWS_AS(cbow::train_cbow({}, small_cfg()), numeric::UsageError);
  CHECK_THROWS_AS(cbow::train_cbow({{}, {}}, small_cfg()),
                  numeric::UsageError);
  // nothing reaches min_count
  CHECK_THROWS_AS(cbow::train_cbow({{"one", "two"}}, small_cfg()),
                  numeric::UsageError);
}

TEST_CASE("identical-context words end up closer than cross pairs") {
  const auto corpus = synthetic_corpus(11);
  const auto res = cbow::train_cbow(corpus, small_cfg());
  const TypeEmbeddingTable& t = res.table;
  REQUIRE(t.id("alpha").has_value());
  REQUIRE(t.id("beta").has_value());
  const double same = t.cosine("alpha", "beta");
  for (const std::string other : {"left1", "left2", "right1", "right2",
                                  "filler"}) {
    REQUIRE(t.id(other).has_value());
    CHECK(same > t.cosine("alpha", other));
    CHECK(same > t.cosine("beta", other));
  }
}

TEST_CASE("loss decreases over epochs on the synthetic corpus") {
  const auto corpus = synthetic_corpus(3);
  const auto res = cbow::train_cbow(corpus, small_cfg());
  REQUIRE(res.epoch_loss.size() == 5);
  CHECK(res.epoch_loss.back() < res.epoch_loss.front());
}

TEST_CASE("same seed gives identical tables, different seed differs") {
  const auto corpus = synthetic_corpus(5, 60);
  CbowConfig cfg = small_cfg();
  cfg.epochs = 2;
  const auto a = cbow::train_cbow(corpus, cfg);
  const auto b = cbow::train_cbow(corpus, cfg);
  REQUIRE(a.table.vectors.size() == b.table.vectors.size());
  CHECK(a.table.vocab == b.table.vocab);
  for (std::size_t i = 0; i < a.table.vectors.size(); ++i)
    CHECK(a.table.vectors[i] == b.table.vectors[i]);

  cfg.seed = 99;
  const auto c = cbow::train_cbow(corpus, cfg);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.table.vectors.size(); ++i)
    if (a.table.vectors[i] != c.table.vectors[i]) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("embedding file round-trip") {
  const auto corpus = synthetic_corpus(2, 40);
  CbowConfig cfg = small_cfg();
  cfg.epochs = 1;
  const auto res = cbow::train_cbow(corpus, cfg);

  const std::string text = cbow::serialize_embeddings(res.table);
  // header "|V| dim"
  const std::string header = text.substr(0, text.find('\n'));
  CHECK(header == std::to_string(res.table.vocab.size()) + " 16");

  const TypeEmbeddingTable back = cbow::parse_embeddings(text);
  CHECK(back.vocab == res.table.vocab);
  CHECK(back.dim == res.table.dim);
  REQUIRE(back.vectors.size() == res.table.vectors.size());
  for (std::size_t i = 0; i < back.vectors.size(); ++i)
    CHECK(back.vectors[i] == doctest::Approx(res.table.vectors[i])
                                 .epsilon(1e-12));
  // re-serializing the parsed table is byte-identical
  CHECK(cbow::serialize_embeddings(back) == text);

  const std::string path = "/tmp/nucleus_test_emb.vec";
  cbow::save_embeddings(res.table, path);
  const TypeEmbeddingTable loaded = cbow::load_embeddings(path);
  CHECK(cbow::serialize_embeddings(loaded) == cbow::serialize_embeddings(res.table));
  std::remove(path.c_str());

  CHECK_THROWS_AS(cbow::parse_embeddings("not a header\n"),
                  numeric::UsageError);
  CHECK_THROWS_AS(cbow::load_embeddings("/tmp/definitely_missing.vec"),
                  numeric::UsageError);
}
