#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nucleus/conllu.hpp"
#include "nucleus/numeric.hpp"
#include "nucleus/treebank_ops.hpp"

using namespace nucleus;
using conllu::Sentence;
using conllu::Treebank;

namespace {

Sentence parse_one(const std::string& text) {
  const Treebank tb = conllu::parse_conllu_string(text, /*strict=*/true);
  REQUIRE(tb.size() == 1);
  return tb[0];
}

// "I did this": finite main verb with an object.
const char* kDidThis =
    "1\tI\tI\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
    "2\tdid\tdo\tVERB\t_\tVerbForm=Fin\t0\troot\t_\t_\n"
    "3\tthis\tthis\tPRON\t_\t_\t2\tobj\t_\t_\n\n";

// "I could easily have done this": a 2-auxiliary AVC in UD style.
const char* kAvcUd =
    "1\tI\tI\tPRON\t_\t_\t5\tnsubj\t_\t_\n"
    "2\tcould\tcan\tAUX\t_\tVerbForm=Fin\t5\taux\t_\t_\n"
    "3\teasily\teasily\tADV\t_\t_\t5\tadvmod\t_\t_\n"
    "4\thave\thave\tAUX\t_\tVerbForm=Inf\t5\taux\t_\t_\n"
    "5\tdone\tdo\tVERB\t_\tVerbForm=Part\t0\troot\t_\t_\n"
    "6\tthis\tthis\tPRON\t_\t_\t5\tdobj\t_\t_\n\n";

}  // namespace

TEST_CASE("deprel base matching") {
  CHECK(treebank::deprel_matches("aux", "aux"));
  CHECK(treebank::deprel_matches("aux:pass", "aux"));
  CHECK_FALSE(treebank::deprel_matches("auxiliary", "aux"));
  CHECK_FALSE(treebank::deprel_matches("obj", "aux"));
}

TEST_CASE("finite main verb collection") {
  CHECK(treebank::collect_fmvs(parse_one(kDidThis)) == std::vector<int>{2});
  // could is an aux dependent; done is non-finite (and heads auxiliaries)
  CHECK(treebank::collect_fmvs(parse_one(kAvcUd)).empty());
  // no verbs at all
  const Sentence nouns = parse_one(
      "1\tcats\tcat\tNOUN\t_\t_\t0\troot\t_\t_\n"
      "2\tnow\tnow\tADV\t_\t_\t1\tadvmod\t_\t_\n\n");
  CHECK(treebank::collect_fmvs(nouns).empty());
  // copula dependent is excluded
  const Sentence cop = parse_one(
      "1\tthis\tthis\tPRON\t_\t_\t3\tnsubj\t_\t_\n"
      "2\tis\tbe\tAUX\t_\tVerbForm=Fin\t3\tcop\t_\t_\n"
      "3\tgood\tgood\tADJ\t_\t_\t0\troot\t_\t_\n\n");
  CHECK(treebank::collect_fmvs(cop).empty());
}

TEST_CASE("UD AVC collection on the 2-auxiliary example") {
  const auto avcs = treebank::collect_avcs_ud(parse_one(kAvcUd));
  REQUIRE(avcs.size() == 1);
  CHECK(avcs[0].main_verb_id == 5);
  CHECK(avcs[0].aux_ids == std::vector<int>{2, 4});
  CHECK(avcs[0].head_of_subtree == 5);  // NFMV under UD
}

TEST_CASE("a noun heading an aux relation is not an AVC") {
  const Sentence s = parse_one(
      "1\tis\tbe\tAUX\t_\t_\t2\taux\t_\t_\n"
      "2\tcat\tcat\tNOUN\t_\t_\t0\troot\t_\t_\n\n");
  CHECK(treebank::collect_avcs_ud(s).empty());
}

TEST_CASE("two independent AVCs give two records") {
  // "he has left and she has arrived" (conj clause)
  const Sentence s = parse_one(
      "1\the\the\tPRON\t_\t_\t3\tnsubj\t_\t_\n"
      "2\thas\thave\tAUX\t_\tVerbForm=Fin\t3\taux\t_\t_\n"
      "3\tleft\tleave\tVERB\t_\tVerbForm=Part\t0\troot\t_\t_\n"
      "4\tand\tand\tCCONJ\t_\t_\t7\tcc\t_\t_\n"
      "5\tshe\tshe\tPRON\t_\t_\t7\tnsubj\t_\t_\n"
      "6\thas\thave\tAUX\t_\tVerbForm=Fin\t7\taux\t_\t_\n"
      "7\tarrived\tarrive\tVERB\t_\tVerbForm=Part\t3\tconj\t_\t_\n\n");
  const auto avcs = treebank::collect_avcs_ud(s);
  REQUIRE(avcs.size() == 2);
  // brute-force check: every (head, aux-child) verbal pair is covered
  for (int mv : {3, 7}) {
    bool found = false;
    for (const auto& a : avcs)
      if (a.main_verb_id == mv) {
        found = true;
        CHECK(a.aux_ids == std::vector<int>{mv - 1});
      }
    CHECK(found);
  }
}

TEST_CASE("UD to MS transform reproduces the worked example exactly") {
  const Sentence ms = treebank::transform_ud_to_ms(parse_one(kAvcUd));
  CHECK_NOTHROW(conllu::validate_tree(ms));
  // root moves done -> could; chain could -> have -> done
  CHECK(ms.at(2).head == 0);
  CHECK(ms.at(2).deprel == "root");
  CHECK(ms.at(4).head == 2);
  CHECK(ms.at(4).deprel == "aux");
  CHECK(ms.at(5).head == 4);
  CHECK(ms.at(5).deprel == "aux");
  // pre-verbal dependents go to the next AVC element to their right
  CHECK(ms.at(1).head == 2);
  CHECK(ms.at(1).deprel == "nsubj");
  CHECK(ms.at(3).head == 4);
  CHECK(ms.at(3).deprel == "advmod");
  // post-verbal dependents stay on the main verb
  CHECK(ms.at(6).head == 5);
  CHECK(ms.at(6).deprel == "dobj");
}

TEST_CASE("all-to-maux reattachment policy") {
  treebank::TransformOptions opt;
  opt.reattach = treebank::MsReattachPolicy::all_to_maux;
  const Sentence ms = treebank::transform_ud_to_ms(parse_one(kAvcUd), opt);
  CHECK(ms.at(1).head == 2);
  CHECK(ms.at(3).head == 2);  // easily also moves to the chain top
}

TEST_CASE("sentences without AVCs transform to themselves") {
  const Sentence s = parse_one(kDidThis);
  CHECK(treebank::transform_ud_to_ms(s) == s);
}

TEST_CASE("passive auxiliaries transform like any aux") {
  const Sentence s = parse_one(
      "1\tit\tit\tPRON\t_\t_\t3\tnsubj\t_\t_\n"
      "2\twas\tbe\tAUX\t_\tVerbForm=Fin\t3\taux:pass\t_\t_\n"
      "3\tdone\tdo\tVERB\t_\tVerbForm=Part\t0\troot\t_\t_\n\n");
  const Sentence ms = treebank::transform_ud_to_ms(s);
  CHECK(ms.at(2).head == 0);
  CHECK(ms.at(3).head == 2);
  CHECK(ms.at(3).deprel == "aux");
}

TEST_CASE("MS detection and MS AVC collection") {
  const Treebank ud = {parse_one(kAvcUd), parse_one(kDidThis)};
  const Treebank ms = treebank::transform_ud_to_ms(ud);
  CHECK_FALSE(treebank::looks_like_ms(ud));
  CHECK(treebank::looks_like_ms(ms));

  const auto avcs = treebank::collect_avcs_ms(ms[0]);
  REQUIRE(avcs.size() == 1);
  CHECK(avcs[0].head_of_subtree == 2);  // MAUX = chain top
  CHECK(avcs[0].main_verb_id == 5);
  CHECK(avcs[0].aux_ids == std::vector<int>{2, 4});

  // single-aux chain: could -> work
  const Sentence one = treebank::transform_ud_to_ms(parse_one(
      "1\the\the\tPRON\t_\t_\t3\tnsubj\t_\t_\n"
      "2\tcould\tcan\tAUX\t_\tVerbForm=Fin\t3\taux\t_\t_\n"
      "3\twork\twork\tVERB\t_\tVerbForm=Inf\t0\troot\t_\t_\n\n"));
  const auto a1 = treebank::collect_avcs_ms(one);
  REQUIRE(a1.size() == 1);
  CHECK(a1[0].head_of_subtree == 2);
  CHECK(a1[0].main_verb_id == 3);
}

TEST_CASE("invariant: AVC membership is preserved by the transform") {
  numeric::Rng rng(3);
  // randomized small AVC sentences: aux chain length 1-3 plus random deps
  for (int trial = 0; trial < 100; ++trial) {
    const int n_aux = 1 + static_cast<int>(rng.below(3));
    std::ostringstream text;
    const int mv = n_aux + 2;
    text << "1\ts\ts\tPRON\t_\t_\t" << mv << "\tnsubj\t_\t_\n";
    for (int i = 0; i < n_aux; ++i)
      text << i + 2 << "\ta" << i << "\ta\tAUX\t_\tVerbForm=Fin\t" << mv
           << "\taux\t_\t_\n";
    text << mv << "\tv\tv\tVERB\t_\tVerbForm=Part\t0\troot\t_\t_\n";
    text << mv + 1 << "\to\to\tNOUN\t_\t_\t" << mv << "\tobj\t_\t_\n\n";
    const Sentence ud = parse_one(text.str());
    const Sentence ms = treebank::transform_ud_to_ms(ud);
    CHECK_NOTHROW(conllu::validate_tree(ms));
    const auto a_ud = treebank::collect_avcs_ud(ud);
    const auto a_ms = treebank::collect_avcs_ms(ms);
    REQUIRE(a_ud.size() == 1);
    REQUIRE(a_ms.size() == 1);
    CHECK(a_ud[0].main_verb_id == a_ms[0].main_verb_id);
    CHECK(a_ud[0].aux_ids == a_ms[0].aux_ids);
  }
}

TEST_CASE("aux lemma filter drops unlisted auxiliaries") {
  treebank::CollectOptions opt;
  opt.aux_lemma_filter = std::set<std::string>{"have"};
  const auto avcs = treebank::collect_avcs_ud(parse_one(kAvcUd), opt);
  REQUIRE(avcs.size() == 1);
  CHECK(avcs[0].aux_ids == std::vector<int>{4});  // "can" filtered out
}

TEST_CASE("transitivity labels") {
  CHECK(treebank::transitivity_label(parse_one(kDidThis), 2) == "transitive");
  CHECK(treebank::transitivity_label(parse_one(kAvcUd), 5) ==
        "transitive");  // legacy dobj counts
  const Sentence intr = parse_one(
      "1\the\the\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
      "2\tsleeps\tsleep\tVERB\t_\tVerbForm=Fin\t0\troot\t_\t_\n\n");
  CHECK(treebank::transitivity_label(intr, 2) == "intransitive");
}

TEST_CASE("agreement labels") {
  const Sentence s = parse_one(
      "1\the\the\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
      "2\tsleeps\tsleep\tVERB\t_\tNumber=Sing|Person=3|VerbForm=Fin\t0\troot"
      "\t_\t_\n"
      "3\tnow\tnow\tADV\t_\tTense=Past\t2\tadvmod\t_\t_\n\n");
  CHECK(treebank::agreement_label(s, 2) ==
        std::optional<std::string>("3|Sing"));
  CHECK_FALSE(treebank::agreement_label(s, 3).has_value());
  CHECK_FALSE(treebank::agreement_label(s, 1).has_value());
}

TEST_CASE("AVC agreement comes from the agreement-bearing auxiliary") {
  // two auxiliaries; only the outermost (first) carries Person+Number
  const Sentence s = parse_one(
      "1\the\the\tPRON\t_\t_\t4\tnsubj\t_\t_\n"
      "2\thas\thave\tAUX\t_\tNumber=Sing|Person=3|VerbForm=Fin\t4\taux\t_\t_\n"
      "3\tbeen\tbe\tAUX\t_\tVerbForm=Part\t4\taux\t_\t_\n"
      "4\tworking\twork\tVERB\t_\tVerbForm=Ger\t0\troot\t_\t_\n\n");
  const auto avcs = treebank::collect_avcs_ud(s);
  REQUIRE(avcs.size() == 1);
  CHECK(treebank::avc_agreement_label(s, avcs[0]) ==
        std::optional<std::string>("3|Sing"));

  // exhaustive: moving the features to the second aux still finds them
  Sentence s2 = s;
  s2.at(3).feats = s.at(2).feats;
  s2.at(2).feats = conllu::MorphFeatures::parse("VerbForm=Fin");
  CHECK(treebank::avc_agreement_label(s2, avcs[0]) ==
        std::optional<std::string>("3|Sing"));

  // none carries both -> absent
  Sentence s3 = s;
  s3.at(2).feats = conllu::MorphFeatures::parse("Person=3");
  CHECK_FALSE(treebank::avc_agreement_label(s3, avcs[0]).has_value());
}

TEST_CASE("nearest punct prefers the closest right child") {
  const Sentence s = parse_one(
      "1\t,\t,\tPUNCT\t_\t_\t4\tpunct\t_\t_\n"
      "2\tso\tso\tADV\t_\t_\t4\tadvmod\t_\t_\n"
      "3\the\the\tPRON\t_\t_\t4\tnsubj\t_\t_\n"
      "4\tleft\tleave\tVERB\t_\tVerbForm=Fin\t0\troot\t_\t_\n"
      "5\ttoday\ttoday\tNOUN\t_\t_\t4\tobl\t_\t_\n"
      "6\t.\t.\tPUNCT\t_\t_\t4\tpunct\t_\t_\n\n");
  CHECK(treebank::nearest_punct(s, 4) == std::optional<int>(6));

  // only a left punct child
  Sentence left = s;
  left.at(6).head = 5;
  left.at(6).deprel = "dep";
  CHECK(treebank::nearest_punct(left, 4) == std::optional<int>(1));

  // no punct children at all
  Sentence none = left;
  none.at(1).head = 2;
  none.at(1).deprel = "dep";
  CHECK_FALSE(treebank::nearest_punct(none, 4).has_value());
}

TEST_CASE("task dataset assembly and TSV round-trip") {
  const Treebank train = {
      parse_one(kDidThis),
      parse_one(
          "1\the\the\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
          "2\tsleeps\tsleep\tVERB\t_\tNumber=Sing|Person=3|VerbForm=Fin\t0"
          "\troot\t_\t_\n"
          "3\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_\n\n")};
  const Treebank dev = {parse_one(
      "1\tdogs\tdog\tNOUN\t_\t_\t2\tnsubj\t_\t_\n"
      "2\tbark\tbark\tVERB\t_\tNumber=Plur|Person=3|VerbForm=Fin\t0\troot"
      "\t_\t_\n"
      "3\t!\t!\tPUNCT\t_\t_\t2\tpunct\t_\t_\n\n")};

  const auto t = treebank::build_task_dataset(
      train, dev, treebank::Task::transitivity, treebank::TargetKind::FMV,
      treebank::Representation::UD);
  REQUIRE(t.train.size() == 2);
  CHECK(t.train[0].label == "transitive");
  CHECK(t.train[1].label == "intransitive");
  REQUIRE(t.dev.size() == 1);
  CHECK(t.dev[0].label == "intransitive");

  // agreement instances appear only where Person+Number exist
  const auto a = treebank::build_task_dataset(
      train, dev, treebank::Task::agreement, treebank::TargetKind::FMV,
      treebank::Representation::UD);
  REQUIRE(a.train.size() == 1);
  CHECK(a.train[0].label == "3|Sing");
  REQUIRE(a.dev.size() == 1);
  CHECK(a.dev[0].label == "3|Plur");

  // punctuation controls inherit the governing FMV's label
  const auto p = treebank::build_task_dataset(
      train, dev, treebank::Task::agreement, treebank::TargetKind::PUNCT,
      treebank::Representation::UD);
  REQUIRE(p.train.size() == 1);
  CHECK(p.train[0].target_id == 3);
  CHECK(p.train[0].label == "3|Sing");

  const std::string tsv = treebank::dataset_split_tsv(a.train, a.task);
  const auto back = treebank::parse_dataset_split_tsv(tsv);
  REQUIRE(back.size() == a.train.size());
  CHECK(back[0].sentence_index == a.train[0].sentence_index);
  CHECK(back[0].target_id == a.train[0].target_id);
  CHECK(back[0].label == a.train[0].label);
  CHECK(back[0].target_kind == a.train[0].target_kind);
}
