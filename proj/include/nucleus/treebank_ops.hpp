#ifndef NUCLEUS_TREEBANK_OPS_HPP
#define NUCLEUS_TREEBANK_OPS_HPP

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nucleus/conllu.hpp"

namespace nucleus::treebank {

using conllu::Sentence;
using conllu::Treebank;

// "aux:pass" matches "aux", "auxiliary" does not.
bool deprel_matches(const std::string& deprel, const std::string& base);
bool is_verbal(const conllu::Token& t);  // UPOS in {VERB, AUX}

struct AvcRecord {
  int sentence_index = -1;
  int main_verb_id = 0;            // mv
  std::vector<int> aux_ids;        // left-to-right
  int head_of_subtree = 0;         // NFMV under UD, MAUX under MS
};

enum class TargetKind { FMV, NFMV, MAUX, PUNCT };
enum class Task { transitivity, agreement };
enum class Representation { UD, MS };

std::string to_string(TargetKind k);
std::string to_string(Task t);
std::string to_string(Representation r);
TargetKind target_kind_from_string(const std::string& s);
Task task_from_string(const std::string& s);
Representation representation_from_string(const std::string& s);

struct ProbeInstance {
  int sentence_index = -1;
  int target_id = 0;
  TargetKind target_kind = TargetKind::FMV;
  std::string label;  // task label ("transitive" / "3|Sing" / ...)
};

struct TaskDataset {
  Task task = Task::transitivity;
  TargetKind target_kind = TargetKind::FMV;
  Representation representation = Representation::UD;
  std::vector<ProbeInstance> train;
  std::vector<ProbeInstance> dev;
};

struct CollectOptions {
  // When set, an aux dependent whose lemma is not listed is not treated as
  // an auxiliary (the Catalan noisy-aux filter).
  std::optional<std::set<std::string>> aux_lemma_filter;
  // Reject FMV candidates that themselves head aux/cop children (they head a
  // larger verbal construction). The literal rule only checks incoming
  // relations; toggle for that reading.
  bool fmv_reject_aux_heads = true;
};

enum class MsReattachPolicy {
  next_right_element,  // pre-verbal dependents go to the AVC element
                       // immediately to their right
  all_to_maux,         // pre-verbal dependents all go to the chain top
};

struct TransformOptions {
  CollectOptions collect;
  MsReattachPolicy reattach = MsReattachPolicy::next_right_element;
};

std::vector<int> collect_fmvs(const Sentence& s,
                              const CollectOptions& opt = {});
std::vector<AvcRecord> collect_avcs_ud(const Sentence& s,
                                       const CollectOptions& opt = {});
std::vector<AvcRecord> collect_avcs_ms(const Sentence& s,
                                       const CollectOptions& opt = {});

Sentence transform_ud_to_ms(const Sentence& s,
                            const TransformOptions& opt = {});
Treebank transform_ud_to_ms(const Treebank& tb,
                            const TransformOptions& opt = {});

// True when the treebank's aux relations run auxiliary-to-verb (MS style).
bool looks_like_ms(const Treebank& tb);

std::string transitivity_label(const Sentence& s, int mv);
std::optional<std::string> agreement_label(const Sentence& s, int verb);
std::optional<int> nearest_punct(const Sentence& s, int fmv);

// Agreement-bearing auxiliary of an AVC: first chain element (left-to-right)
// carrying both Person and Number; falls back to the subtree head.
std::optional<std::string> avc_agreement_label(const Sentence& s,
                                               const AvcRecord& avc);

TaskDataset build_task_dataset(const Treebank& train, const Treebank& dev,
                               Task task, TargetKind target_kind,
                               Representation representation,
                               const CollectOptions& opt = {});

// Tab-separated: sentence_index, target_token_id, target_kind, task, label.
std::string dataset_split_tsv(const std::vector<ProbeInstance>& insts,
                              Task task);
std::vector<ProbeInstance> parse_dataset_split_tsv(const std::string& text);

}  // namespace nucleus::treebank

#endif
