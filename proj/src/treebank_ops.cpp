#include "nucleus/treebank_ops.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace nucleus::treebank {

using conllu::Token;
using conllu::ValidationError;

bool deprel_matches(const std::string& deprel, const std::string& base) {
  if (deprel == base) return true;
  return deprel.size() > base.size() && deprel[base.size()] == ':' &&
         deprel.compare(0, base.size(), base) == 0;
}

bool is_verbal(const Token& t) { return t.upos == "VERB" || t.upos == "AUX"; }

std::string to_string(TargetKind k) {
  switch (k) {
    case TargetKind::FMV: return "FMV";
    case TargetKind::NFMV: return "NFMV";
    case TargetKind::MAUX: return "MAUX";
    case TargetKind::PUNCT: return "PUNCT";
  }
  return "?";
}

std::string to_string(Task t) {
  return t == Task::transitivity ? "transitivity" : "agreement";
}

std::string to_string(Representation r) { return r == Representation::UD ? "ud" : "ms"; }

TargetKind target_kind_from_string(const std::string& s) {
  if (s == "FMV" || s == "fmv") return TargetKind::FMV;
  if (s == "NFMV" || s == "nfmv") return TargetKind::NFMV;
  if (s == "MAUX" || s == "maux") return TargetKind::MAUX;
  if (s == "PUNCT" || s == "punct") return TargetKind::PUNCT;
  throw std::runtime_error("unknown target kind: " + s);
}

Task task_from_string(const std::string& s) {
  if (s == "transitivity" || s == "T") return Task::transitivity;
  if (s == "agreement" || s == "A") return Task::agreement;
  throw std::runtime_error("unknown task: " + s);
}

Representation representation_from_string(const std::string& s) {
  if (s == "ud") return Representation::UD;
  if (s == "ms") return Representation::MS;
  throw std::runtime_error("unknown representation: " + s);
}

namespace {

// Does the aux-relation filter accept this dependent as a real auxiliary?
bool aux_dep_ok(const Token& dep, const CollectOptions& opt) {
  if (!opt.aux_lemma_filter) return true;
  return opt.aux_lemma_filter->count(dep.lemma) > 0;
}

bool is_aux_edge_ud(const Sentence& s, const Token& dep,
                    const CollectOptions& opt) {
  if (!deprel_matches(dep.deprel, "aux")) return false;
  if (dep.head == 0) return false;
  if (!is_verbal(dep) || !is_verbal(s.at(dep.head))) return false;
  return aux_dep_ok(dep, opt);
}

}  // namespace

std::vector<int> collect_fmvs(const Sentence& s, const CollectOptions& opt) {
  std::vector<int> out;
  for (const Token& t : s.tokens) {
    if (!t.feats.has("VerbForm", "Fin")) continue;
    if (deprel_matches(t.deprel, "aux") || deprel_matches(t.deprel, "cop"))
      continue;
    if (opt.fmv_reject_aux_heads) {
      bool heads_aux = false;
      for (int c : s.children(t.id)) {
        const Token& ct = s.at(c);
        if ((deprel_matches(ct.deprel, "aux") && aux_dep_ok(ct, opt)) ||
            deprel_matches(ct.deprel, "cop")) {
          heads_aux = true;
          break;
        }
      }
      if (heads_aux) continue;
    }
    out.push_back(t.id);
  }
  return out;
}

std::vector<AvcRecord> collect_avcs_ud(const Sentence& s,
                                       const CollectOptions& opt) {
  std::vector<AvcRecord> out;
  std::map<int, std::size_t> by_mv;  // main verb id -> index in out
  for (const Token& t : s.tokens) {
    if (!is_aux_edge_ud(s, t, opt)) continue;
    auto it = by_mv.find(t.head);
    if (it == by_mv.end()) {
      AvcRecord rec;
      rec.main_verb_id = t.head;
      rec.head_of_subtree = t.head;
      rec.aux_ids.push_back(t.id);
      by_mv.emplace(t.head, out.size());
      out.push_back(std::move(rec));
    } else {
      out[it->second].aux_ids.push_back(t.id);
    }
  }
  // report records in main-verb order
  std::sort(out.begin(), out.end(),
            [](const AvcRecord& a, const AvcRecord& b) {
              return a.main_verb_id < b.main_verb_id;
            });
  return out;
}

Sentence transform_ud_to_ms(const Sentence& s, const TransformOptions& opt) {
  conllu::validate_tree(s);
  Sentence out = s;
  for (const AvcRecord& avc : collect_avcs_ud(s, opt.collect)) {
    std::vector<int> chain = avc.aux_ids;  // already left-to-right
    chain.push_back(avc.main_verb_id);
    const int top = chain.front();
    const int mv = avc.main_verb_id;

    // chain-top inherits the main verb's attachment
    out.at(top).head = s.at(mv).head;
    out.at(top).deprel = s.at(mv).deprel;
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
      out.at(chain[k + 1]).head = chain[k];
      out.at(chain[k + 1]).deprel = "aux";
    }
    // re-attach the main verb's other dependents
    for (int c : s.children(mv)) {
      if (std::find(chain.begin(), chain.end(), c) != chain.end()) continue;
      if (c > mv) continue;  // post-verbal dependents keep the main verb
      if (opt.reattach == MsReattachPolicy::all_to_maux) {
        out.at(c).head = top;
      } else {
        int target = mv;
        for (int e : chain) {
          if (e > c) {
            target = e;
            break;
          }
        }
        out.at(c).head = target;
      }
    }
  }
  conllu::validate_tree(out);
  return out;
}

Treebank transform_ud_to_ms(const Treebank& tb, const TransformOptions& opt) {
  Treebank out;
  out.reserve(tb.size());
  for (const Sentence& s : tb) out.push_back(transform_ud_to_ms(s, opt));
  return out;
}

bool looks_like_ms(const Treebank& tb) {
  long aux_headed = 0, total = 0;
  for (const Sentence& s : tb) {
    for (const Token& t : s.tokens) {
      if (!deprel_matches(t.deprel, "aux") || t.head == 0) continue;
      ++total;
      if (s.at(t.head).upos == "AUX") ++aux_headed;
    }
  }
  return total > 0 && 2 * aux_headed > total;
}

std::vector<AvcRecord> collect_avcs_ms(const Sentence& s,
                                       const CollectOptions& opt) {
  const int n = s.size();
  std::vector<AvcRecord> out;
  std::vector<bool> seen(static_cast<std::size_t>(n) + 1, false);

  auto is_aux_edge = [&](const Token& dep) {
    // in MS the auxiliary is the head of the relation
    return deprel_matches(dep.deprel, "aux") && dep.head != 0 &&
           is_verbal(dep) && is_verbal(s.at(dep.head)) &&
           (!opt.aux_lemma_filter ||
            opt.aux_lemma_filter->count(s.at(dep.head).lemma) > 0);
  };
  auto aux_child = [&](int id) -> int {
    for (int c : s.children(id))
      if (is_aux_edge(s.at(c))) return c;
    return 0;
  };

  for (const Token& t : s.tokens) {
    if (!is_aux_edge(t)) continue;
    if (seen[static_cast<std::size_t>(t.head)]) continue;
    // climb to the auxiliary that is not itself an aux dependent
    int top = t.head;
    int steps = 0;
    while (is_aux_edge(s.at(top))) {
      top = s.at(top).head;
      if (++steps > n) throw ValidationError("cyclic aux chain");
    }
    // descend to the node heading no aux relation: the main verb
    AvcRecord rec;
    rec.head_of_subtree = top;
    int cur = top;
    steps = 0;
    while (int c = aux_child(cur)) {
      rec.aux_ids.push_back(cur);
      seen[static_cast<std::size_t>(cur)] = true;
      cur = c;
      if (++steps > n) throw ValidationError("cyclic aux chain");
    }
    rec.main_verb_id = cur;
    std::sort(rec.aux_ids.begin(), rec.aux_ids.end());
    out.push_back(std::move(rec));
  }
  std::sort(out.begin(), out.end(),
            [](const AvcRecord& a, const AvcRecord& b) {
              return a.main_verb_id < b.main_verb_id;
            });
  return out;
}

std::string transitivity_label(const Sentence& s, int mv) {
  for (int c : s.children(mv)) {
    const std::string& d = s.at(c).deprel;
    if (deprel_matches(d, "obj") || deprel_matches(d, "dobj"))
      return "transitive";
  }
  return "intransitive";
}

std::optional<std::string> agreement_label(const Sentence& s, int verb) {
  const Token& t = s.at(verb);
  auto person = t.feats.get("Person");
  auto number = t.feats.get("Number");
  if (!person || !number) return std::nullopt;
  return *person + "|" + *number;
}

std::optional<std::string> avc_agreement_label(const Sentence& s,
                                               const AvcRecord& avc) {
  for (int a : avc.aux_ids) {
    if (auto l = agreement_label(s, a)) return l;
  }
  return agreement_label(s, avc.head_of_subtree);
}

std::optional<int> nearest_punct(const Sentence& s, int fmv) {
  int best_right = 0, best_left = 0;
  for (int c : s.children(fmv)) {
    if (!deprel_matches(s.at(c).deprel, "punct")) continue;
    if (c > fmv) {
      if (best_right == 0 || c < best_right) best_right = c;
    } else {
      if (best_left == 0 || c > best_left) best_left = c;
    }
  }
  if (best_right) return best_right;
  if (best_left) return best_left;
  return std::nullopt;
}

namespace {

void collect_split(const Treebank& tb, Task task, TargetKind kind,
                   Representation repr, const CollectOptions& opt,
                   std::vector<ProbeInstance>& out) {
  if ((kind == TargetKind::NFMV && repr != Representation::UD) ||
      (kind == TargetKind::MAUX && repr != Representation::MS))
    throw std::runtime_error("target kind " + to_string(kind) +
                             " requires the " +
                             (kind == TargetKind::NFMV ? "ud" : "ms") +
                             " representation");
  for (std::size_t si = 0; si < tb.size(); ++si) {
    const Sentence& s = tb[si];
    auto add = [&](int target, const std::optional<std::string>& label) {
      if (!label) return;  // undefined task for this target
      ProbeInstance inst;
      inst.sentence_index = static_cast<int>(si);
      inst.target_id = target;
      inst.target_kind = kind;
      inst.label = *label;
      out.push_back(std::move(inst));
    };
    switch (kind) {
      case TargetKind::FMV:
      case TargetKind::PUNCT:
        for (int fmv : collect_fmvs(s, opt)) {
          std::optional<std::string> label =
              task == Task::transitivity
                  ? std::optional<std::string>(transitivity_label(s, fmv))
                  : agreement_label(s, fmv);
          if (kind == TargetKind::FMV) {
            add(fmv, label);
          } else if (auto p = nearest_punct(s, fmv)) {
            add(*p, label);  // punct inherits the governing FMV's label
          }
        }
        break;
      case TargetKind::NFMV:
      case TargetKind::MAUX: {
        auto avcs = kind == TargetKind::NFMV ? collect_avcs_ud(s, opt)
                                             : collect_avcs_ms(s, opt);
        for (const AvcRecord& avc : avcs) {
          std::optional<std::string> label =
              task == Task::transitivity
                  ? std::optional<std::string>(
                        transitivity_label(s, avc.main_verb_id))
                  : avc_agreement_label(s, avc);
          add(avc.head_of_subtree, label);
        }
        break;
      }
    }
  }
}

}  // namespace

TaskDataset build_task_dataset(const Treebank& train, const Treebank& dev,
                               Task task, TargetKind target_kind,
                               Representation representation,
                               const CollectOptions& opt) {
  TaskDataset ds;
  ds.task = task;
  ds.target_kind = target_kind;
  ds.representation = representation;
  collect_split(train, task, target_kind, representation, opt, ds.train);
  collect_split(dev, task, target_kind, representation, opt, ds.dev);
  return ds;
}

std::string dataset_split_tsv(const std::vector<ProbeInstance>& insts,
                              Task task) {
  std::ostringstream out;
  for (const ProbeInstance& i : insts) {
    out << i.sentence_index << '\t' << i.target_id << '\t'
        << to_string(i.target_kind) << '\t' << to_string(task) << '\t'
        << i.label << '\n';
  }
  return out.str();
}

std::vector<ProbeInstance> parse_dataset_split_tsv(const std::string& text) {
  std::vector<ProbeInstance> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ProbeInstance inst;
    std::string kind, task;
    ls >> inst.sentence_index >> inst.target_id >> kind >> task >> inst.label;
    if (!ls) throw std::runtime_error("malformed dataset line: " + line);
    inst.target_kind = target_kind_from_string(kind);
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace nucleus::treebank
