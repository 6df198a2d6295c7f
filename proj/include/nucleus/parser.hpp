#ifndef NUCLEUS_PARSER_HPP
#define NUCLEUS_PARSER_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nucleus/conllu.hpp"
#include "nucleus/numeric.hpp"

namespace nucleus::parser {

using conllu::Sentence;
using conllu::Treebank;

struct ParserConfig {
  std::size_t word_dim = 100;
  std::size_t char_dim = 24;
  std::size_t char_hidden = 25;   // per direction, char vector = 50
  std::size_t sent_layers = 2;
  std::size_t sent_hidden = 125;  // per direction, token vector = 250
  std::size_t mlp_hidden = 100;
  std::size_t rel_dim = 50;       // left-aux / right-aux embedding
  bool recursive = false;
  std::size_t epochs = 30;
  double exploration = 0.1;       // chance of following the raw argmax
  double word_dropout_alpha = 0.25;
  double margin = 1.0;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;

  std::size_t token_dim() const { return 2 * sent_hidden; }
  std::size_t feature_token_dim() const {
    return recursive ? 2 * token_dim() : token_dim();
  }
};

struct Vocab {
  // 0 = unknown; 1 = root symbol
  static constexpr std::size_t kUnk = 0;
  static constexpr std::size_t kRoot = 1;
  std::vector<std::string> words;       // index -> form
  std::map<std::string, std::size_t> word_ids;
  std::vector<long> word_counts;        // corpus frequency, for word dropout
  std::vector<std::string> chars;       // UTF-8 codepoints
  std::map<std::string, std::size_t> char_ids;
  std::vector<std::string> labels;      // deprel alphabet

  std::size_t word_id(const std::string& form) const;
  std::size_t char_id(const std::string& cp) const;
  std::size_t label_id(const std::string& label) const;

  static Vocab build(const Treebank& tb);
};

std::vector<std::string> utf8_codepoints(const std::string& s);

// ---- transition system (arc-hybrid + swap, root at buffer end) ----

enum class TransitionKind { shift, swap, left_arc, right_arc };

struct Transition {
  TransitionKind kind = TransitionKind::shift;
  std::size_t label = 0;  // for arc transitions

  bool operator==(const Transition&) const = default;
};

// Action ids: 0 = SHIFT, 1 = SWAP, 2+2l = LEFT-ARC(l), 3+2l = RIGHT-ARC(l).
std::size_t action_id(const Transition& t);
Transition action_from_id(std::size_t id);
std::size_t num_actions(std::size_t num_labels);

struct Configuration {
  std::vector<int> stack;   // back = top
  std::vector<int> buffer;  // front = index 0; ends with the root (id 0)
  std::vector<int> head;    // per token id, -1 while unattached
  std::vector<std::size_t> label;

  static Configuration initial(int n_tokens);
  bool terminal() const;
  int s0() const { return stack.empty() ? -1 : stack.back(); }
  int s1() const {
    return stack.size() < 2 ? -1 : stack[stack.size() - 2];
  }
  int b0() const { return buffer.empty() ? -1 : buffer.front(); }
};

std::vector<Transition> legal_transitions(const Configuration& c,
                                          std::size_t num_labels);
bool is_legal(const Configuration& c, const Transition& t);
void apply_transition(Configuration& c, const Transition& t);

// In-order positions of the gold tree; index 0 (the root) sorts last.
std::vector<int> projective_order(const Sentence& gold);

struct GoldTree {
  std::vector<int> head;           // by token id; [0] unused
  std::vector<std::size_t> label;  // label ids, by token id
  std::vector<int> proj_order;     // in-order positions; [0] sorts last

  static GoldTree from(const Sentence& s, const Vocab& v);
};

struct OracleCosts {
  // per action id; SIZE_MAX marks illegal actions
  std::vector<std::size_t> cost;
  std::vector<std::size_t> zero_cost_actions() const;
  // Off the gold path the minimum cost can exceed zero; training treats the
  // minimal-cost set as correct.
  std::vector<std::size_t> min_cost_actions() const;
  std::vector<std::size_t> above_min_cost_actions() const;
};

OracleCosts oracle_costs(const Configuration& c, const GoldTree& gold,
                         std::size_t num_labels);

// ---- model ----

class ParserModel {
 public:
  ParserModel(ParserConfig cfg, Vocab vocab);

  const ParserConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  const numeric::Tensor& word_embedding_table() const {
    return model_.lookup_table(word_emb_);
  }
  numeric::Model& params() { return model_; }
  const numeric::Model& params() const { return model_; }

  struct SentenceState {
    std::unique_ptr<numeric::Graph> graph;
    std::vector<numeric::Expr> token_vecs;  // 1..n at [id-1]
    std::vector<numeric::Expr> char_vecs;
    std::vector<numeric::Expr> composed;    // recursive mode, c_i
    numeric::Expr root_vec;                 // vector for the root symbol
    numeric::Expr root_composed;
    std::vector<std::size_t> word_ids;
  };

  // Builds the computation graph for a sentence. With word dropout, types are
  // replaced by the unknown symbol with probability alpha/(alpha+count).
  SentenceState encode_sentence(const Sentence& s, bool train_mode,
                                numeric::Rng* dropout_rng = nullptr) const;

  // Feature over stack-top-2 and buffer-front; missing slots use the learned
  // padding vector.
  numeric::Expr features(SentenceState& st, const Configuration& c) const;
  numeric::Expr score_actions(SentenceState& st, const Configuration& c) const;

  // Recursive composition on an aux arc between verbal tokens; updates the
  // head's composed vector in place. No-op in non-recursive mode.
  void maybe_compose(SentenceState& st, const Sentence& s,
                     const Configuration& c, const Transition& t) const;

  Sentence parse(const Sentence& s) const;
  // Also exposes final composed vectors (recursive mode) for probing.
  Sentence parse(const Sentence& s, SentenceState& st) const;

  std::size_t num_action_ids() const;

 private:
  friend ParserModel load_model(const std::string& path);
  ParserConfig cfg_;
  Vocab vocab_;
  numeric::Model model_;
  numeric::LookupParameter word_emb_, char_emb_;
  numeric::LstmParams char_fwd_, char_bwd_;
  numeric::BiLstm sent_bilstm_;
  numeric::Parameter root_vec_, pad_vec_;
  numeric::Parameter mlp_w1_, mlp_b1_, mlp_w2_, mlp_b2_;
  numeric::Parameter comp_w_, comp_b_, rel_left_, rel_right_;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_las = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> log;
  std::size_t best_epoch = 0;
  double best_dev_las = 0.0;
};

// Greedy training with the static-dynamic oracle; keeps the best-dev-LAS
// snapshot in `model`.
TrainResult train_parser(ParserModel& model, const Treebank& train,
                         const Treebank& dev);

Treebank parse_treebank(const ParserModel& m, const Treebank& tb);

struct EvalReport {
  double las = 0.0;
  double uas = 0.0;
  std::size_t tokens = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>>
      per_label;  // gold label -> (correct, total)
};

EvalReport evaluate_las(const Treebank& gold, const Treebank& pred,
                        bool include_punct = true);

void save_model(const ParserModel& m, const std::string& path);
ParserModel load_model(const std::string& path);

}  // namespace nucleus::parser

#endif
