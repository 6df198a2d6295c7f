#include "nucleus/parser.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "nucleus/treebank_ops.hpp"

namespace nucleus::parser {

using numeric::Expr;
using numeric::Graph;
using numeric::Rng;
using numeric::Tensor;
using numeric::UsageError;

constexpr std::size_t kIllegal = std::numeric_limits<std::size_t>::max();

std::vector<std::string> utf8_codepoints(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if ((c & 0x80u) == 0x00u) len = 1;
    else if ((c & 0xE0u) == 0xC0u) len = 2;
    else if ((c & 0xF0u) == 0xE0u) len = 3;
    else if ((c & 0xF8u) == 0xF0u) len = 4;
    if (i + len > s.size()) len = 1;
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

std::size_t Vocab::word_id(const std::string& form) const {
  auto it = word_ids.find(form);
  return it == word_ids.end() ? kUnk : it->second;
}

std::size_t Vocab::char_id(const std::string& cp) const {
  auto it = char_ids.find(cp);
  return it == char_ids.end() ? 0 : it->second;
}

std::size_t Vocab::label_id(const std::string& label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return i;
  throw UsageError("unknown dependency label: " + label);
}

Vocab Vocab::build(const Treebank& tb) {
  Vocab v;
  v.words = {"<unk>", "<root>"};
  v.word_counts = {0, 0};
  v.word_ids = {{"<unk>", 0}, {"<root>", 1}};
  v.chars = {"<unk>"};
  v.char_ids = {{"<unk>", 0}};
  std::map<std::string, std::size_t> label_ids;
  for (const Sentence& s : tb) {
    for (const conllu::Token& t : s.tokens) {
      auto [it, inserted] = v.word_ids.try_emplace(t.form, v.words.size());
      if (inserted) {
        v.words.push_back(t.form);
        v.word_counts.push_back(0);
      }
      v.word_counts[it->second] += 1;
      for (const std::string& cp : utf8_codepoints(t.form)) {
        if (v.char_ids.try_emplace(cp, v.chars.size()).second)
          v.chars.push_back(cp);
      }
      if (label_ids.try_emplace(t.deprel, v.labels.size()).second)
        v.labels.push_back(t.deprel);
    }
  }
  return v;
}

// ---- transition system ----

std::size_t action_id(const Transition& t) {
  switch (t.kind) {
    case TransitionKind::shift: return 0;
    case TransitionKind::swap: return 1;
    case TransitionKind::left_arc: return 2 + 2 * t.label;
    case TransitionKind::right_arc: return 3 + 2 * t.label;
  }
  return 0;
}

Transition action_from_id(std::size_t id) {
  if (id == 0) return {TransitionKind::shift, 0};
  if (id == 1) return {TransitionKind::swap, 0};
  const std::size_t l = (id - 2) / 2;
  return {(id % 2 == 0) ? TransitionKind::left_arc : TransitionKind::right_arc,
          l};
}

std::size_t num_actions(std::size_t num_labels) { return 2 + 2 * num_labels; }

Configuration Configuration::initial(int n_tokens) {
  Configuration c;
  c.buffer.reserve(static_cast<std::size_t>(n_tokens) + 1);
  for (int i = 1; i <= n_tokens; ++i) c.buffer.push_back(i);
  c.buffer.push_back(0);  // artificial root at the end
  c.head.assign(static_cast<std::size_t>(n_tokens) + 1, -1);
  c.label.assign(static_cast<std::size_t>(n_tokens) + 1, 0);
  return c;
}

bool Configuration::terminal() const {
  return stack.empty() && buffer.size() == 1;
}

bool is_legal(const Configuration& c, const Transition& t) {
  switch (t.kind) {
    case TransitionKind::shift:
      return c.buffer.size() > 1;
    case TransitionKind::left_arc:
      // attaching to the artificial root is reserved for the last token,
      // which keeps the output single-rooted
      return !c.stack.empty() && !c.buffer.empty() &&
             !(c.b0() == 0 && c.stack.size() > 1);
    case TransitionKind::right_arc:
      return c.stack.size() >= 2;
    case TransitionKind::swap:
      return c.stack.size() >= 2 && c.s1() < c.s0();
  }
  return false;
}

std::vector<Transition> legal_transitions(const Configuration& c,
                                          std::size_t num_labels) {
  std::vector<Transition> out;
  if (is_legal(c, {TransitionKind::shift, 0}))
    out.push_back({TransitionKind::shift, 0});
  if (is_legal(c, {TransitionKind::swap, 0}))
    out.push_back({TransitionKind::swap, 0});
  for (std::size_t l = 0; l < num_labels; ++l) {
    if (is_legal(c, {TransitionKind::left_arc, l}))
      out.push_back({TransitionKind::left_arc, l});
    if (is_legal(c, {TransitionKind::right_arc, l}))
      out.push_back({TransitionKind::right_arc, l});
  }
  return out;
}

void apply_transition(Configuration& c, const Transition& t) {
  if (!is_legal(c, t)) throw UsageError("illegal transition applied");
  switch (t.kind) {
    case TransitionKind::shift:
      c.stack.push_back(c.buffer.front());
      c.buffer.erase(c.buffer.begin());
      break;
    case TransitionKind::swap: {
      const int s1 = c.s1();
      c.stack.erase(c.stack.end() - 2);
      c.buffer.insert(c.buffer.begin(), s1);
      break;
    }
    case TransitionKind::left_arc: {
      const int dep = c.s0();
      c.head[static_cast<std::size_t>(dep)] = c.b0();
      c.label[static_cast<std::size_t>(dep)] = t.label;
      c.stack.pop_back();
      break;
    }
    case TransitionKind::right_arc: {
      const int dep = c.s0();
      c.head[static_cast<std::size_t>(dep)] = c.s1();
      c.label[static_cast<std::size_t>(dep)] = t.label;
      c.stack.pop_back();
      break;
    }
  }
}

std::vector<int> projective_order(const Sentence& gold) {
  const int n = gold.size();
  std::vector<int> po(static_cast<std::size_t>(n) + 1, 0);
  int counter = 0;
  auto visit = [&](auto&& self, int node) -> void {
    std::vector<int> kids = gold.children(node);
    bool placed = false;
    for (int k : kids) {
      if (k > node && !placed) {
        po[static_cast<std::size_t>(node)] = counter++;
        placed = true;
      }
      self(self, k);
    }
    if (!placed) po[static_cast<std::size_t>(node)] = counter++;
  };
  for (int r : gold.children(0)) visit(visit, r);
  po[0] = counter;  // root sorts after everything
  return po;
}

GoldTree GoldTree::from(const Sentence& s, const Vocab& v) {
  GoldTree g;
  const int n = s.size();
  g.head.assign(static_cast<std::size_t>(n) + 1, -1);
  g.label.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const conllu::Token& t : s.tokens) {
    g.head[static_cast<std::size_t>(t.id)] = t.head;
    g.label[static_cast<std::size_t>(t.id)] = v.label_id(t.deprel);
  }
  g.proj_order = projective_order(s);
  return g;
}

std::vector<std::size_t> OracleCosts::zero_cost_actions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cost.size(); ++i)
    if (cost[i] == 0) out.push_back(i);
  return out;
}

std::vector<std::size_t> OracleCosts::min_cost_actions() const {
  std::size_t mn = kIllegal;
  for (std::size_t c : cost)
    if (c < mn) mn = c;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cost.size(); ++i)
    if (cost[i] == mn) out.push_back(i);
  return out;
}

std::vector<std::size_t> OracleCosts::above_min_cost_actions() const {
  std::size_t mn = kIllegal;
  for (std::size_t c : cost)
    if (c < mn) mn = c;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cost.size(); ++i)
    if (cost[i] != kIllegal && cost[i] > mn) out.push_back(i);
  return out;
}

namespace {

// Canonical static-dynamic policy: SWAP whenever the projective order of the
// top stack pair is inverted, otherwise take an arc as soon as its dependent
// is complete, otherwise SHIFT. From the initial configuration this policy
// reproduces the gold tree (the static oracle); from damaged configurations
// it still terminates and salvages what it can.
Transition canonical_action(const Configuration& c, const GoldTree& gold,
                            const std::vector<std::size_t>& pending) {
  const int s0 = c.s0();
  const int s1 = c.s1();
  const int b0 = c.b0();
  auto gh = [&](int t) { return gold.head[static_cast<std::size_t>(t)]; };
  auto glab = [&](int t) { return gold.label[static_cast<std::size_t>(t)]; };

  if (is_legal(c, {TransitionKind::swap, 0}) &&
      gold.proj_order[static_cast<std::size_t>(s1)] >
          gold.proj_order[static_cast<std::size_t>(s0)])
    return {TransitionKind::swap, 0};
  if (is_legal(c, {TransitionKind::left_arc, 0}) && gh(s0) == b0 &&
      pending[static_cast<std::size_t>(s0)] == 0)
    return {TransitionKind::left_arc, glab(s0)};
  if (is_legal(c, {TransitionKind::right_arc, 0}) && gh(s0) == s1 &&
      pending[static_cast<std::size_t>(s0)] == 0)
    return {TransitionKind::right_arc, glab(s0)};
  // s1's head sits above it in the stack: swap s1 out, re-shift it, and the
  // arc is realized as a RIGHT-ARC (the head entered the stack while the
  // buffer was being reordered)
  if (is_legal(c, {TransitionKind::swap, 0}) && gh(s1) == s0 &&
      pending[static_cast<std::size_t>(s1)] == 0)
    return {TransitionKind::swap, 0};
  if (is_legal(c, {TransitionKind::shift, 0}))
    return {TransitionKind::shift, 0};
  // fallback for states where something is already lost: keep the head
  // credit when it happens to be right
  if (is_legal(c, {TransitionKind::right_arc, 0}))
    return {TransitionKind::right_arc, gh(s0) == s1 ? glab(s0) : 0};
  if (is_legal(c, {TransitionKind::left_arc, 0}))
    return {TransitionKind::left_arc, gh(s0) == b0 ? glab(s0) : 0};
  return {TransitionKind::swap, 0};
}

// Gold attachments still unmade, per head token.
std::vector<std::size_t> pending_deps(const Configuration& c,
                                      const GoldTree& gold) {
  std::vector<std::size_t> pending(gold.head.size(), 0);
  for (std::size_t d = 1; d < gold.head.size(); ++d)
    if (c.head[d] < 0)
      ++pending[static_cast<std::size_t>(gold.head[d])];
  return pending;
}

// Labeled arcs correct at termination when the canonical policy runs the
// configuration out.
std::size_t rollout_correct(Configuration c, const GoldTree& gold) {
  std::vector<std::size_t> pending = pending_deps(c, gold);
  const std::size_t n = gold.head.size() - 1;
  std::size_t guard = 8 * (n + 2) * (n + 2);
  while (!c.terminal() && guard-- > 0) {
    const Transition t = canonical_action(c, gold, pending);
    if (t.kind == TransitionKind::left_arc ||
        t.kind == TransitionKind::right_arc)
      --pending[static_cast<std::size_t>(
          gold.head[static_cast<std::size_t>(c.s0())])];
    apply_transition(c, t);
  }
  std::size_t correct = 0;
  for (std::size_t d = 1; d < gold.head.size(); ++d)
    if (c.head[d] == gold.head[d] && c.label[d] == gold.label[d]) ++correct;
  return correct;
}

// Reachable labeled arcs after one action (arcs take the gold label when the
// head is right, since the wrong-label penalty is handled per label id).
std::size_t after_action(const Configuration& c, const GoldTree& gold,
                         Transition t) {
  Configuration next = c;
  if (t.kind == TransitionKind::left_arc && gold.head[static_cast<std::size_t>(
                                                c.s0())] == c.b0())
    t.label = gold.label[static_cast<std::size_t>(c.s0())];
  if (t.kind == TransitionKind::right_arc &&
      gold.head[static_cast<std::size_t>(c.s0())] == c.s1())
    t.label = gold.label[static_cast<std::size_t>(c.s0())];
  apply_transition(next, t);
  return rollout_correct(std::move(next), gold);
}

}  // namespace

OracleCosts oracle_costs(const Configuration& c, const GoldTree& gold,
                         std::size_t num_labels) {
  OracleCosts oc;
  oc.cost.assign(num_actions(num_labels), kIllegal);

  const int s0 = c.s0();
  const int b0 = c.b0();
  const int s1 = c.s1();

  // static component: SWAP is taken exactly when the canonical derivation
  // needs it (projective-order inversion, or s1's head directly above it);
  // a recoverable-but-wasteful swap must not look free to the learner
  bool must_swap = false;
  if (is_legal(c, {TransitionKind::swap, 0})) {
    if (gold.proj_order[static_cast<std::size_t>(s1)] >
        gold.proj_order[static_cast<std::size_t>(s0)]) {
      must_swap = true;
    } else if (gold.head[static_cast<std::size_t>(s1)] == s0) {
      const std::vector<std::size_t> pending = pending_deps(c, gold);
      must_swap = pending[static_cast<std::size_t>(s1)] == 0;
    }
  }
  const std::size_t floor_cost = must_swap ? 1 : 0;

  // Base reachability per transition kind, by rolling the canonical policy
  // out to termination; exact dynamic costs are intractable under SWAP.
  std::size_t best = 0;
  std::size_t r_shift = 0, r_swap = 0, r_la = 0, r_ra = 0;
  if (is_legal(c, {TransitionKind::shift, 0})) {
    r_shift = after_action(c, gold, {TransitionKind::shift, 0});
    best = std::max(best, r_shift);
  }
  if (is_legal(c, {TransitionKind::swap, 0})) {
    r_swap = after_action(c, gold, {TransitionKind::swap, 0});
    best = std::max(best, r_swap);
  }
  if (is_legal(c, {TransitionKind::left_arc, 0})) {
    r_la = after_action(c, gold, {TransitionKind::left_arc, 0});
    best = std::max(best, r_la);
  }
  if (is_legal(c, {TransitionKind::right_arc, 0})) {
    r_ra = after_action(c, gold, {TransitionKind::right_arc, 0});
    best = std::max(best, r_ra);
  }

  if (is_legal(c, {TransitionKind::shift, 0}))
    oc.cost[0] = std::max(best - r_shift, floor_cost);
  if (is_legal(c, {TransitionKind::swap, 0}))
    oc.cost[1] = must_swap ? 0 : std::max<std::size_t>(best - r_swap, 1);
  if (is_legal(c, {TransitionKind::left_arc, 0})) {
    const bool head_right = gold.head[static_cast<std::size_t>(s0)] == b0;
    for (std::size_t l = 0; l < num_labels; ++l) {
      std::size_t cost = best - r_la;
      if (head_right && l != gold.label[static_cast<std::size_t>(s0)])
        cost += 1;  // the made arc itself loses its label credit
      oc.cost[2 + 2 * l] = std::max(cost, floor_cost);
    }
  }
  if (is_legal(c, {TransitionKind::right_arc, 0})) {
    const bool head_right = gold.head[static_cast<std::size_t>(s0)] == s1;
    for (std::size_t l = 0; l < num_labels; ++l) {
      std::size_t cost = best - r_ra;
      if (head_right && l != gold.label[static_cast<std::size_t>(s0)])
        cost += 1;
      oc.cost[3 + 2 * l] = std::max(cost, floor_cost);
    }
  }

  return oc;
}

// ---- model ----

ParserModel::ParserModel(ParserConfig cfg, Vocab vocab)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  Rng& rng = numeric::global_rng();
  word_emb_ = model_.add_lookup("word_emb", vocab_.words.size(),
                                cfg_.word_dim, rng);
  char_emb_ = model_.add_lookup("char_emb", vocab_.chars.size(),
                                cfg_.char_dim, rng);
  char_fwd_ = numeric::LstmParams::create(model_, "char_fwd", cfg_.char_dim,
                                          cfg_.char_hidden, rng);
  char_bwd_ = numeric::LstmParams::create(model_, "char_bwd", cfg_.char_dim,
                                          cfg_.char_hidden, rng);
  const std::size_t x_dim = cfg_.word_dim + 2 * cfg_.char_hidden;
  sent_bilstm_ = numeric::BiLstm::create(model_, "sent", cfg_.sent_layers,
                                         x_dim, cfg_.sent_hidden, rng);
  root_vec_ = model_.add_param("root_vec", {cfg_.token_dim()}, rng);
  pad_vec_ = model_.add_param("pad_vec", {cfg_.feature_token_dim()}, rng);

  const std::size_t phi_dim = 3 * cfg_.feature_token_dim();
  mlp_w1_ = model_.add_param("mlp_w1", {cfg_.mlp_hidden, phi_dim}, rng);
  mlp_b1_ = model_.add_param_const("mlp_b1", {cfg_.mlp_hidden}, 0.0);
  mlp_w2_ = model_.add_param("mlp_w2",
                             {num_actions(vocab_.labels.size()),
                              cfg_.mlp_hidden},
                             rng);
  mlp_b2_ = model_.add_param_const("mlp_b2",
                                   {num_actions(vocab_.labels.size())}, 0.0);
  if (cfg_.recursive) {
    const std::size_t cd = cfg_.token_dim();
    comp_w_ = model_.add_param("comp_w", {cd, 2 * cd + cfg_.rel_dim}, rng);
    comp_b_ = model_.add_param_const("comp_b", {cd}, 0.0);
    rel_left_ = model_.add_param("rel_left_aux", {cfg_.rel_dim}, rng);
    rel_right_ = model_.add_param("rel_right_aux", {cfg_.rel_dim}, rng);
  }
}

std::size_t ParserModel::num_action_ids() const {
  return num_actions(vocab_.labels.size());
}

ParserModel::SentenceState ParserModel::encode_sentence(
    const Sentence& s, bool train_mode, Rng* dropout_rng) const {
  SentenceState st;
  auto& model = const_cast<numeric::Model&>(model_);
  st.graph = std::make_unique<Graph>(model);
  Graph& g = *st.graph;

  std::vector<Expr> xs;
  xs.reserve(static_cast<std::size_t>(s.size()));
  for (const conllu::Token& t : s.tokens) {
    std::size_t wid = vocab_.word_id(t.form);
    if (train_mode && dropout_rng && wid != Vocab::kUnk) {
      const double a = cfg_.word_dropout_alpha;
      const double cnt =
          static_cast<double>(vocab_.word_counts[wid]);
      if (dropout_rng->uniform(0.0, 1.0) < a / (a + cnt)) wid = Vocab::kUnk;
    }
    st.word_ids.push_back(wid);

    std::vector<Expr> ch;
    for (const std::string& cp : utf8_codepoints(t.form))
      ch.push_back(g.lookup(char_emb_, vocab_.char_id(cp)));
    if (ch.empty()) ch.push_back(g.lookup(char_emb_, 0));
    std::vector<Expr> rev(ch.rbegin(), ch.rend());
    Expr cf = lstm_run(g, char_fwd_, ch).back();
    Expr cb = lstm_run(g, char_bwd_, rev).back();
    Expr char_vec = g.concat({cf, cb});
    st.char_vecs.push_back(char_vec);

    xs.push_back(g.concat({g.lookup(word_emb_, wid), char_vec}));
  }
  if (!xs.empty()) st.token_vecs = sent_bilstm_.encode(g, xs);
  st.root_vec = g.param(root_vec_);
  if (cfg_.recursive) {
    st.composed = st.token_vecs;  // c_i starts as a copy of the token vector
    st.root_composed = st.root_vec;
  }
  return st;
}

numeric::Expr ParserModel::features(SentenceState& st,
                                    const Configuration& c) const {
  Graph& g = *st.graph;
  auto slot_vec = [&](int tok) -> Expr {
    if (tok < 0) return g.param(pad_vec_);
    if (tok == 0) {
      return cfg_.recursive ? g.concat({st.root_vec, st.root_composed})
                            : st.root_vec;
    }
    const std::size_t i = static_cast<std::size_t>(tok) - 1;
    return cfg_.recursive
               ? g.concat({st.token_vecs[i], st.composed[i]})
               : st.token_vecs[i];
  };
  return g.concat({slot_vec(c.s1()), slot_vec(c.s0()), slot_vec(c.b0())});
}

numeric::Expr ParserModel::score_actions(SentenceState& st,
                                         const Configuration& c) const {
  Graph& g = *st.graph;
  Expr phi = features(st, c);
  Expr hidden = g.tanh(g.affine(g.param(mlp_w1_), phi, g.param(mlp_b1_)));
  return g.affine(g.param(mlp_w2_), hidden, g.param(mlp_b2_));
}

void ParserModel::maybe_compose(SentenceState& st, const Sentence& s,
                                const Configuration& c,
                                const Transition& t) const {
  if (!cfg_.recursive) return;
  if (t.kind != TransitionKind::left_arc &&
      t.kind != TransitionKind::right_arc)
    return;
  const int dep = c.s0();
  const int head = t.kind == TransitionKind::left_arc ? c.b0() : c.s1();
  if (head <= 0 || dep <= 0) return;
  if (!treebank::deprel_matches(vocab_.labels[t.label], "aux")) return;
  if (!treebank::is_verbal(s.at(head)) || !treebank::is_verbal(s.at(dep)))
    return;
  Graph& g = *st.graph;
  Expr r = g.param(dep < head ? rel_left_ : rel_right_);
  Expr ch = st.composed[static_cast<std::size_t>(head) - 1];
  Expr cd = st.composed[static_cast<std::size_t>(dep) - 1];
  Expr in = g.concat({ch, cd, r});
  st.composed[static_cast<std::size_t>(head) - 1] =
      g.tanh(g.affine(g.param(comp_w_), in, g.param(comp_b_)));
}

namespace {

std::size_t argmax_in(const Tensor& scores,
                      const std::vector<std::size_t>& idx) {
  std::size_t best = idx.at(0);
  for (std::size_t i : idx)
    if (scores[i] > scores[best]) best = i;
  return best;
}

std::vector<std::size_t> legal_action_ids(const Configuration& c,
                                          std::size_t num_labels) {
  std::vector<std::size_t> ids;
  for (const Transition& t : legal_transitions(c, num_labels))
    ids.push_back(action_id(t));
  return ids;
}

}  // namespace

Sentence ParserModel::parse(const Sentence& s, SentenceState& st) const {
  Sentence out = s;
  const int n = s.size();
  if (n == 0) return out;
  Configuration c = Configuration::initial(n);
  const std::size_t max_steps =
      static_cast<std::size_t>(n) * static_cast<std::size_t>(n) * 4 + 64;
  std::size_t steps = 0;
  while (!c.terminal()) {
    if (++steps > max_steps)
      throw UsageError("parse did not terminate");  // legality bound violated
    const Tensor& scores = st.graph->value(score_actions(st, c));
    const auto legal = legal_action_ids(c, vocab_.labels.size());
    const Transition t = action_from_id(argmax_in(scores, legal));
    maybe_compose(st, s, c, t);
    apply_transition(c, t);
  }
  for (conllu::Token& t : out.tokens) {
    t.head = c.head[static_cast<std::size_t>(t.id)];
    t.deprel = vocab_.labels[c.label[static_cast<std::size_t>(t.id)]];
  }
  return out;
}

Sentence ParserModel::parse(const Sentence& s) const {
  SentenceState st = encode_sentence(s, /*train_mode=*/false);
  return parse(s, st);
}

Treebank parse_treebank(const ParserModel& m, const Treebank& tb) {
  Treebank out;
  out.reserve(tb.size());
  for (const Sentence& s : tb) out.push_back(m.parse(s));
  return out;
}

TrainResult train_parser(ParserModel& model, const Treebank& train,
                         const Treebank& dev) {
  if (train.empty()) throw UsageError("empty training set");
  const ParserConfig& cfg = model.config();
  numeric::AdamTrainer trainer(
      model.params(),
      {cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});
  Rng& rng = numeric::global_rng();
  const std::size_t num_labels = model.vocab().labels.size();

  std::vector<GoldTree> golds;
  golds.reserve(train.size());
  for (const Sentence& s : train)
    golds.push_back(GoldTree::from(s, model.vocab()));

  TrainResult res;
  double best_las = -1.0;
  std::vector<Tensor> best_params;

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t si : order) {
      const Sentence& s = train[si];
      if (s.size() == 0) continue;
      auto st = model.encode_sentence(s, /*train_mode=*/true, &rng);
      Configuration c = Configuration::initial(s.size());
      std::vector<Expr> losses;
      while (!c.terminal()) {
        const OracleCosts oc = oracle_costs(c, golds[si], num_labels);
        const auto zero = oc.min_cost_actions();
        const auto pos = oc.above_min_cost_actions();
        Expr scores = model.score_actions(st, c);
        const Tensor& sv = st.graph->value(scores);
        if (!pos.empty())
          losses.push_back(
              st.graph->hinge(scores, zero, pos, cfg.margin));
        std::size_t chosen;
        if (!pos.empty() && rng.uniform(0.0, 1.0) < cfg.exploration) {
          auto legal = zero;
          legal.insert(legal.end(), pos.begin(), pos.end());
          chosen = argmax_in(sv, legal);
        } else {
          chosen = argmax_in(sv, zero);
        }
        const Transition t = action_from_id(chosen);
        model.maybe_compose(st, s, c, t);
        apply_transition(c, t);
      }
      if (!losses.empty()) {
        Expr total = losses[0];
        for (std::size_t i = 1; i < losses.size(); ++i)
          total = st.graph->add(total, losses[i]);
        epoch_loss += st.graph->value(total)[0];
        st.graph->backward(total);
        trainer.update();
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss;
    if (!dev.empty()) {
      const EvalReport rep = evaluate_las(dev, parse_treebank(model, dev));
      stats.dev_las = rep.las;
    }
    res.log.push_back(stats);
    if (stats.dev_las > best_las) {
      best_las = stats.dev_las;
      res.best_epoch = epoch;
      res.best_dev_las = stats.dev_las;
      best_params.clear();
      for (const auto& slot : model.params().slots())
        best_params.push_back(slot.value);
    }
  }

  if (!best_params.empty()) {
    auto& slots = model.params().slots();
    for (std::size_t i = 0; i < slots.size(); ++i)
      slots[i].value = best_params[i];
  }
  return res;
}

EvalReport evaluate_las(const Treebank& gold, const Treebank& pred,
                        bool include_punct) {
  if (gold.size() != pred.size())
    throw UsageError("treebank sentence counts differ: " +
                     std::to_string(gold.size()) + " vs " +
                     std::to_string(pred.size()));
  EvalReport rep;
  std::size_t las_correct = 0, uas_correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const Sentence& gs = gold[i];
    const Sentence& ps = pred[i];
    if (gs.size() != ps.size())
      throw UsageError("token counts differ in sentence " +
                       std::to_string(i));
    for (int t = 1; t <= gs.size(); ++t) {
      const conllu::Token& gt = gs.at(t);
      const conllu::Token& pt = ps.at(t);
      if (!include_punct && treebank::deprel_matches(gt.deprel, "punct"))
        continue;
      ++rep.tokens;
      auto& lbl = rep.per_label[gt.deprel];
      ++lbl.second;
      if (gt.head == pt.head) {
        ++uas_correct;
        if (gt.deprel == pt.deprel) {
          ++las_correct;
          ++lbl.first;
        }
      }
    }
  }
  if (rep.tokens > 0) {
    rep.las = 100.0 * static_cast<double>(las_correct) /
              static_cast<double>(rep.tokens);
    rep.uas = 100.0 * static_cast<double>(uas_correct) /
              static_cast<double>(rep.tokens);
  }
  return rep;
}

// ---- container ----

namespace {
constexpr const char* kMagic = "NUCLEUS-PARSER-MODEL";
constexpr int kVersion = 1;

std::string get_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line))
    throw UsageError(std::string("model file truncated at ") + what);
  return line;
}
}  // namespace

void save_model(const ParserModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  const ParserConfig& c = m.config();
  out << kMagic << " v" << kVersion << "\n";
  out << "word_dim=" << c.word_dim << "\nchar_dim=" << c.char_dim
      << "\nchar_hidden=" << c.char_hidden
      << "\nsent_layers=" << c.sent_layers
      << "\nsent_hidden=" << c.sent_hidden << "\nmlp_hidden=" << c.mlp_hidden
      << "\nrel_dim=" << c.rel_dim << "\nrecursive=" << (c.recursive ? 1 : 0)
      << "\n";
  const Vocab& v = m.vocab();
  out << "WORDS " << v.words.size() << "\n";
  for (std::size_t i = 0; i < v.words.size(); ++i)
    out << v.words[i] << "\t" << v.word_counts[i] << "\n";
  out << "CHARS " << v.chars.size() << "\n";
  for (const std::string& ch : v.chars) out << ch << "\n";
  out << "LABELS " << v.labels.size() << "\n";
  for (const std::string& l : v.labels) out << l << "\n";
  const auto& slots = m.params().slots();
  out << "PARAMS " << slots.size() << "\n";
  for (const auto& s : slots) {
    out << s.name << "\t" << s.value.size() << "\n";
  }
  out << "DATA\n";
  for (const auto& s : slots) {
    out.write(reinterpret_cast<const char*>(s.value.v.data()),
              static_cast<std::streamsize>(s.value.size() * sizeof(double)));
  }
  if (!out) throw UsageError("short write to " + path);
}

ParserModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::string header = get_line(in, "header");
  const std::string expect = std::string(kMagic) + " v" +
                             std::to_string(kVersion);
  if (header != expect)
    throw UsageError("model version mismatch: file has '" + header +
                     "', this build reads '" + expect + "'");
  ParserConfig cfg;
  auto read_kv = [&](const char* key) -> long {
    std::string line = get_line(in, key);
    const std::string prefix = std::string(key) + "=";
    if (line.rfind(prefix, 0) != 0)
      throw UsageError("model file: expected " + prefix + ", got " + line);
    return std::stol(line.substr(prefix.size()));
  };
  cfg.word_dim = static_cast<std::size_t>(read_kv("word_dim"));
  cfg.char_dim = static_cast<std::size_t>(read_kv("char_dim"));
  cfg.char_hidden = static_cast<std::size_t>(read_kv("char_hidden"));
  cfg.sent_layers = static_cast<std::size_t>(read_kv("sent_layers"));
  cfg.sent_hidden = static_cast<std::size_t>(read_kv("sent_hidden"));
  cfg.mlp_hidden = static_cast<std::size_t>(read_kv("mlp_hidden"));
  cfg.rel_dim = static_cast<std::size_t>(read_kv("rel_dim"));
  cfg.recursive = read_kv("recursive") != 0;

  Vocab v;
  auto read_section = [&](const char* tag) -> std::size_t {
    std::string line = get_line(in, tag);
    std::istringstream ls(line);
    std::string t;
    std::size_t n = 0;
    ls >> t >> n;
    if (t != tag) throw UsageError("model file: expected section " +
                                   std::string(tag));
    return n;
  };
  const std::size_t nwords = read_section("WORDS");
  for (std::size_t i = 0; i < nwords; ++i) {
    std::string line = get_line(in, "word entry");
    const std::size_t tab = line.rfind('\t');
    if (tab == std::string::npos)
      throw UsageError("model file: malformed word entry");
    v.words.push_back(line.substr(0, tab));
    v.word_counts.push_back(std::stol(line.substr(tab + 1)));
    v.word_ids[v.words.back()] = i;
  }
  const std::size_t nchars = read_section("CHARS");
  for (std::size_t i = 0; i < nchars; ++i) {
    v.chars.push_back(get_line(in, "char entry"));
    v.char_ids[v.chars.back()] = i;
  }
  const std::size_t nlabels = read_section("LABELS");
  for (std::size_t i = 0; i < nlabels; ++i)
    v.labels.push_back(get_line(in, "label entry"));

  const std::size_t nparams = read_section("PARAMS");
  std::vector<std::pair<std::string, std::size_t>> meta;
  for (std::size_t i = 0; i < nparams; ++i) {
    std::string line = get_line(in, "param entry");
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw UsageError("model file: malformed param entry");
    meta.emplace_back(line.substr(0, tab),
                      static_cast<std::size_t>(
                          std::stol(line.substr(tab + 1))));
  }
  if (get_line(in, "DATA") != "DATA")
    throw UsageError("model file: missing DATA section");

  ParserModel m(cfg, std::move(v));
  auto& slots = m.params().slots();
  if (slots.size() != meta.size())
    throw UsageError("model file: parameter count mismatch");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].name != meta[i].first ||
        slots[i].value.size() != meta[i].second)
      throw UsageError("model file: parameter layout mismatch at " +
                       slots[i].name);
    in.read(reinterpret_cast<char*>(slots[i].value.v.data()),
            static_cast<std::streamsize>(meta[i].second * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) !=
        meta[i].second * sizeof(double))
      throw UsageError("model file truncated in parameter " + slots[i].name);
  }
  return m;
}

}  // namespace nucleus::parser
