#include "nucleus/probe.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace nucleus::probe {

using numeric::Expr;
using numeric::Graph;
using numeric::Tensor;
using numeric::UsageError;

std::string to_string(Layer l) {
  switch (l) {
    case Layer::type: return "type";
    case Layer::chr: return "char";
    case Layer::token: return "token";
    case Layer::composed: return "composed";
    case Layer::w2v: return "w2v";
  }
  return "?";
}

Layer layer_from_string(const std::string& s) {
  if (s == "type") return Layer::type;
  if (s == "char") return Layer::chr;
  if (s == "token") return Layer::token;
  if (s == "composed") return Layer::composed;
  if (s == "w2v") return Layer::w2v;
  throw UsageError("unknown layer: " + s);
}

std::map<Layer, VectorSet> extract_vectors(
    const parser::ParserModel& m, const conllu::Treebank& tb,
    const std::vector<ProbeInstance>& instances, Task task,
    TargetKind target_kind, const std::vector<Layer>& layers) {
  const bool want_composed =
      std::find(layers.begin(), layers.end(), Layer::composed) !=
      layers.end();
  if (want_composed && !m.config().recursive)
    throw UsageError(
        "composed vectors require a model trained in recursive mode");
  for (Layer l : layers) {
    if (l == Layer::w2v)
      throw UsageError("w2v vectors come from extract_w2v_vectors");
  }

  std::map<Layer, VectorSet> out;
  for (Layer l : layers) {
    VectorSet vs;
    vs.layer = l;
    vs.target_kind = target_kind;
    vs.task = task;
    out.emplace(l, std::move(vs));
  }

  // group instances by sentence so each sentence is encoded once
  std::map<int, std::vector<std::size_t>> by_sentence;
  for (std::size_t i = 0; i < instances.size(); ++i)
    by_sentence[instances[i].sentence_index].push_back(i);

  for (const auto& [si, idxs] : by_sentence) {
    const conllu::Sentence& s = tb.at(static_cast<std::size_t>(si));
    auto st = m.encode_sentence(s, /*train_mode=*/false);
    if (want_composed) m.parse(s, st);  // updates c_i along predicted arcs
    for (std::size_t ii : idxs) {
      const ProbeInstance& inst = instances[ii];
      const std::size_t t = static_cast<std::size_t>(inst.target_id) - 1;
      for (auto& [layer, vs] : out) {
        std::vector<double> vec;
        switch (layer) {
          case Layer::token:
            vec = st.graph->value(st.token_vecs.at(t)).v;
            break;
          case Layer::composed:
            vec = st.graph->value(st.composed.at(t)).v;
            break;
          case Layer::type: {
            // true type embedding; OOV targets fall back to the unknown row
            const std::size_t wid =
                m.vocab().word_id(s.at(inst.target_id).form);
            const Tensor& table = m.word_embedding_table();
            const std::size_t dim = m.config().word_dim;
            vec.assign(table.v.begin() + static_cast<long>(wid * dim),
                       table.v.begin() + static_cast<long>((wid + 1) * dim));
            break;
          }
          case Layer::chr:
            vec = st.graph->value(st.char_vecs.at(t)).v;
            break;
          case Layer::w2v:
            break;  // unreachable
        }
        vs.dim = vec.size();
        vs.instances.push_back(inst);
        vs.vectors.push_back(std::move(vec));
      }
    }
  }
  return out;
}

VectorSet extract_w2v_vectors(const cbow::TypeEmbeddingTable& table,
                              const conllu::Treebank& tb,
                              const std::vector<ProbeInstance>& instances,
                              Task task, TargetKind target_kind) {
  VectorSet vs;
  vs.layer = Layer::w2v;
  vs.target_kind = target_kind;
  vs.task = task;
  vs.dim = table.dim;
  for (const ProbeInstance& inst : instances) {
    const conllu::Sentence& s =
        tb.at(static_cast<std::size_t>(inst.sentence_index));
    std::vector<double> vec(table.dim, 0.0);
    if (auto id = table.id(s.at(inst.target_id).form)) {
      const double* r = table.row(*id);
      vec.assign(r, r + table.dim);
    }
    vs.instances.push_back(inst);
    vs.vectors.push_back(std::move(vec));
  }
  return vs;
}

std::optional<double> majority_baseline(
    const std::vector<std::string>& train_labels,
    const std::vector<std::string>& dev_labels) {
  if (train_labels.empty()) throw UsageError("empty train label list");
  if (dev_labels.empty()) return std::nullopt;
  std::vector<std::pair<std::string, std::size_t>> counts;  // first-seen order
  for (const std::string& l : train_labels) {
    auto it = std::find_if(counts.begin(), counts.end(),
                           [&](const auto& p) { return p.first == l; });
    if (it == counts.end())
      counts.emplace_back(l, 1);
    else
      ++it->second;
  }
  std::string majority = counts[0].first;
  std::size_t best = counts[0].second;
  for (const auto& [l, c] : counts) {
    if (c > best) {  // strict: ties keep the first-seen label
      best = c;
      majority = l;
    }
  }
  std::size_t hits = 0;
  for (const std::string& l : dev_labels)
    if (l == majority) ++hits;
  return 100.0 * static_cast<double>(hits) /
         static_cast<double>(dev_labels.size());
}

ProbeModel::ProbeModel(std::size_t dim, std::vector<std::string> classes,
                       ProbeConfig cfg)
    : cfg_(cfg), classes_(std::move(classes)) {
  numeric::Rng rng(cfg_.seed);
  const std::size_t c = classes_.size();
  if (cfg_.kind == ProbeKind::mlp1) {
    w1_ = model_.add_param("probe_w1", {cfg_.hidden, dim}, rng);
    b1_ = model_.add_param_const("probe_b1", {cfg_.hidden}, 0.0);
    w2_ = model_.add_param("probe_w2", {c, cfg_.hidden}, rng);
    b2_ = model_.add_param_const("probe_b2", {c}, 0.0);
  } else {
    w2_ = model_.add_param("probe_w", {c, dim}, rng);
    b2_ = model_.add_param_const("probe_b", {c}, 0.0);
  }
}

std::size_t ProbeModel::class_id(const std::string& label) const {
  for (std::size_t i = 0; i < classes_.size(); ++i)
    if (classes_[i] == label) return i;
  throw UsageError("label outside the task's label set: " + label);
}

std::string ProbeModel::predict(const std::vector<double>& x) const {
  auto& model = const_cast<numeric::Model&>(model_);
  Graph g(model);
  Expr in = g.constant(Tensor({x.size()}, x));
  Expr logits;
  if (cfg_.kind == ProbeKind::mlp1) {
    Expr h = g.tanh(g.affine(g.param(w1_), in, g.param(b1_)));
    logits = g.affine(g.param(w2_), h, g.param(b2_));
  } else {
    logits = g.affine(g.param(w2_), in, g.param(b2_));
  }
  const Tensor& t = g.value(logits);
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] > t[best]) best = i;
  return classes_[best];
}

ProbeModel train_probe(const VectorSet& train, const ProbeConfig& cfg) {
  if (train.size() == 0) throw UsageError("empty probe training set");
  std::vector<std::string> classes;  // first-seen order
  for (const ProbeInstance& i : train.instances) {
    if (std::find(classes.begin(), classes.end(), i.label) == classes.end())
      classes.push_back(i.label);
  }
  ProbeModel pm(train.dim, classes, cfg);
  numeric::AdamTrainer trainer(pm.model_, {cfg.lr});
  numeric::Rng rng(cfg.seed + 0x9e3779b97f4a7c15ull);

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      Graph g(pm.model_);
      std::vector<Expr> losses;
      for (std::size_t k = start;
           k < std::min(order.size(), start + cfg.batch); ++k) {
        const std::size_t i = order[k];
        if (train.vectors[i].size() != train.dim)
          throw numeric::ShapeError("probe vector dimension mismatch");
        Expr in = g.constant(Tensor({train.dim}, train.vectors[i]));
        Expr logits;
        if (cfg.kind == ProbeKind::mlp1) {
          Expr h = g.tanh(g.affine(g.param(pm.w1_), in, g.param(pm.b1_)));
          logits = g.affine(g.param(pm.w2_), h, g.param(pm.b2_));
        } else {
          logits = g.affine(g.param(pm.w2_), in, g.param(pm.b2_));
        }
        losses.push_back(
            g.softmax_xent(logits, pm.class_id(train.instances[i].label)));
      }
      Expr total = losses[0];
      for (std::size_t i = 1; i < losses.size(); ++i)
        total = g.add(total, losses[i]);
      g.backward(total);
      trainer.update();
    }
  }
  return pm;
}

double eval_probe(const ProbeModel& pm, const VectorSet& dev) {
  if (dev.size() == 0) throw UsageError("empty probe dev set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < dev.size(); ++i)
    if (pm.predict(dev.vectors[i]) == dev.instances[i].label) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(dev.size());
}

std::string serialize_vector_set(const VectorSet& vs) {
  std::ostringstream out;
  out.precision(17);
  out << to_string(vs.layer) << " " << treebank::to_string(vs.target_kind)
      << " " << treebank::to_string(vs.task) << " " << vs.dim << " "
      << vs.size() << "\n";
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const ProbeInstance& inst = vs.instances[i];
    out << inst.sentence_index << ":" << inst.target_id << "\t" << inst.label
        << "\t";
    for (std::size_t d = 0; d < vs.dim; ++d) {
      if (d) out << " ";
      out << vs.vectors[i][d];
    }
    out << "\n";
  }
  return out.str();
}

VectorSet parse_vector_set(const std::string& text) {
  std::istringstream in(text);
  VectorSet vs;
  std::string layer, kind, task;
  std::size_t count = 0;
  in >> layer >> kind >> task >> vs.dim >> count;
  if (!in) throw UsageError("malformed vector file header");
  vs.layer = layer_from_string(layer);
  vs.target_kind = treebank::target_kind_from_string(kind);
  vs.task = treebank::task_from_string(task);
  for (std::size_t i = 0; i < count; ++i) {
    ProbeInstance inst;
    char colon = 0;
    in >> inst.sentence_index >> colon >> inst.target_id >> inst.label;
    inst.target_kind = vs.target_kind;
    std::vector<double> vec(vs.dim);
    for (std::size_t d = 0; d < vs.dim; ++d) in >> vec[d];
    if (!in) throw UsageError("truncated vector file");
    vs.instances.push_back(std::move(inst));
    vs.vectors.push_back(std::move(vec));
  }
  return vs;
}

void save_vector_set(const VectorSet& vs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << serialize_vector_set(vs);
}

VectorSet load_vector_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_vector_set(ss.str());
}

}  // namespace nucleus::probe
