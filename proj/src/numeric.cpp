#include "nucleus/numeric.hpp"

#include <algorithm>
#include <cmath>

#include "nucleus/kernels.hpp"

namespace nucleus::numeric {

Tensor::Tensor(std::vector<std::size_t> sh) : shape(std::move(sh)) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  v.assign(n, 0.0);
}

Tensor::Tensor(std::vector<std::size_t> sh, std::vector<double> vals)
    : shape(std::move(sh)), v(std::move(vals)) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  if (n != v.size())
    throw ShapeError("tensor value count " + std::to_string(v.size()) +
                     " does not match shape " + shape_str());
}

std::string Tensor::shape_str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void Tensor::zero() { std::fill(v.begin(), v.end(), 0.0); }

double Rng::uniform(double lo, double hi) {
  // fixed 53-bit mapping, stable across standard library versions
  const double u = static_cast<double>(eng_() >> 11) * 0x1p-53;
  return lo + u * (hi - lo);
}

double Rng::normal(double mean, double sd) {
  // Box-Muller on the stable uniform stream
  double u1 = uniform(0.0, 1.0);
  double u2 = uniform(0.0, 1.0);
  if (u1 < 1e-300) u1 = 1e-300;
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) *
                    std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) return 0;
  return static_cast<std::size_t>(uniform(0.0, 1.0) * static_cast<double>(n)) %
         n;
}

Rng& global_rng() {
  static Rng rng(1);
  return rng;
}

void seed_rng(std::uint64_t seed) { global_rng().seed(seed); }

namespace {

double glorot_bound(const std::vector<std::size_t>& shape) {
  std::size_t fan_in = shape.size() > 1 ? shape[1] : shape[0];
  std::size_t fan_out = shape[0];
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace

Parameter Model::add_param(const std::string& name,
                           std::vector<std::size_t> shape, Rng& rng) {
  Slot s;
  s.name = name;
  s.value = Tensor(shape);
  const double bound = glorot_bound(shape);
  for (double& x : s.value.v) x = rng.uniform(-bound, bound);
  s.grad = Tensor(shape);
  s.adam_m = Tensor(shape);
  s.adam_v = Tensor(shape);
  slots_.push_back(std::move(s));
  return Parameter{static_cast<int>(slots_.size()) - 1};
}

Parameter Model::add_param_const(const std::string& name,
                                 std::vector<std::size_t> shape, double fill) {
  Slot s;
  s.name = name;
  s.value = Tensor(shape);
  std::fill(s.value.v.begin(), s.value.v.end(), fill);
  s.grad = Tensor(shape);
  s.adam_m = Tensor(shape);
  s.adam_v = Tensor(shape);
  slots_.push_back(std::move(s));
  return Parameter{static_cast<int>(slots_.size()) - 1};
}

LookupParameter Model::add_lookup(const std::string& name, std::size_t rows,
                                  std::size_t cols, Rng& rng) {
  Slot s;
  s.name = name;
  s.value = Tensor({rows, cols});
  const double bound = glorot_bound({rows, cols});
  for (double& x : s.value.v) x = rng.uniform(-bound, bound);
  s.grad = Tensor({rows, cols});
  s.adam_m = Tensor({rows, cols});
  s.adam_v = Tensor({rows, cols});
  s.lookup = true;
  s.rows = rows;
  s.cols = cols;
  slots_.push_back(std::move(s));
  return LookupParameter{static_cast<int>(slots_.size()) - 1};
}

void Model::zero_grads() {
  for (Slot& s : slots_) {
    if (s.lookup) {
      for (std::size_t r : s.touched) {
        double* g = s.grad.v.data() + r * s.cols;
        std::fill(g, g + s.cols, 0.0);
      }
      s.touched.clear();
    } else {
      s.grad.zero();
    }
  }
}

void AdamTrainer::update() {
  ++t_;
  for (Model::Slot& s : model_->slots()) {
    if (s.lookup) {
      std::sort(s.touched.begin(), s.touched.end());
      s.touched.erase(std::unique(s.touched.begin(), s.touched.end()),
                      s.touched.end());
      for (std::size_t r : s.touched) {
        const std::size_t off = r * s.cols;
        kernels::adam_step(s.value.v.data() + off, s.adam_m.v.data() + off,
                           s.adam_v.v.data() + off, s.grad.v.data() + off,
                           s.cols, cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.eps,
                           t_);
        std::fill(s.grad.v.data() + off, s.grad.v.data() + off + s.cols, 0.0);
      }
      s.touched.clear();
    } else {
      kernels::adam_step(s.value.v.data(), s.adam_m.v.data(),
                         s.adam_v.v.data(), s.grad.v.data(), s.value.size(),
                         cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.eps, t_);
      s.grad.zero();
    }
  }
}

// ---- Graph ----

int Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  check_finite(id);
  return id;
}

void Graph::check_finite(int id) {
  for (double x : val(id).v) {
    if (!std::isfinite(x))
      throw NumericError("non-finite value in computation node " +
                         std::to_string(id));
  }
}

Expr Graph::constant(Tensor t) {
  Node n;
  n.op = Op::constant;
  n.val = std::move(t);
  return wrap(push(std::move(n)));
}

Expr Graph::param(Parameter p) {
  Node n;
  n.op = Op::param;
  n.slot = p.index;
  n.ext = &model_->slots().at(p.index).value;
  return wrap(push(std::move(n)));
}

Expr Graph::lookup(LookupParameter p, std::size_t row) {
  const Model::Slot& s = model_->slots().at(p.index);
  if (row >= s.rows)
    throw UsageError("lookup row " + std::to_string(row) + " out of range");
  Node n;
  n.op = Op::lookup;
  n.slot = p.index;
  n.a = row;
  n.val = Tensor({s.cols});
  const double* src = s.value.v.data() + row * s.cols;
  std::copy(src, src + s.cols, n.val.v.begin());
  return wrap(push(std::move(n)));
}

Expr Graph::add(Expr a, Expr b) {
  const Tensor& ta = val(a.id);
  const Tensor& tb = val(b.id);
  if (ta.size() != tb.size())
    throw ShapeError("add: shapes " + ta.shape_str() + " vs " +
                     tb.shape_str());
  Node n;
  n.op = Op::add;
  n.args = {a.id, b.id};
  n.val = Tensor(ta.shape);
  kernels::vadd(ta.v.data(), tb.v.data(), n.val.v.data(), ta.size());
  return wrap(push(std::move(n)));
}

Expr Graph::cmul(Expr a, Expr b) {
  const Tensor& ta = val(a.id);
  const Tensor& tb = val(b.id);
  if (ta.size() != tb.size())
    throw ShapeError("cmul: shapes " + ta.shape_str() + " vs " +
                     tb.shape_str());
  Node n;
  n.op = Op::cmul;
  n.args = {a.id, b.id};
  n.val = Tensor(ta.shape);
  kernels::vmul(ta.v.data(), tb.v.data(), n.val.v.data(), ta.size());
  return wrap(push(std::move(n)));
}

Expr Graph::scale(Expr a, double k) {
  const Tensor& ta = val(a.id);
  Node n;
  n.op = Op::scale;
  n.args = {a.id};
  n.k = k;
  n.val = Tensor(ta.shape);
  for (std::size_t i = 0; i < ta.size(); ++i) n.val[i] = k * ta[i];
  return wrap(push(std::move(n)));
}

Expr Graph::matvec(Expr w, Expr x) {
  const Tensor& tw = val(w.id);
  const Tensor& tx = val(x.id);
  if (tw.shape.size() != 2 || tw.shape[1] != tx.size())
    throw ShapeError("matvec: shapes " + tw.shape_str() + " vs " +
                     tx.shape_str());
  Node n;
  n.op = Op::matvec;
  n.args = {w.id, x.id};
  n.val = Tensor({tw.shape[0]});
  kernels::matvec(tw.v.data(), tx.v.data(), n.val.v.data(), tw.shape[0],
                  tw.shape[1]);
  return wrap(push(std::move(n)));
}

Expr Graph::affine(Expr w, Expr x, Expr b) {
  const Tensor& tw = val(w.id);
  const Tensor& tx = val(x.id);
  const Tensor& tb = val(b.id);
  if (tw.shape.size() != 2 || tw.shape[1] != tx.size() ||
      tw.shape[0] != tb.size())
    throw ShapeError("affine: shapes " + tw.shape_str() + " * " +
                     tx.shape_str() + " + " + tb.shape_str());
  Node n;
  n.op = Op::affine;
  n.args = {w.id, x.id, b.id};
  n.val = Tensor({tw.shape[0]});
  kernels::matvec(tw.v.data(), tx.v.data(), n.val.v.data(), tw.shape[0],
                  tw.shape[1]);
  kernels::vadd(n.val.v.data(), tb.v.data(), n.val.v.data(), tb.size());
  return wrap(push(std::move(n)));
}

Expr Graph::concat(const std::vector<Expr>& xs) {
  if (xs.empty()) throw UsageError("concat of empty list");
  Node n;
  n.op = Op::concat;
  std::size_t total = 0;
  for (Expr e : xs) {
    n.args.push_back(e.id);
    total += val(e.id).size();
  }
  n.val = Tensor({total});
  std::size_t off = 0;
  for (Expr e : xs) {
    const Tensor& t = val(e.id);
    std::copy(t.v.begin(), t.v.end(), n.val.v.begin() + static_cast<long>(off));
    off += t.size();
  }
  return wrap(push(std::move(n)));
}

Expr Graph::slice(Expr x, std::size_t start, std::size_t len) {
  const Tensor& tx = val(x.id);
  if (start + len > tx.size())
    throw ShapeError("slice [" + std::to_string(start) + "," +
                     std::to_string(start + len) + ") of " + tx.shape_str());
  Node n;
  n.op = Op::slice;
  n.args = {x.id};
  n.a = start;
  n.b = len;
  n.val = Tensor({len});
  std::copy(tx.v.begin() + static_cast<long>(start),
            tx.v.begin() + static_cast<long>(start + len), n.val.v.begin());
  return wrap(push(std::move(n)));
}

Expr Graph::tanh(Expr x) {
  const Tensor& tx = val(x.id);
  Node n;
  n.op = Op::tanh_;
  n.args = {x.id};
  n.val = Tensor(tx.shape);
  kernels::tanh_vec(tx.v.data(), n.val.v.data(), tx.size());
  return wrap(push(std::move(n)));
}

Expr Graph::logistic(Expr x) {
  const Tensor& tx = val(x.id);
  Node n;
  n.op = Op::logistic_;
  n.args = {x.id};
  n.val = Tensor(tx.shape);
  kernels::logistic_vec(tx.v.data(), n.val.v.data(), tx.size());
  return wrap(push(std::move(n)));
}

Expr Graph::dot(Expr a, Expr b) {
  const Tensor& ta = val(a.id);
  const Tensor& tb = val(b.id);
  if (ta.size() != tb.size())
    throw ShapeError("dot: shapes " + ta.shape_str() + " vs " +
                     tb.shape_str());
  Node n;
  n.op = Op::dot_;
  n.args = {a.id, b.id};
  n.val = Tensor({1});
  n.val[0] = kernels::dot(ta.v.data(), tb.v.data(), ta.size());
  return wrap(push(std::move(n)));
}

Expr Graph::sum_elems(Expr x) {
  const Tensor& tx = val(x.id);
  Node n;
  n.op = Op::sum_elems_;
  n.args = {x.id};
  n.val = Tensor({1});
  double acc = 0.0;
  for (double d : tx.v) acc += d;
  n.val[0] = acc;
  return wrap(push(std::move(n)));
}

Expr Graph::softmax_xent(Expr logits, std::size_t gold_index) {
  const Tensor& tl = val(logits.id);
  if (gold_index >= tl.size())
    throw UsageError("softmax_xent: gold index out of range");
  Node n;
  n.op = Op::softmax_xent_;
  n.args = {logits.id};
  n.a = gold_index;
  const double mx = *std::max_element(tl.v.begin(), tl.v.end());
  n.aux = Tensor(tl.shape);
  double z = 0.0;
  for (std::size_t i = 0; i < tl.size(); ++i) {
    n.aux[i] = std::exp(tl[i] - mx);
    z += n.aux[i];
  }
  for (double& p : n.aux.v) p /= z;
  n.val = Tensor({1});
  n.val[0] = -(tl[gold_index] - mx - std::log(z));
  return wrap(push(std::move(n)));
}

const Tensor& Graph::probs_of(Expr xent) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(xent.id));
  if (n.op != Op::softmax_xent_)
    throw UsageError("probs_of: not a softmax_xent node");
  return n.aux;
}

Expr Graph::hinge(Expr scores, const std::vector<std::size_t>& good,
                  const std::vector<std::size_t>& bad, double margin) {
  const Tensor& ts = val(scores.id);
  if (good.empty()) throw UsageError("hinge: empty good set");
  for (std::size_t i : good)
    if (i >= ts.size()) throw UsageError("hinge: good index out of range");
  for (std::size_t i : bad)
    if (i >= ts.size()) throw UsageError("hinge: bad index out of range");
  Node n;
  n.op = Op::hinge_;
  n.args = {scores.id};
  n.k = margin;
  n.good = good;
  n.bad = bad;
  n.val = Tensor({1});
  if (!bad.empty()) {
    auto argmax = [&](const std::vector<std::size_t>& idx) {
      std::size_t best = idx[0];
      for (std::size_t i : idx)
        if (ts[i] > ts[best]) best = i;
      return best;
    };
    const std::size_t bg = argmax(good);
    const std::size_t bb = argmax(bad);
    n.a = bg;
    n.b = bb;
    n.val[0] = std::max(0.0, margin + ts[bb] - ts[bg]);
  }
  return wrap(push(std::move(n)));
}

const Tensor& Graph::value(Expr e) const {
  if (e.g != this) throw UsageError("expression from another graph");
  return val(e.id);
}

void Graph::backward(Expr loss) {
  if (loss.g != this) throw UsageError("expression from another graph");
  if (val(loss.id).size() != 1)
    throw UsageError("backward requires a scalar loss");
  for (Node& n : nodes_) {
    n.grad = Tensor(n.ext ? n.ext->shape : n.val.shape);
  }
  nodes_[static_cast<std::size_t>(loss.id)].grad[0] = 1.0;

  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    bool any = false;
    for (double gdb : n.grad.v) {
      if (gdb != 0.0) {
        any = true;
        break;
      }
    }
    if (!any) continue;
    const Tensor& g = n.grad;
    switch (n.op) {
      case Op::constant:
        break;
      case Op::param: {
        Model::Slot& s = model_->slots()[static_cast<std::size_t>(n.slot)];
        kernels::axpy(1.0, g.v.data(), s.grad.v.data(), g.size());
        break;
      }
      case Op::lookup: {
        Model::Slot& s = model_->slots()[static_cast<std::size_t>(n.slot)];
        kernels::axpy(1.0, g.v.data(), s.grad.v.data() + n.a * s.cols,
                      g.size());
        s.touched.push_back(n.a);
        break;
      }
      case Op::add: {
        Tensor& g0 = nodes_[static_cast<std::size_t>(n.args[0])].grad;
        Tensor& g1 = nodes_[static_cast<std::size_t>(n.args[1])].grad;
        kernels::axpy(1.0, g.v.data(), g0.v.data(), g.size());
        kernels::axpy(1.0, g.v.data(), g1.v.data(), g.size());
        break;
      }
      case Op::cmul: {
        const Tensor& a = val(n.args[0]);
        const Tensor& b = val(n.args[1]);
        Tensor& g0 = nodes_[static_cast<std::size_t>(n.args[0])].grad;
        Tensor& g1 = nodes_[static_cast<std::size_t>(n.args[1])].grad;
        kernels::vmul_acc(g.v.data(), b.v.data(), g0.v.data(), g.size());
        kernels::vmul_acc(g.v.data(), a.v.data(), g1.v.data(), g.size());
        break;
      }
      case Op::scale: {
        Tensor& g0 = nodes_[static_cast<std::size_t>(n.args[0])].grad;
        kernels::axpy(n.k, g.v.data(), g0.v.data(), g.size());
        break;
      }
      case Op::matvec:
      case Op::affine: {
        const Tensor& w = val(n.args[0]);
        const Tensor& x = val(n.args[1]);
        Tensor& gw = nodes_[static_cast<std::size_t>(n.args[0])].grad;
        Tensor& gx = nodes_[static_cast<std::size_t>(n.args[1])].grad;
        kernels::ger_acc(gw.v.data(), g.v.data(), x.v.data(), w.shape[0],
                         w.shape[1]);
        kernels::matvec_t_acc(w.v.data(), g.v.data(), gx.v.data(), w.shape[0],
                              w.shape[1]);
        if (n.op == Op::affine) {
          Tensor& gb = nodes_[static_cast<std::size_t>(n.args[2])].grad;
          kernels::axpy(1.0, g.v.data(), gb.v.data(), g.size());
        }
        break;
      }
      case Op::concat: {
        std::size_t off = 0;
        for (int arg : n.args) {
          Tensor& ga = nodes_[static_cast<std::size_t>(arg)].grad;
          kernels::axpy(1.0, g.v.data() + off, ga.v.data(), ga.size());
          off += ga.size();
        }
        break;
      }
      case Op::slice: {
        Tensor& g0 = nodes_[static_cast<std::size_t>(n.args[0])].grad;
        kernels::axpy(1.0, g.v.data(), g0.v.data() + n.a, n.b);
        break;
      }
      case Op::tanh_: {
        Tensor& g0 = nodes_[static_cast<std::size_t>(n.args[0])].grad;
        for (std::size_t i = 0; i < g.size(); ++i)
          g0[i] += g[i] * (1.0 - n.val[i] * n.val[i]);
        break;
      }
      case Op::logistic_: {
        Tensor& g0 = nodes_[static_cast<std::size_t>(n.args[0])].grad;
        for (std::size_t i = 0; i < g.size(); ++i)
          g0[i] += g[i] * n.val[i] * (1.0 - n.val[i]);
        break;
      }
      case Op::dot_: {
        const Tensor& a = val(n.args[0]);
        const Tensor& b = val(n.args[1]);
        Tensor& g0 = nodes_[static_cast<std::size_t>(n.args[0])].grad;
        Tensor& g1 = nodes_[static_cast<std::size_t>(n.args[1])].grad;
        kernels::axpy(g[0], b.v.data(), g0.v.data(), b.size());
        kernels::axpy(g[0], a.v.data(), g1.v.data(), a.size());
        break;
      }
      case Op::sum_elems_: {
        Tensor& g0 = nodes_[static_cast<std::size_t>(n.args[0])].grad;
        for (double& x : g0.v) x += g[0];
        break;
      }
      case Op::softmax_xent_: {
        Tensor& g0 = nodes_[static_cast<std::size_t>(n.args[0])].grad;
        for (std::size_t i = 0; i < g0.size(); ++i)
          g0[i] += g[0] * (n.aux[i] - (i == n.a ? 1.0 : 0.0));
        break;
      }
      case Op::hinge_: {
        if (!n.bad.empty() && n.val[0] > 0.0) {
          Tensor& g0 = nodes_[static_cast<std::size_t>(n.args[0])].grad;
          g0[n.b] += g[0];
          g0[n.a] -= g[0];
        }
        break;
      }
    }
  }
}

// ---- LSTM ----

LstmParams LstmParams::create(Model& m, const std::string& prefix,
                              std::size_t input_dim, std::size_t hidden_dim,
                              Rng& rng, double forget_bias) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.wx = m.add_param(prefix + ".wx", {4 * hidden_dim, input_dim}, rng);
  p.wh = m.add_param(prefix + ".wh", {4 * hidden_dim, hidden_dim}, rng);
  p.bias = m.add_param_const(prefix + ".b", {4 * hidden_dim}, 0.0);
  // forget gate block sits at [H, 2H)
  Tensor& b = m.value(p.bias);
  for (std::size_t i = hidden_dim; i < 2 * hidden_dim; ++i)
    b[i] = forget_bias;
  p.h0 = m.add_param_const(prefix + ".h0", {hidden_dim}, 0.0);
  p.c0 = m.add_param_const(prefix + ".c0", {hidden_dim}, 0.0);
  return p;
}

std::pair<Expr, Expr> lstm_step(Graph& g, const LstmParams& p, Expr x,
                                Expr h_prev, Expr c_prev) {
  const std::size_t h = p.hidden_dim;
  Expr pre = g.add(g.affine(g.param(p.wx), x, g.param(p.bias)),
                   g.matvec(g.param(p.wh), h_prev));
  Expr gi = g.logistic(g.slice(pre, 0, h));
  Expr gf = g.logistic(g.slice(pre, h, h));
  Expr go = g.logistic(g.slice(pre, 2 * h, h));
  Expr gc = g.tanh(g.slice(pre, 3 * h, h));
  Expr c = g.add(g.cmul(gf, c_prev), g.cmul(gi, gc));
  Expr hh = g.cmul(go, g.tanh(c));
  return {hh, c};
}

std::vector<Expr> lstm_run(Graph& g, const LstmParams& p,
                           const std::vector<Expr>& xs) {
  std::vector<Expr> hs;
  hs.reserve(xs.size());
  Expr h = g.param(p.h0);
  Expr c = g.param(p.c0);
  for (Expr x : xs) {
    auto [h2, c2] = lstm_step(g, p, x, h, c);
    h = h2;
    c = c2;
    hs.push_back(h);
  }
  return hs;
}

BiLstm BiLstm::create(Model& m, const std::string& prefix, std::size_t layers,
                      std::size_t input_dim, std::size_t hidden_per_dir,
                      Rng& rng) {
  BiLstm b;
  std::size_t in = input_dim;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string lp = prefix + ".l" + std::to_string(l);
    b.fwd.push_back(LstmParams::create(m, lp + ".f", in, hidden_per_dir, rng));
    b.bwd.push_back(LstmParams::create(m, lp + ".b", in, hidden_per_dir, rng));
    in = 2 * hidden_per_dir;
  }
  return b;
}

std::vector<Expr> BiLstm::encode(Graph& g, const std::vector<Expr>& xs) const {
  if (xs.empty()) throw UsageError("bilstm_encode: empty sequence");
  std::vector<Expr> cur = xs;
  for (std::size_t l = 0; l < fwd.size(); ++l) {
    std::vector<Expr> rev(cur.rbegin(), cur.rend());
    std::vector<Expr> hf = lstm_run(g, fwd[l], cur);
    std::vector<Expr> hb = lstm_run(g, bwd[l], rev);
    std::vector<Expr> next;
    next.reserve(cur.size());
    for (std::size_t i = 0; i < cur.size(); ++i)
      next.push_back(g.concat({hf[i], hb[cur.size() - 1 - i]}));
    cur = std::move(next);
  }
  return cur;
}

}  // namespace nucleus::numeric
