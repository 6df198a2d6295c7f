#ifndef NUCLEUS_NUMERIC_HPP
#define NUCLEUS_NUMERIC_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace nucleus::numeric {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> sh);
  Tensor(std::vector<std::size_t> sh, std::vector<double> vals);

  std::size_t size() const { return v.size(); }
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
  std::string shape_str() const;
  void zero();

  bool operator==(const Tensor&) const = default;
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1) : eng_(seed) {}
  void seed(std::uint64_t s) { eng_.seed(s); }
  double uniform(double lo, double hi);
  double normal(double mean, double sd);
  // uniform integer in [0, n)
  std::size_t below(std::size_t n);
  std::uint64_t raw() { return eng_(); }
  template <class T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i)
      std::swap(xs[i - 1], xs[below(i)]);
  }

 private:
  std::mt19937_64 eng_;
};

// Process-wide stream used by model init, shuffling and exploration.
Rng& global_rng();
void seed_rng(std::uint64_t seed);

class Model;

struct Parameter {
  int index = -1;
  bool valid() const { return index >= 0; }
};

struct LookupParameter {
  int index = -1;
  bool valid() const { return index >= 0; }
};

// Named parameter store with Adam state.
class Model {
 public:
  struct Slot {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor adam_m, adam_v;
    bool lookup = false;
    std::size_t rows = 0, cols = 0;
    std::vector<std::size_t> touched;  // rows with pending gradient
  };

  Parameter add_param(const std::string& name,
                      std::vector<std::size_t> shape, Rng& rng);
  Parameter add_param_const(const std::string& name,
                            std::vector<std::size_t> shape, double fill);
  LookupParameter add_lookup(const std::string& name, std::size_t rows,
                             std::size_t cols, Rng& rng);

  Tensor& value(Parameter p) { return slots_.at(p.index).value; }
  const Tensor& value(Parameter p) const { return slots_.at(p.index).value; }
  Tensor& lookup_table(LookupParameter p) { return slots_.at(p.index).value; }
  const Tensor& lookup_table(LookupParameter p) const {
    return slots_.at(p.index).value;
  }
  std::size_t lookup_rows(LookupParameter p) const {
    return slots_.at(p.index).rows;
  }
  std::size_t lookup_dim(LookupParameter p) const {
    return slots_.at(p.index).cols;
  }

  std::vector<Slot>& slots() { return slots_; }
  const std::vector<Slot>& slots() const { return slots_; }
  void zero_grads();

 private:
  friend class Graph;
  std::vector<Slot> slots_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamTrainer {
 public:
  explicit AdamTrainer(Model& m, AdamConfig cfg = {}) : model_(&m), cfg_(cfg) {}
  // Applies accumulated gradients and clears them.
  void update();
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  Model* model_;
  AdamConfig cfg_;
  long t_ = 0;
};

class Graph;

struct Expr {
  Graph* g = nullptr;
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Graph {
 public:
  explicit Graph(Model& m) : model_(&m) {}

  Expr constant(Tensor t);
  Expr param(Parameter p);
  Expr lookup(LookupParameter p, std::size_t row);

  Expr add(Expr a, Expr b);
  Expr cmul(Expr a, Expr b);             // componentwise product
  Expr scale(Expr a, double k);
  Expr matvec(Expr w, Expr x);           // w: [r,c], x: [c] -> [r]
  Expr affine(Expr w, Expr x, Expr b);   // w*x + b
  Expr concat(const std::vector<Expr>& xs);
  Expr slice(Expr x, std::size_t start, std::size_t len);
  Expr tanh(Expr x);
  Expr logistic(Expr x);
  Expr dot(Expr a, Expr b);              // scalar
  Expr sum_elems(Expr x);                // scalar

  // (loss, probs); probs are readable through probs_of(loss_expr)
  Expr softmax_xent(Expr logits, std::size_t gold_index);
  const Tensor& probs_of(Expr xent) const;

  // max(0, margin + max(bad) - max(good)); empty bad set gives zero loss
  Expr hinge(Expr scores, const std::vector<std::size_t>& good,
             const std::vector<std::size_t>& bad, double margin = 1.0);

  const Tensor& value(Expr e) const;
  void backward(Expr loss);

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  enum class Op {
    constant, param, lookup, add, cmul, scale, matvec, affine, concat,
    slice, tanh_, logistic_, dot_, sum_elems_, softmax_xent_, hinge_
  };
  struct Node {
    Op op;
    std::vector<int> args;
    Tensor val;
    Tensor grad;
    const Tensor* ext = nullptr;  // param/lookup row view source
    int slot = -1;                // model slot for param/lookup
    std::size_t a = 0, b = 0;     // op attributes (row, start/len, gold)
    double k = 0.0;
    Tensor aux;                   // cached softmax probs
    std::vector<std::size_t> good, bad;  // hinge sets
  };

  const Tensor& val(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.ext ? *n.ext : n.val;
  }
  int push(Node n);
  void check_finite(int id);
  Expr wrap(int id) { return Expr{this, id}; }

  Model* model_;
  std::vector<Node> nodes_;
};

// ---- LSTM machinery ----

struct LstmParams {
  std::size_t input_dim = 0, hidden_dim = 0;
  Parameter wx;  // [4H, I]
  Parameter wh;  // [4H, H]
  Parameter bias;  // [4H], forget block initialized to forget_bias
  Parameter h0, c0;  // learned initial states

  static LstmParams create(Model& m, const std::string& prefix,
                           std::size_t input_dim, std::size_t hidden_dim,
                           Rng& rng, double forget_bias = 1.0);
};

// One step of the standard LSTM recurrence; gate order is [i, f, o, g].
std::pair<Expr, Expr> lstm_step(Graph& g, const LstmParams& p, Expr x,
                                Expr h_prev, Expr c_prev);

// Runs an LSTM over a sequence, returning hidden states per position.
std::vector<Expr> lstm_run(Graph& g, const LstmParams& p,
                           const std::vector<Expr>& xs);

struct BiLstm {
  std::vector<LstmParams> fwd, bwd;  // one per layer

  static BiLstm create(Model& m, const std::string& prefix, std::size_t layers,
                       std::size_t input_dim, std::size_t hidden_per_dir,
                       Rng& rng);
  std::size_t output_dim() const { return fwd.empty() ? 0 : 2 * fwd.back().hidden_dim; }
  // Per-position concatenation of forward and backward top-layer states.
  std::vector<Expr> encode(Graph& g, const std::vector<Expr>& xs) const;
};

}  // namespace nucleus::numeric

#endif
