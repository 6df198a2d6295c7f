#include "nucleus/cbow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nucleus/kernels.hpp"
#include "nucleus/numeric.hpp"

namespace nucleus::cbow {

std::optional<std::size_t> TypeEmbeddingTable::id(const std::string& w) const {
  auto it = ids.find(w);
  if (it == ids.end()) return std::nullopt;
  return it->second;
}

double TypeEmbeddingTable::cosine(const std::string& a,
                                  const std::string& b) const {
  auto ia = id(a);
  auto ib = id(b);
  if (!ia || !ib) return 0.0;
  const double* va = row(*ia);
  const double* vb = row(*ib);
  const double num = kernels::dot(va, vb, dim);
  const double na = std::sqrt(kernels::dot(va, va, dim));
  const double nb = std::sqrt(kernels::dot(vb, vb, dim));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return num / (na * nb);
}

CbowResult train_cbow(const std::vector<std::vector<std::string>>& sentences,
                      const CbowConfig& cfg) {
  std::map<std::string, long> counts;
  long corpus_tokens = 0;
  for (const auto& s : sentences) {
    for (const auto& w : s) {
      ++counts[w];
      ++corpus_tokens;
    }
  }
  if (corpus_tokens == 0) throw numeric::UsageError("empty cbow corpus");

  CbowResult res;
  TypeEmbeddingTable& table = res.table;
  table.dim = cfg.dim;
  std::vector<long> vocab_counts;
  for (const auto& [w, c] : counts) {  // map order: deterministic
    if (c >= cfg.min_count) {
      table.ids[w] = table.vocab.size();
      table.vocab.push_back(w);
      vocab_counts.push_back(c);
    }
  }
  const std::size_t vsize = table.vocab.size();
  if (vsize == 0)
    throw numeric::UsageError("cbow: no word reaches min_count " +
                              std::to_string(cfg.min_count));

  numeric::Rng rng(cfg.seed);
  table.vectors.assign(vsize * cfg.dim, 0.0);
  for (double& x : table.vectors)
    x = rng.uniform(-0.5, 0.5) / static_cast<double>(cfg.dim);
  std::vector<double> out_vecs(vsize * cfg.dim, 0.0);  // output layer

  // unigram^0.75 negative-sampling table
  constexpr std::size_t kTableSize = 1u << 20;
  std::vector<std::size_t> neg_table(kTableSize);
  {
    double z = 0.0;
    for (long c : vocab_counts) z += std::pow(static_cast<double>(c), 0.75);
    std::size_t i = 0;
    double cum = 0.0;
    for (std::size_t w = 0; w < vsize; ++w) {
      cum += std::pow(static_cast<double>(vocab_counts[w]), 0.75) / z;
      const std::size_t upto = std::min(
          kTableSize, static_cast<std::size_t>(cum * kTableSize + 0.5));
      for (; i < upto; ++i) neg_table[i] = w;
    }
    for (; i < kTableSize; ++i) neg_table[i] = vsize - 1;
  }

  // sentences mapped to in-vocab ids
  std::vector<std::vector<std::size_t>> corpus;
  long train_tokens = 0;
  for (const auto& s : sentences) {
    std::vector<std::size_t> ids;
    for (const auto& w : s) {
      auto it = table.ids.find(w);
      if (it != table.ids.end()) ids.push_back(it->second);
    }
    train_tokens += static_cast<long>(ids.size());
    if (ids.size() >= 2) corpus.push_back(std::move(ids));
  }

  const double total_steps =
      static_cast<double>(std::max<long>(1, train_tokens)) *
      static_cast<double>(cfg.epochs);
  long step = 0;
  std::vector<double> ctx(cfg.dim), grad_ctx(cfg.dim);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (const auto& sent : corpus) {
      for (std::size_t pos = 0; pos < sent.size(); ++pos) {
        const double lr = std::max(
            cfg.lr * (1.0 - static_cast<double>(step++) / total_steps),
            cfg.lr * 1e-4);
        const std::size_t win = 1 + rng.below(cfg.window);
        std::fill(ctx.begin(), ctx.end(), 0.0);
        std::size_t nctx = 0;
        for (std::size_t j = pos >= win ? pos - win : 0;
             j < std::min(sent.size(), pos + win + 1); ++j) {
          if (j == pos) continue;
          kernels::axpy(1.0, table.row(sent[j]), ctx.data(), cfg.dim);
          ++nctx;
        }
        if (nctx == 0) continue;
        for (double& x : ctx) x /= static_cast<double>(nctx);
        std::fill(grad_ctx.begin(), grad_ctx.end(), 0.0);

        for (std::size_t k = 0; k <= cfg.negatives; ++k) {
          std::size_t target;
          double label;
          if (k == 0) {
            target = sent[pos];
            label = 1.0;
          } else {
            target = neg_table[rng.below(kTableSize)];
            if (target == sent[pos]) continue;
            label = 0.0;
          }
          double* ov = out_vecs.data() + target * cfg.dim;
          const double score = kernels::dot(ctx.data(), ov, cfg.dim);
          const double pred = 1.0 / (1.0 + std::exp(-score));
          epoch_loss -= label > 0.5 ? std::log(std::max(pred, 1e-12))
                                    : std::log(std::max(1.0 - pred, 1e-12));
          const double g = (label - pred) * lr;
          kernels::axpy(g, ov, grad_ctx.data(), cfg.dim);
          kernels::axpy(g, ctx.data(), ov, cfg.dim);
        }
        // distribute the context gradient over the window
        for (std::size_t j = pos >= win ? pos - win : 0;
             j < std::min(sent.size(), pos + win + 1); ++j) {
          if (j == pos) continue;
          kernels::axpy(1.0, grad_ctx.data(),
                        table.vectors.data() + sent[j] * cfg.dim, cfg.dim);
        }
      }
    }
    res.epoch_loss.push_back(epoch_loss);
  }
  return res;
}

std::string serialize_embeddings(const TypeEmbeddingTable& t) {
  std::ostringstream out;
  out.precision(17);
  out << t.vocab.size() << " " << t.dim << "\n";
  for (std::size_t i = 0; i < t.vocab.size(); ++i) {
    out << t.vocab[i];
    const double* v = t.row(i);
    for (std::size_t d = 0; d < t.dim; ++d) out << " " << v[d];
    out << "\n";
  }
  return out.str();
}

TypeEmbeddingTable parse_embeddings(const std::string& text) {
  std::istringstream in(text);
  TypeEmbeddingTable t;
  std::size_t n = 0;
  in >> n >> t.dim;
  if (!in) throw numeric::UsageError("malformed embedding header");
  t.vectors.assign(n * t.dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::string w;
    in >> w;
    t.ids[w] = i;
    t.vocab.push_back(w);
    for (std::size_t d = 0; d < t.dim; ++d) in >> t.vectors[i * t.dim + d];
  }
  if (!in) throw numeric::UsageError("truncated embedding file");
  return t;
}

void save_embeddings(const TypeEmbeddingTable& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw numeric::UsageError("cannot write " + path);
  out << serialize_embeddings(t);
}

TypeEmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw numeric::UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_embeddings(ss.str());
}

}  // namespace nucleus::cbow
