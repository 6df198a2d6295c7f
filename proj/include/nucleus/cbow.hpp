#ifndef NUCLEUS_CBOW_HPP
#define NUCLEUS_CBOW_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nucleus::cbow {

struct TypeEmbeddingTable {
  std::vector<std::string> vocab;          // index -> word
  std::map<std::string, std::size_t> ids;  // word -> index
  std::size_t dim = 0;
  std::vector<double> vectors;             // row-major |V| x dim

  const double* row(std::size_t i) const { return vectors.data() + i * dim; }
  std::optional<std::size_t> id(const std::string& w) const;
  double cosine(const std::string& a, const std::string& b) const;
};

struct CbowConfig {
  std::size_t dim = 100;
  std::size_t window = 5;
  long min_count = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double lr = 0.025;  // linear decay to lr/10000 over training
  std::uint64_t seed = 1;
};

struct CbowResult {
  TypeEmbeddingTable table;
  std::vector<double> epoch_loss;
};

// CBOW with negative sampling over tokenized sentences. Deterministic under
// a fixed seed on a single worker.
CbowResult train_cbow(const std::vector<std::vector<std::string>>& sentences,
                      const CbowConfig& cfg = {});

// First line "|V| dim", then "word v1 ... vdim" per line.
std::string serialize_embeddings(const TypeEmbeddingTable& t);
TypeEmbeddingTable parse_embeddings(const std::string& text);
void save_embeddings(const TypeEmbeddingTable& t, const std::string& path);
TypeEmbeddingTable load_embeddings(const std::string& path);

}  // namespace nucleus::cbow

#endif
