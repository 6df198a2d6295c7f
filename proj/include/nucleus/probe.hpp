#ifndef NUCLEUS_PROBE_HPP
#define NUCLEUS_PROBE_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nucleus/cbow.hpp"
#include "nucleus/numeric.hpp"
#include "nucleus/parser.hpp"
#include "nucleus/treebank_ops.hpp"

namespace nucleus::probe {

using treebank::ProbeInstance;
using treebank::Task;
using treebank::TargetKind;

enum class Layer { type, chr, token, composed, w2v };
std::string to_string(Layer l);
Layer layer_from_string(const std::string& s);

struct VectorSet {
  Layer layer = Layer::token;
  TargetKind target_kind = TargetKind::FMV;
  Task task = Task::transitivity;
  std::size_t dim = 0;
  std::vector<ProbeInstance> instances;
  std::vector<std::vector<double>> vectors;  // aligned with instances

  std::size_t size() const { return instances.size(); }
};

// Frozen-model extraction for parser-side layers. `composed` runs the
// recursive parser over each sentence and reads the final c_i; requesting it
// from a non-recursive model is an error.
std::map<Layer, VectorSet> extract_vectors(
    const parser::ParserModel& m, const conllu::Treebank& tb,
    const std::vector<ProbeInstance>& instances, Task task,
    TargetKind target_kind, const std::vector<Layer>& layers);

// Embedding-table lookup for the language-model comparison layer.
VectorSet extract_w2v_vectors(const cbow::TypeEmbeddingTable& table,
                              const conllu::Treebank& tb,
                              const std::vector<ProbeInstance>& instances,
                              Task task, TargetKind target_kind);

// Accuracy of constantly predicting the train-majority label (ties broken by
// first-seen order); absent when dev is empty.
std::optional<double> majority_baseline(
    const std::vector<std::string>& train_labels,
    const std::vector<std::string>& dev_labels);

enum class ProbeKind { mlp1, linear };

struct ProbeConfig {
  ProbeKind kind = ProbeKind::mlp1;
  std::size_t hidden = 100;
  std::size_t epochs = 20;
  std::size_t batch = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

class ProbeModel {
 public:
  ProbeModel(std::size_t dim, std::vector<std::string> classes,
             ProbeConfig cfg);
  const std::vector<std::string>& classes() const { return classes_; }
  std::string predict(const std::vector<double>& x) const;

 private:
  friend ProbeModel train_probe(const VectorSet&, const ProbeConfig&);
  std::size_t class_id(const std::string& label) const;
  ProbeConfig cfg_;
  std::vector<std::string> classes_;
  numeric::Model model_;
  numeric::Parameter w1_, b1_, w2_, b2_;
};

ProbeModel train_probe(const VectorSet& train, const ProbeConfig& cfg = {});
double eval_probe(const ProbeModel& pm, const VectorSet& dev);  // percent

// Vector file: header line "layer target_kind task dim count", then
// "sentence:token <TAB> label <TAB> v1 ... vd".
std::string serialize_vector_set(const VectorSet& vs);
VectorSet parse_vector_set(const std::string& text);
void save_vector_set(const VectorSet& vs, const std::string& path);
VectorSet load_vector_set(const std::string& path);

}  // namespace nucleus::probe

#endif
