#ifndef NUCLEUS_CONLLU_HPP
#define NUCLEUS_CONLLU_HPP

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nucleus::conllu {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Morphological feature bundle, kept sorted by feature name.
class MorphFeatures {
 public:
  MorphFeatures() = default;

  void set(const std::string& name, const std::string& value);
  std::optional<std::string> get(const std::string& name) const;
  bool has(const std::string& name, const std::string& value) const;
  bool empty() const { return feats_.empty(); }

  const std::vector<std::pair<std::string, std::string>>& items() const {
    return feats_;
  }

  // `_` or `A=B|C=D`; names are case-sensitive.
  static MorphFeatures parse(const std::string& s);
  std::string str() const;

  bool operator==(const MorphFeatures&) const = default;

 private:
  std::vector<std::pair<std::string, std::string>> feats_;
};

struct Token {
  int id = 0;  // 1-based within the sentence
  std::string form;
  std::string lemma;
  std::string upos;
  std::string xpos;
  MorphFeatures feats;
  int head = 0;  // 0 = root
  std::string deprel;
  std::string deps;
  std::string misc;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::vector<std::string> comments;  // '#' lines, verbatim, in order
  std::vector<Token> tokens;
  // Multiword-token ranges and empty nodes, carried as opaque lines.
  // .first = number of syntactic words preceding the line.
  std::vector<std::pair<int, std::string>> passthrough;

  const Token& at(int id) const { return tokens.at(static_cast<size_t>(id) - 1); }
  Token& at(int id) { return tokens.at(static_cast<size_t>(id) - 1); }
  int size() const { return static_cast<int>(tokens.size()); }

  // Children of token `id` (or of the root for id == 0), in linear order.
  std::vector<int> children(int id) const;

  bool operator==(const Sentence&) const = default;
};

using Treebank = std::vector<Sentence>;

// Throws ValidationError on out-of-range heads, head==id, cycles,
// or (single_root) multiple tokens attached to 0.
void validate_tree(const Sentence& s, bool single_root = true);

Treebank parse_conllu(std::istream& in, bool strict = false);
Treebank parse_conllu_string(const std::string& text, bool strict = false);
Treebank load_conllu_file(const std::string& path, bool strict = false);

void serialize_conllu(const Treebank& tb, std::ostream& out);
std::string serialize_conllu_string(const Treebank& tb);
void save_conllu_file(const Treebank& tb, const std::string& path);

}  // namespace nucleus::conllu

#endif
