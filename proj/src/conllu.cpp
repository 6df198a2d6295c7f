#include "nucleus/conllu.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace nucleus::conllu {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cols;
}

int parse_int(const std::string& s, long lineno, const char* what) {
  if (s.empty()) throw FormatError("line " + std::to_string(lineno) +
                                   ": empty " + what);
  for (char c : s) {
    if (c < '0' || c > '9')
      throw FormatError("line " + std::to_string(lineno) + ": non-integer " +
                        what + " '" + s + "'");
  }
  return std::stoi(s);
}

}  // namespace

void MorphFeatures::set(const std::string& name, const std::string& value) {
  if (name.empty() || value.empty())
    throw FormatError("empty feature name or value");
  auto it = std::lower_bound(
      feats_.begin(), feats_.end(), name,
      [](const auto& p, const std::string& n) { return p.first < n; });
  if (it != feats_.end() && it->first == name)
    it->second = value;
  else
    feats_.insert(it, {name, value});
}

std::optional<std::string> MorphFeatures::get(const std::string& name) const {
  auto it = std::lower_bound(
      feats_.begin(), feats_.end(), name,
      [](const auto& p, const std::string& n) { return p.first < n; });
  if (it != feats_.end() && it->first == name) return it->second;
  return std::nullopt;
}

bool MorphFeatures::has(const std::string& name,
                        const std::string& value) const {
  auto v = get(name);
  return v && *v == value;
}

MorphFeatures MorphFeatures::parse(const std::string& s) {
  MorphFeatures f;
  if (s == "_" || s.empty()) return f;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find('|', start);
    if (end == std::string::npos) end = s.size();
    std::string unit = s.substr(start, end - start);
    std::size_t eq = unit.find('=');
    if (eq == std::string::npos)
      throw FormatError("malformed feature unit '" + unit + "' in '" + s +
                        "'");
    f.set(unit.substr(0, eq), unit.substr(eq + 1));
    if (end == s.size()) break;
    start = end + 1;
  }
  return f;
}

std::string MorphFeatures::str() const {
  if (feats_.empty()) return "_";
  std::string out;
  for (const auto& [name, value] : feats_) {
    if (!out.empty()) out += '|';
    out += name;
    out += '=';
    out += value;
  }
  return out;
}

std::vector<int> Sentence::children(int id) const {
  std::vector<int> out;
  for (const Token& t : tokens)
    if (t.head == id) out.push_back(t.id);
  return out;
}

void validate_tree(const Sentence& s, bool single_root) {
  const int n = s.size();
  int roots = 0;
  for (const Token& t : s.tokens) {
    if (t.head < 0 || t.head > n)
      throw ValidationError("token " + std::to_string(t.id) +
                            ": head out of range");
    if (t.head == t.id)
      throw ValidationError("token " + std::to_string(t.id) +
                            " is its own head");
    if (t.head == 0) ++roots;
  }
  if (n > 0 && roots == 0) throw ValidationError("no root token");
  if (single_root && roots > 1)
    throw ValidationError("multiple root tokens (" + std::to_string(roots) +
                          ")");
  // cycle check: walk to the root from every node
  for (const Token& t : s.tokens) {
    int cur = t.id;
    int steps = 0;
    while (cur != 0) {
      cur = s.at(cur).head;
      if (++steps > n)
        throw ValidationError("cycle involving token " +
                              std::to_string(t.id));
    }
  }
}

Treebank parse_conllu(std::istream& in, bool strict) {
  Treebank tb;
  Sentence cur;
  bool any = false;
  std::string line;
  long lineno = 0;

  auto flush = [&] {
    if (any) {
      if (strict) validate_tree(cur);
      tb.push_back(std::move(cur));
      cur = Sentence{};
      any = false;
    }
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    any = true;
    if (line[0] == '#') {
      cur.comments.push_back(line);
      continue;
    }
    auto cols = split_tabs(line);
    if (cols.size() != 10)
      throw FormatError("line " + std::to_string(lineno) + ": expected 10 "
                        "columns, got " + std::to_string(cols.size()));
    // multiword ranges (3-4) and empty nodes (3.1) pass through untouched
    if (cols[0].find('-') != std::string::npos ||
        cols[0].find('.') != std::string::npos) {
      cur.passthrough.emplace_back(static_cast<int>(cur.tokens.size()), line);
      continue;
    }
    Token t;
    t.id = parse_int(cols[0], lineno, "token id");
    t.form = cols[1];
    t.lemma = cols[2];
    t.upos = cols[3];
    t.xpos = cols[4];
    try {
      t.feats = MorphFeatures::parse(cols[5]);
    } catch (const FormatError& e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (cols[6] == "_" && !strict) {
      t.head = 0;  // unannotated input outside strict mode
    } else {
      t.head = parse_int(cols[6], lineno, "head");
    }
    t.deprel = cols[7];
    t.deps = cols[8];
    t.misc = cols[9];
    if (t.id != static_cast<int>(cur.tokens.size()) + 1)
      throw FormatError("line " + std::to_string(lineno) +
                        ": token id out of sequence");
    cur.tokens.push_back(std::move(t));
  }
  flush();
  return tb;
}

Treebank parse_conllu_string(const std::string& text, bool strict) {
  std::istringstream in(text);
  return parse_conllu(in, strict);
}

Treebank load_conllu_file(const std::string& path, bool strict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return parse_conllu(in, strict);
}

void serialize_conllu(const Treebank& tb, std::ostream& out) {
  for (const Sentence& s : tb) {
    for (const std::string& c : s.comments) out << c << '\n';
    std::size_t pt = 0;
    for (int i = 0; i <= s.size(); ++i) {
      while (pt < s.passthrough.size() && s.passthrough[pt].first == i) {
        out << s.passthrough[pt].second << '\n';
        ++pt;
      }
      if (i == s.size()) break;
      const Token& t = s.tokens[static_cast<size_t>(i)];
      out << t.id << '\t' << t.form << '\t' << t.lemma << '\t' << t.upos
          << '\t' << t.xpos << '\t' << t.feats.str() << '\t' << t.head << '\t'
          << t.deprel << '\t' << t.deps << '\t' << t.misc << '\n';
    }
    out << '\n';
  }
}

std::string serialize_conllu_string(const Treebank& tb) {
  std::ostringstream out;
  serialize_conllu(tb, out);
  return out.str();
}

void save_conllu_file(const Treebank& tb, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  serialize_conllu(tb, out);
}

}  // namespace nucleus::conllu
