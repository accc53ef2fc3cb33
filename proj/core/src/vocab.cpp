#include "dysflm/vocab.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "dysflm/errors.hpp"

namespace dysflm {

Vocab::Vocab() {
  for (const char* t : {"[PAD]", "[BOS]", "[EOS]", "[SEP]", "[LAB]", "[UNK]"})
    add(t);
  for (auto c : kAllClasses) add(std::string(class_tag(c)));
  add("None");
}

int Vocab::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

Vocab Vocab::build(const std::vector<std::string>& corpus_tokens) {
  Vocab v;
  std::set<std::string> sorted(corpus_tokens.begin(), corpus_tokens.end());
  for (const auto& t : sorted) v.add(t);
  return v;
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::has(const std::string& token) const {
  return index_.count(token) > 0;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size())
    throw DataError("vocab: token id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocab::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

std::vector<std::string> split_ws(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string join_ws(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace dysflm
