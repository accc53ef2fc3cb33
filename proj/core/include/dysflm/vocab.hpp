#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "dysflm/labels.hpp"

namespace dysflm {

// Token vocabulary shared by the LM, the data pipeline and the decoders.
// Reserved tokens and label tags occupy fixed low ids so that checkpoints
// and manifests agree on them regardless of the corpus.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kSep = 3;   // candidate separator for flattening
  static constexpr int kLab = 4;   // marks the start of label generation
  static constexpr int kUnk = 5;
  static constexpr int kFirstLabel = 6;  // Blk..Mod, then "None"
  static constexpr int kNone = kFirstLabel + 6;
  static constexpr int kFirstCorpus = kNone + 1;

  Vocab();

  // Corpus tokens are appended in sorted order by build(); add() keeps
  // insertion order for incremental use.
  int add(const std::string& token);
  static Vocab build(const std::vector<std::string>& corpus_tokens);

  int id(const std::string& token) const;  // kUnk when missing
  bool has(const std::string& token) const;
  const std::string& token(int id) const;  // throws DataError when out of range
  int size() const { return static_cast<int>(tokens_.size()); }

  static int label_token(DysfluencyClass c) {
    return kFirstLabel + static_cast<int>(c);
  }
  // kPad when the id is not a label tag or "None".
  bool is_label_region_token(int id) const {
    return id >= kFirstLabel && id <= kNone;
  }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  const std::vector<std::string>& all_tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

std::vector<std::string> split_ws(const std::string& text);
std::string join_ws(const std::vector<std::string>& tokens);

}  // namespace dysflm
