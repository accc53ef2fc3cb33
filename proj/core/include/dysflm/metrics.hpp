#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dysflm/labels.hpp"

namespace dysflm {

// Levenshtein distance over token ids (two-row DP).
std::size_t edit_distance(std::span<const int> a, std::span<const int> b);
std::size_t edit_distance(const std::vector<int>& a, const std::vector<int>& b);

// edit_distance / |ref|; throws DataError on empty reference.
double word_error_rate(std::span<const int> hyp, std::span<const int> ref);

struct PRF {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;

  void finalize();  // recompute P/R/F1 from the counts (0 when undefined)
};

struct F1Report {
  Schema schema = Schema::Sep28k;
  std::map<DysfluencyClass, PRF> per_class;
  double macro_f1 = 0.0;

  std::string render_table() const;      // aligned plain text, Table-1 order
  std::string render_key_values() const; // machine-readable "key=value" lines
};

// Clip-wise per-class tp/fp/fn accumulation over the active schema.
F1Report multilabel_prf(const std::vector<LabelSet>& predictions,
                        const std::vector<LabelSet>& golds, Schema schema);

}  // namespace dysflm
