#include "dysflm/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "dysflm/errors.hpp"

namespace dysflm {

std::size_t edit_distance(std::span<const int> a, std::span<const int> b) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0) return m;
  if (m == 0) return n;
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

std::size_t edit_distance(const std::vector<int>& a, const std::vector<int>& b) {
  return edit_distance(std::span<const int>(a), std::span<const int>(b));
}

double word_error_rate(std::span<const int> hyp, std::span<const int> ref) {
  if (ref.empty()) throw DataError("word_error_rate: empty reference");
  return static_cast<double>(edit_distance(hyp, ref)) /
         static_cast<double>(ref.size());
}

void PRF::finalize() {
  precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  f1 = (precision + recall) > 0.0
           ? 2.0 * precision * recall / (precision + recall)
           : 0.0;
}

F1Report multilabel_prf(const std::vector<LabelSet>& predictions,
                        const std::vector<LabelSet>& golds, Schema schema) {
  if (predictions.size() != golds.size())
    throw DataError("multilabel_prf: prediction/gold length mismatch");
  F1Report rep;
  rep.schema = schema;
  auto classes = schema_classes(schema);
  for (auto c : classes) rep.per_class[c] = PRF{};
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    for (auto c : classes) {
      bool p = predictions[i].contains(c);
      bool g = golds[i].contains(c);
      PRF& s = rep.per_class[c];
      if (p && g) ++s.tp;
      else if (p) ++s.fp;
      else if (g) ++s.fn;
    }
  }
  double sum = 0.0;
  for (auto c : classes) {
    rep.per_class[c].finalize();
    sum += rep.per_class[c].f1;
  }
  rep.macro_f1 = classes.empty() ? 0.0 : sum / static_cast<double>(classes.size());
  return rep;
}

std::string F1Report::render_table() const {
  char buf[128];
  std::string out = "Class   P      R      F1\n";
  for (const auto& [c, s] : per_class) {
    std::snprintf(buf, sizeof(buf), "%-6s  %.2f   %.2f   %.2f\n",
                  std::string(class_tag(c)).c_str(), s.precision, s.recall,
                  s.f1);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "macro-F1  %.2f\n", macro_f1);
  out += buf;
  return out;
}

std::string F1Report::render_key_values() const {
  char buf[160];
  std::string out;
  for (const auto& [c, s] : per_class) {
    std::snprintf(buf, sizeof(buf),
                  "%s.tp=%zu\n%s.fp=%zu\n%s.fn=%zu\n"
                  "%s.precision=%.6f\n%s.recall=%.6f\n%s.f1=%.6f\n",
                  std::string(class_tag(c)).c_str(), s.tp,
                  std::string(class_tag(c)).c_str(), s.fp,
                  std::string(class_tag(c)).c_str(), s.fn,
                  std::string(class_tag(c)).c_str(), s.precision,
                  std::string(class_tag(c)).c_str(), s.recall,
                  std::string(class_tag(c)).c_str(), s.f1);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "macro_f1=%.6f\n", macro_f1);
  out += buf;
  return out;
}

}  // namespace dysflm
