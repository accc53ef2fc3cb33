#include <doctest.h>

#include <cmath>
#include <map>

#include "dysflm/decoding.hpp"

using namespace dysflm;

namespace {

// Toy model over vocab {0,1,2(EOS)} whose step distribution depends on
// the last emitted token; small enough to enumerate exactly.
class ToyModel : public StepModel {
 public:
  int vocab_size() const override { return 3; }
  int eos_token() const override { return 2; }
  std::vector<double> next_log_probs(
      const std::vector<int>& emitted) const override {
    int last = emitted.empty() ? -1 : emitted.back();
    std::vector<double> p;
    switch (last) {
      case -1: p = {0.6, 0.3, 0.1}; break;
      case 0:  p = {0.1, 0.5, 0.4}; break;
      default: p = {0.2, 0.2, 0.6}; break;
    }
    std::vector<double> lp(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) lp[i] = std::log(p[i]);
    return lp;
  }
};

// exhaustive enumeration of all finished sequences up to max_len
void enumerate(const StepModel& m, std::vector<int>& prefix, double lp,
               std::size_t max_len,
               std::vector<std::pair<std::vector<int>, double>>& out) {
  if (prefix.size() >= max_len) return;  // no step budget left for EOS
  auto step = m.next_log_probs(prefix);
  for (int v = 0; v < m.vocab_size(); ++v) {
    if (v == m.eos_token()) {
      out.emplace_back(prefix, lp + step[v]);
    } else if (prefix.size() + 1 <= max_len) {
      prefix.push_back(v);
      enumerate(m, prefix, lp + step[v], max_len, out);
      prefix.pop_back();
    }
  }
}

}  // namespace

TEST_CASE("greedy decode follows the argmax chain") {
  ToyModel m;
  Hypothesis h = greedy_decode(m, 10);
  // start: argmax is 0; after 0: argmax is 1; after 1: argmax is EOS
  CHECK(h.tokens == std::vector<int>{0, 1});
  CHECK(h.finished);
  CHECK(h.log_prob == doctest::Approx(std::log(0.6) + std::log(0.5) +
                                      std::log(0.6)));
}

TEST_CASE("beam width 1 degenerates to greedy") {
  ToyModel m;
  Hypothesis g = greedy_decode(m, 8);
  NBestList b = beam_decode(m, 1, 1, 8);
  REQUIRE(b.hypotheses.size() == 1);
  CHECK(b.hypotheses[0].tokens == g.tokens);
  CHECK(b.hypotheses[0].log_prob == doctest::Approx(g.log_prob));
}

TEST_CASE("wide beam recovers the exhaustive top-n") {
  ToyModel m;
  const std::size_t max_len = 4;
  std::vector<std::pair<std::vector<int>, double>> all;
  std::vector<int> prefix;
  enumerate(m, prefix, 0.0, max_len, all);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  NBestList got = beam_decode(m, 64, 5, max_len);
  REQUIRE(got.hypotheses.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(got.hypotheses[i].finished);
    CHECK(got.hypotheses[i].tokens == all[i].first);
    CHECK(got.hypotheses[i].log_prob == doctest::Approx(all[i].second));
  }
}

TEST_CASE("ancestral samples stay inside the model support") {
  ToyModel m;
  Rng rng = make_rng(5, "sample");
  auto samples = ancestral_sample(m, 50, 6, rng);
  CHECK(samples.size() == 50);
  for (const auto& s : samples) {
    CHECK(s.tokens.size() <= 6);
    for (int t : s.tokens) CHECK(t != m.eos_token());
    CHECK(std::isfinite(s.log_prob));
  }
}

TEST_CASE("neg-WER utility clamps empty anchors") {
  CHECK(neg_wer_utility({1, 2}, {1, 2}) == doctest::Approx(0.0));
  CHECK(neg_wer_utility({1, 2}, {1, 3}) == doctest::Approx(-0.5));
  CHECK(neg_wer_utility({1}, {}) == doctest::Approx(-1.0));  // |ref| -> 1
}

TEST_CASE("mbr select maximizes mean utility with deterministic ties") {
  Hypothesis a{{1, 2, 3}, -1.0, true};
  Hypothesis b{{1, 2}, -0.5, true};
  Hypothesis c{{7, 8, 9}, -0.1, true};
  std::vector<Hypothesis> anchors = {a, a, b};
  Hypothesis pick = mbr_select({a, b, c}, anchors);
  CHECK(pick.tokens == a.tokens);  // closest on average to the anchors

  // exact tie in utility -> higher log_prob wins
  Hypothesis d{{1, 2, 3}, -2.0, true};
  Hypothesis pick2 = mbr_select({d, a}, {a});
  CHECK(pick2.log_prob == doctest::Approx(-1.0));
}

TEST_CASE("flatten joins candidates in order with the separator") {
  Hypothesis a{{10, 11}, -0.1, true};
  Hypothesis b{{12}, -0.3, true};
  auto flat = flatten_candidates({b, a}, 99);
  CHECK(flat == std::vector<int>{10, 11, 99, 12});
  auto flat_text = flatten_candidates_text(
      {{{"y"}, -0.3}, {{"x", "z"}, -0.1}}, "[SEP]");
  CHECK(flat_text == std::vector<std::string>{"x", "z", "[SEP]", "y"});
}
