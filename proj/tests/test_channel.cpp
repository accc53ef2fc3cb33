#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "dysflm/channel.hpp"
#include "dysflm/errors.hpp"

using namespace dysflm;

namespace {

std::string surface(const std::vector<std::string>& toks) {
  std::string s;
  for (const auto& t : toks) {
    if (!s.empty()) s += ' ';
    s += t;
  }
  return s;
}

}  // namespace

TEST_CASE("uniform channel validates and has sane outcome mass") {
  ChannelSpec spec = make_uniform_channel({"a", "b", "c"}, 0.1, 0.05, 0.02);
  CHECK_NOTHROW(spec.validate());
  const auto& out = spec.table.at("a");
  double sub_total = 0.0;
  for (const auto& [tok, p] : out.p_sub) {
    CHECK(tok != "a");
    sub_total += p;
  }
  CHECK(out.p_keep + sub_total + out.p_delete == doctest::Approx(1.0));
  CHECK(sub_total == doctest::Approx(0.1));
}

TEST_CASE("exact distribution sums to one and merges surface duplicates") {
  ChannelSpec spec = make_uniform_channel({"a", "b"}, 0.2, 0.1, 0.15);
  std::vector<std::string> truth = {"a", "b", "a"};
  auto dist = exact_distribution(spec, truth);
  double total = 0.0;
  std::map<std::string, int> seen;
  for (const auto& [toks, p] : dist) {
    CHECK(p > 0.0);
    total += p;
    ++seen[surface(toks)];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  for (const auto& [s, n] : seen) CHECK(n == 1);
}

TEST_CASE("hand-computed two-token case") {
  // alphabet {a,b}: keep .8, sub .15 (all onto the other token), del .05,
  // no insertions -> closed form for truth "a"
  ChannelSpec spec = make_uniform_channel({"a", "b"}, 0.15, 0.05, 0.0);
  auto dist = exact_distribution(spec, {"a"});
  std::map<std::string, double> p;
  for (const auto& [toks, q] : dist) p[surface(toks)] = q;
  CHECK(p.at("a") == doctest::Approx(0.80));
  CHECK(p.at("b") == doctest::Approx(0.15));
  CHECK(p.at("") == doctest::Approx(0.05));
}

TEST_CASE("sampler tracks the exact distribution") {
  ChannelSpec spec = make_uniform_channel({"a", "b"}, 0.2, 0.1, 0.1);
  std::vector<std::string> truth = {"a", "b"};
  auto dist = exact_distribution(spec, truth);
  std::map<std::string, double> exact;
  for (const auto& [toks, p] : dist) exact[surface(toks)] = p;

  Rng rng = make_rng(11, "channel-test");
  std::map<std::string, int> counts;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    TextHypothesis h = sample_hypothesis(spec, truth, rng);
    ++counts[surface(h.tokens)];
    CHECK(std::isfinite(h.log_prob));
    CHECK(h.log_prob <= 1e-12);
  }
  for (const auto& [s, c] : counts) {
    (void)c;
    REQUIRE(exact.count(s) == 1);  // sampler never leaves the support
  }
  // the big-mass strings should match within MC noise
  for (const auto& [s, p] : exact)
    if (p > 0.02)
      CHECK(std::abs(static_cast<double>(counts[s]) / n - p) < 0.02);
}

TEST_CASE("sampled path log-prob is exact on a deterministic channel") {
  ChannelSpec spec = make_uniform_channel({"a", "b"}, 0.0, 0.0, 0.0);
  Rng rng = make_rng(1, "det");
  TextHypothesis h = sample_hypothesis(spec, {"a", "b", "a"}, rng);
  CHECK(h.tokens == std::vector<std::string>{"a", "b", "a"});
  CHECK(h.log_prob == doctest::Approx(0.0));
}

TEST_CASE("enumeration refuses oversized lattices loudly") {
  ChannelSpec spec = make_uniform_channel({"a", "b", "c", "d"}, 0.2, 0.1, 0.1);
  std::vector<std::string> truth(40, "a");
  CHECK_THROWS_AS(exact_distribution(spec, truth, 1000), ConfigError);
}

TEST_CASE("repeat collapse moves mass onto deletion of repeats") {
  ChannelSpec spec = make_uniform_channel({"a", "b"}, 0.0, 0.0, 0.0, 0.5);
  auto dist = exact_distribution(spec, {"a", "a"});
  std::map<std::string, double> p;
  for (const auto& [toks, q] : dist) p[surface(toks)] = q;
  CHECK(p.at("a a") == doctest::Approx(0.5));
  CHECK(p.at("a") == doctest::Approx(0.5));
  // non-repeats untouched
  auto dist2 = exact_distribution(spec, {"a", "b"});
  CHECK(dist2.size() == 1);
  CHECK(dist2[0].second == doctest::Approx(1.0));
}

TEST_CASE("channel n-best is sorted, distinct and headed by the 1-best") {
  ChannelSpec spec = make_uniform_channel({"a", "b", "c"}, 0.15, 0.05, 0.05);
  std::vector<std::string> truth = {"a", "b", "c", "a"};
  auto best = channel_best(spec, truth);
  auto nbest = channel_nbest(spec, truth, 12, 10);
  REQUIRE(!nbest.empty());
  CHECK(nbest[0].tokens == best.tokens);
  CHECK(nbest[0].log_prob == doctest::Approx(best.log_prob));
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < nbest.size(); ++i) {
    if (i) CHECK(nbest[i - 1].log_prob >= nbest[i].log_prob);
    ++seen[surface(nbest[i].tokens)];
  }
  for (const auto& [s, n] : seen) CHECK(n == 1);
}

TEST_CASE("channel spec JSON round-trips") {
  ChannelSpec spec = make_uniform_channel({"x", "y"}, 0.1, 0.2, 0.05, 0.3);
  save_channel_spec(spec, "/tmp/dysflm_chan.json");
  ChannelSpec back = load_channel_spec("/tmp/dysflm_chan.json");
  CHECK(back.alphabet == spec.alphabet);
  CHECK(back.p_insert == doctest::Approx(spec.p_insert));
  CHECK(back.repeat_collapse_p == doctest::Approx(spec.repeat_collapse_p));
  CHECK(back.table.at("x").p_keep == doctest::Approx(spec.table.at("x").p_keep));
  auto d1 = exact_distribution(spec, {"x", "y"});
  auto d2 = exact_distribution(back, {"x", "y"});
  REQUIRE(d1.size() == d2.size());
  for (std::size_t i = 0; i < d1.size(); ++i)
    CHECK(d1[i].second == doctest::Approx(d2[i].second));
}
