#include <doctest.h>

#include <set>

#include "dysflm/synth.hpp"

using namespace dysflm;

namespace {

SynthSpec small_spec() {
  SynthSpec spec;
  spec.clip_count = 60;
  spec.feature_frames = 20;
  spec.feature_dim = 4;
  spec.seed = 123;
  return spec;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  SynthSpec spec = small_spec();
  auto a = generate_synthetic_corpus(spec);
  auto b = generate_synthetic_corpus(spec);
  REQUIRE(a.manifest.clips.size() == b.manifest.clips.size());
  for (std::size_t i = 0; i < a.manifest.clips.size(); ++i) {
    const auto& ca = a.manifest.clips[i];
    const auto& cb = b.manifest.clips[i];
    CHECK(ca.id == cb.id);
    CHECK(ca.transcript == cb.transcript);
    CHECK(ca.labels == cb.labels);
    CHECK((ca.features - cb.features).lpNorm<Eigen::Infinity>() == 0.0f);
    CHECK(*ca.hyp_1best == *cb.hyp_1best);
    CHECK(*ca.hyp_mbr == *cb.hyp_mbr);
  }
  SynthSpec other = spec;
  other.seed = 124;
  auto c = generate_synthetic_corpus(other);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.manifest.clips.size(); ++i)
    if (a.manifest.clips[i].transcript != c.manifest.clips[i].transcript)
      any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("stored labels agree with the rule oracle") {
  auto res = generate_synthetic_corpus(small_spec());
  for (const auto& clip : res.manifest.clips)
    CHECK(clip.labels ==
          derive_labels(clip.transcript, clip.features, small_spec()));
}

TEST_CASE("rule oracle on hand-built clips") {
  SynthSpec spec = small_spec();
  Eigen::MatrixXf quiet =
      Eigen::MatrixXf::Zero(spec.feature_frames, spec.feature_dim);

  CHECK(derive_labels({"red", "blue"}, quiet, spec).empty());
  CHECK(derive_labels({"uh", "red"}, quiet, spec) ==
        make_label_set({DysfluencyClass::Int}));
  CHECK(derive_labels({"red", "red"}, quiet, spec) ==
        make_label_set({DysfluencyClass::Wrd}));
  CHECK(derive_labels({"r-", "red"}, quiet, spec) ==
        make_label_set({DysfluencyClass::Snd}));
  // fillers repeating are Int, not Wrd
  CHECK(derive_labels({"uh", "uh"}, quiet, spec) ==
        make_label_set({DysfluencyClass::Int}));

  Eigen::MatrixXf loud = quiet;
  loud.col(0).setConstant(1.0f);
  CHECK(derive_labels({"red"}, loud, spec) ==
        make_label_set({DysfluencyClass::Pro}));
  loud.col(1).setConstant(1.0f);
  CHECK(derive_labels({"red"}, loud, spec) ==
        make_label_set({DysfluencyClass::Pro, DysfluencyClass::Blk}));
  // Mod needs the ksof schema
  Eigen::MatrixXf mod = quiet;
  mod.col(2).setConstant(1.0f);
  CHECK(derive_labels({"red"}, mod, spec).empty());
  SynthSpec ksof = spec;
  ksof.schema = Schema::Ksof;
  CHECK(derive_labels({"red"}, mod, ksof) ==
        make_label_set({DysfluencyClass::Mod}));
}

TEST_CASE("splits follow the 70/10/20 index rule") {
  auto res = generate_synthetic_corpus(small_spec());
  int train = 0, dev = 0, test = 0;
  for (const auto& clip : res.manifest.clips) {
    switch (clip.split) {
      case Split::Train: ++train; break;
      case Split::Dev: ++dev; break;
      case Split::Test: ++test; break;
    }
  }
  CHECK(train == 42);
  CHECK(dev == 6);
  CHECK(test == 12);
}

TEST_CASE("every decoder mode gets hypotheses") {
  auto res = generate_synthetic_corpus(small_spec());
  for (const auto& clip : res.manifest.clips) {
    CHECK(clip.has_mode(DecoderMode::OneBest));
    CHECK(clip.has_mode(DecoderMode::NBest));
    CHECK(clip.has_mode(DecoderMode::Phon));
    CHECK(clip.has_mode(DecoderMode::Mbr));
    CHECK(clip.hyp_nbest->size() <= 10);
    for (std::size_t i = 1; i < clip.hyp_nbest->size(); ++i)
      CHECK((*clip.hyp_nbest)[i - 1].log_prob >=
            (*clip.hyp_nbest)[i].log_prob);
  }
}

TEST_CASE("phonization splits words into character tokens") {
  auto ph = phonize({"red", "uh"});
  CHECK(ph == std::vector<std::string>{"r", "e", "d", "u", "h"});
  CHECK(fragment_token("red") == "r-");
}

TEST_CASE("corpus token collection covers transcripts and hypotheses") {
  auto res = generate_synthetic_corpus(small_spec());
  auto tokens = collect_corpus_tokens(res.manifest);
  std::set<std::string> set(tokens.begin(), tokens.end());
  for (const auto& clip : res.manifest.clips) {
    for (const auto& t : clip.transcript) CHECK(set.count(t) == 1);
    for (const auto& t : *clip.hyp_1best) CHECK(set.count(t) == 1);
    for (const auto& t : *clip.hyp_phon) CHECK(set.count(t) == 1);
  }
}
