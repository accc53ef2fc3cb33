#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dysflm/manifest.hpp"

namespace dysflm {

// Synthetic stuttered-speech corpus: gold labels are deterministic
// functions of complementary cues. Lexical cues live only in the
// transcript (fillers -> Int, adjacent duplicates -> Wrd, a fragment
// token before its matching word -> Snd); acoustic cues live only in
// the feature channels (channel-0 mean -> Pro, channel-1 -> Blk,
// channel-2 -> Mod under the ksof schema).
struct SynthSpec {
  int clip_count = 100;
  int feature_frames = 150;  // L: 3 s at a 50 Hz frame rate
  int feature_dim = 16;      // a
  Schema schema = Schema::Sep28k;

  double threshold_pro = 0.5;
  double threshold_blk = 0.5;
  double threshold_mod = 0.5;
  double rate_pro = 0.35;
  double rate_blk = 0.35;
  double rate_mod = 0.30;
  double high_mean = 1.0;
  double low_mean = 0.0;
  double frame_noise = 0.25;

  double filler_rate = 0.35;
  double repetition_rate = 0.35;
  double fragment_rate = 0.35;
  int min_words = 4;
  int max_words = 8;

  // word-level ASR channel
  double word_sub = 0.03;
  double word_del = 0.02;
  double word_ins = 0.01;
  double repeat_collapse = 0.0;
  // phone-level channel
  double phon_sub = 0.03;
  double phon_del = 0.02;
  double phon_ins = 0.01;

  std::size_t nbest_width = 12;
  std::size_t nbest_n = 10;
  std::size_t mbr_samples = 10;

  std::uint64_t seed = 0;

  void validate() const;
};

// The generator's lexical inventory (content words, then fillers and
// fragment tokens), shared with the rule oracle in tests.
const std::vector<std::string>& synth_word_list();
const std::vector<std::string>& synth_fillers();
std::string fragment_token(const std::string& word);
std::vector<std::string> phonize(const std::vector<std::string>& words);

// Deterministic re-derivation of gold labels from realized transcript
// and features — the generator uses exactly this function.
LabelSet derive_labels(const std::vector<std::string>& transcript,
                       const Eigen::MatrixXf& features, const SynthSpec& spec);

struct SynthResult {
  Manifest manifest;
  std::vector<std::string> warnings;  // e.g. a class unreachable in the draw
};

SynthResult generate_synthetic_corpus(const SynthSpec& spec);

ChannelSpec synth_word_channel(const SynthSpec& spec);
ChannelSpec synth_phone_channel(const SynthSpec& spec);

// All tokens a manifest can feed the LM (transcripts plus every
// hypothesis mode), for vocabulary construction.
std::vector<std::string> collect_corpus_tokens(const Manifest& manifest);

}  // namespace dysflm
