#include "dysflm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "dysflm/decoding.hpp"
#include "dysflm/errors.hpp"
#include "dysflm/rng.hpp"

namespace dysflm {

void SynthSpec::validate() const {
  if (clip_count < 1) throw ConfigError("synth: clip_count must be >= 1");
  if (feature_frames < 1 || feature_dim < 3)
    throw ConfigError("synth: need L >= 1 and a >= 3 (three cue channels)");
  for (double r : {rate_pro, rate_blk, rate_mod, filler_rate, repetition_rate,
                   fragment_rate, word_sub, word_del, word_ins, phon_sub,
                   phon_del, phon_ins, repeat_collapse})
    if (r < 0.0 || r > 1.0) throw ConfigError("synth: rate out of [0,1]");
  if (min_words < 1 || max_words < min_words)
    throw ConfigError("synth: bad word-count range");
  if (!std::isfinite(threshold_pro) || !std::isfinite(threshold_blk) ||
      !std::isfinite(threshold_mod))
    throw ConfigError("synth: non-finite threshold");
}

const std::vector<std::string>& synth_word_list() {
  static const std::vector<std::string> words = {
      "the",  "cat",  "dog",  "sat",   "ran",  "on",    "mat",  "big",
      "red",  "blue", "bird", "sang",  "tree", "house", "walk", "talk",
      "fast", "slow", "sun",  "moon",  "rain", "wind",  "book", "read"};
  return words;
}

const std::vector<std::string>& synth_fillers() {
  static const std::vector<std::string> fillers = {"uh", "um"};
  return fillers;
}

std::string fragment_token(const std::string& word) {
  return word.substr(0, 1) + "-";
}

std::vector<std::string> phonize(const std::vector<std::string>& words) {
  std::vector<std::string> phones;
  for (const auto& w : words)
    for (char c : w) phones.emplace_back(1, c);
  return phones;
}

namespace {

bool is_filler(const std::string& tok) {
  for (const auto& f : synth_fillers())
    if (tok == f) return true;
  return false;
}

bool is_fragment(const std::string& tok) {
  return tok.size() == 2 && tok.back() == '-';
}

}  // namespace

LabelSet derive_labels(const std::vector<std::string>& transcript,
                       const Eigen::MatrixXf& features, const SynthSpec& spec) {
  LabelSet labels;
  for (std::size_t i = 0; i < transcript.size(); ++i) {
    if (is_filler(transcript[i])) labels.add(DysfluencyClass::Int);
    if (i + 1 < transcript.size() && transcript[i] == transcript[i + 1] &&
        !is_filler(transcript[i]) && !is_fragment(transcript[i]))
      labels.add(DysfluencyClass::Wrd);
    if (is_fragment(transcript[i]) && i + 1 < transcript.size() &&
        !transcript[i + 1].empty() &&
        transcript[i + 1].front() == transcript[i].front())
      labels.add(DysfluencyClass::Snd);
  }
  Eigen::VectorXf means = features.colwise().mean();
  if (means(0) > static_cast<float>(spec.threshold_pro))
    labels.add(DysfluencyClass::Pro);
  if (means(1) > static_cast<float>(spec.threshold_blk))
    labels.add(DysfluencyClass::Blk);
  if (spec.schema == Schema::Ksof &&
      means(2) > static_cast<float>(spec.threshold_mod))
    labels.add(DysfluencyClass::Mod);
  return labels;
}

ChannelSpec synth_word_channel(const SynthSpec& spec) {
  std::vector<std::string> alphabet = synth_word_list();
  for (const auto& f : synth_fillers()) alphabet.push_back(f);
  std::set<std::string> frags;
  for (const auto& w : synth_word_list()) frags.insert(fragment_token(w));
  for (const auto& f : frags) alphabet.push_back(f);
  ChannelSpec ch = make_uniform_channel(alphabet, spec.word_sub, spec.word_del,
                                        spec.word_ins, spec.repeat_collapse);
  ch.mode = ChannelSpec::Alphabet::Word;
  return ch;
}

ChannelSpec synth_phone_channel(const SynthSpec& spec) {
  std::set<std::string> alpha;
  for (const auto& w : synth_word_list())
    for (char c : w) alpha.insert(std::string(1, c));
  for (const auto& f : synth_fillers())
    for (char c : f) alpha.insert(std::string(1, c));
  alpha.insert("-");
  ChannelSpec ch = make_uniform_channel(
      std::vector<std::string>(alpha.begin(), alpha.end()), spec.phon_sub,
      spec.phon_del, spec.phon_ins);
  ch.mode = ChannelSpec::Alphabet::Phone;
  return ch;
}

SynthResult generate_synthetic_corpus(const SynthSpec& spec) {
  spec.validate();
  SynthResult result;
  result.manifest.schema = spec.schema;

  ChannelSpec word_ch = synth_word_channel(spec);
  ChannelSpec phone_ch = synth_phone_channel(spec);

  const auto& words = synth_word_list();

  for (int i = 0; i < spec.clip_count; ++i) {
    Rng rng = make_rng(spec.seed, "clip", static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    ClipExample clip;
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "clip-%06d", i);
    clip.id = idbuf;
    int mod10 = i % 10;
    clip.split = mod10 < 7 ? Split::Train : (mod10 == 7 ? Split::Dev : Split::Test);

    // transcript: distinct-from-previous base words, then dysfluency events
    std::uniform_int_distribution<int> len_dist(spec.min_words, spec.max_words);
    int n_words = len_dist(rng);
    std::vector<std::string> tr;
    for (int w = 0; w < n_words; ++w) {
      std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
      std::string tok = words[pick(rng)];
      while (!tr.empty() && tok == tr.back()) tok = words[pick(rng)];
      tr.push_back(tok);
    }
    if (unif(rng) < spec.repetition_rate) {
      std::uniform_int_distribution<std::size_t> pick(0, tr.size() - 1);
      std::size_t at = pick(rng);
      tr.insert(tr.begin() + static_cast<long>(at), tr[at]);
    }
    if (unif(rng) < spec.fragment_rate) {
      std::uniform_int_distribution<std::size_t> pick(0, tr.size() - 1);
      std::size_t at = pick(rng);
      tr.insert(tr.begin() + static_cast<long>(at), fragment_token(tr[at]));
    }
    if (unif(rng) < spec.filler_rate) {
      std::uniform_int_distribution<std::size_t> pos(0, tr.size());
      std::uniform_int_distribution<std::size_t> pick(0, synth_fillers().size() - 1);
      tr.insert(tr.begin() + static_cast<long>(pos(rng)),
                synth_fillers()[pick(rng)]);
    }
    clip.transcript = tr;

    // acoustic features: cue channels 0..2, noise elsewhere
    std::normal_distribution<double> noise(0.0, spec.frame_noise);
    Eigen::VectorXd chan_mean = Eigen::VectorXd::Constant(spec.feature_dim, 0.0);
    chan_mean(0) = unif(rng) < spec.rate_pro ? spec.high_mean : spec.low_mean;
    chan_mean(1) = unif(rng) < spec.rate_blk ? spec.high_mean : spec.low_mean;
    chan_mean(2) = unif(rng) < spec.rate_mod ? spec.high_mean : spec.low_mean;
    clip.features.resize(spec.feature_frames, spec.feature_dim);
    for (int r = 0; r < spec.feature_frames; ++r)
      for (int c = 0; c < spec.feature_dim; ++c)
        clip.features(r, c) = static_cast<float>(chan_mean(c) + noise(rng));

    clip.labels = derive_labels(clip.transcript, clip.features, spec);

    // hypotheses per decoder mode
    clip.hyp_1best = channel_best(word_ch, tr).tokens;
    auto nbest = channel_nbest(word_ch, tr, spec.nbest_width, spec.nbest_n);
    clip.hyp_nbest = nbest;
    clip.hyp_phon = channel_best(phone_ch, phonize(tr)).tokens;

    std::vector<TextHypothesis> samples;
    Rng mbr_rng = make_rng(spec.seed, "mbr", static_cast<std::uint64_t>(i));
    for (std::size_t s = 0; s < spec.mbr_samples; ++s)
      samples.push_back(sample_hypothesis(word_ch, tr, mbr_rng));
    std::vector<TextHypothesis> cands;
    std::set<std::vector<std::string>> seen;
    for (const auto& h : samples)
      if (seen.insert(h.tokens).second) cands.push_back(h);
    clip.hyp_mbr = mbr_select_text(cands, samples).tokens;

    clip.features_path = "feats/" + clip.id + ".f32";
    result.manifest.clips.push_back(std::move(clip));
  }

  // reachability check over the drawn corpus
  for (auto c : schema_classes(spec.schema)) {
    bool seen = false;
    for (const auto& clip : result.manifest.clips)
      if (clip.labels.contains(c)) {
        seen = true;
        break;
      }
    if (!seen)
      result.warnings.push_back("class " + std::string(class_tag(c)) +
                                " never occurs in the generated corpus");
  }
  return result;
}

std::vector<std::string> collect_corpus_tokens(const Manifest& manifest) {
  std::set<std::string> tokens;
  for (const auto& c : manifest.clips) {
    tokens.insert(c.transcript.begin(), c.transcript.end());
    if (c.hyp_1best) tokens.insert(c.hyp_1best->begin(), c.hyp_1best->end());
    if (c.hyp_phon) tokens.insert(c.hyp_phon->begin(), c.hyp_phon->end());
    if (c.hyp_mbr) tokens.insert(c.hyp_mbr->begin(), c.hyp_mbr->end());
    if (c.hyp_nbest)
      for (const auto& h : *c.hyp_nbest)
        tokens.insert(h.tokens.begin(), h.tokens.end());
  }
  return {tokens.begin(), tokens.end()};
}

}  // namespace dysflm
