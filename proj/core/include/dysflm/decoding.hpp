#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "dysflm/channel.hpp"
#include "dysflm/rng.hpp"

namespace dysflm {

// Anything that exposes next-token log-probabilities given the emitted
// continuation so far. The conditioning context is baked into the
// instance (e.g. an assembled prompt for the LM).
class StepModel {
 public:
  virtual ~StepModel() = default;
  virtual int vocab_size() const = 0;
  virtual int eos_token() const = 0;
  virtual std::vector<double> next_log_probs(
      const std::vector<int>& emitted) const = 0;
};

struct Hypothesis {
  std::vector<int> tokens;  // excludes EOS
  double log_prob = 0.0;    // includes the EOS step when finished
  bool finished = false;
};

struct NBestList {
  std::vector<Hypothesis> hypotheses;  // sorted by descending log_prob
  std::size_t width = 0;
  std::size_t n = 0;
  bool padded_with_unfinished = false;
};

// Candidate-vs-anchor utility, maximized by MBR.
using Utility =
    std::function<double(const std::vector<int>&, const std::vector<int>&)>;

// Negated WER with |ref| clamped to 1 so empty anchors stay finite.
double neg_wer_utility(const std::vector<int>& cand,
                       const std::vector<int>& anchor);

struct MbrConfig {
  std::size_t sample_count = 10;  // the MC estimator's S
  Utility utility = neg_wer_utility;
};

// Argmax token per step, ties to the lowest token id; halts at EOS or
// after max_len emitted tokens.
Hypothesis greedy_decode(const StepModel& model, std::size_t max_len);

// Length-synchronous beam search, raw sequence log-probs (no length
// normalization). Returns top-n finished hypotheses, padded with the
// best unfinished partials when fewer than n reach EOS.
NBestList beam_decode(const StepModel& model, std::size_t width, std::size_t n,
                      std::size_t max_len);

// S independent ancestral draws from the untempered model distribution.
std::vector<Hypothesis> ancestral_sample(const StepModel& model, std::size_t s,
                                         std::size_t max_len, Rng& rng);

// argmax over candidates of mean utility against the anchors; ties are
// broken by candidate log_prob, then lexicographically.
Hypothesis mbr_select(const std::vector<Hypothesis>& candidates,
                      const std::vector<Hypothesis>& anchors,
                      const Utility& utility = neg_wer_utility);

// Same selection over channel text hypotheses (tokens interned to ids).
TextHypothesis mbr_select_text(const std::vector<TextHypothesis>& candidates,
                               const std::vector<TextHypothesis>& anchors);

// Candidates concatenated in descending-score order, joined by sep_token.
std::vector<int> flatten_candidates(std::vector<Hypothesis> hyps,
                                    int sep_token);
std::vector<std::string> flatten_candidates_text(
    std::vector<TextHypothesis> hyps, const std::string& sep_token);

}  // namespace dysflm
