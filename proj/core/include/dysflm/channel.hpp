#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dysflm/rng.hpp"

namespace dysflm {

// Scored token sequence produced by the channel (token strings, since the
// manifest stores hypotheses as text).
struct TextHypothesis {
  std::vector<std::string> tokens;
  double log_prob = 0.0;
};

// Per-truth-token outcome distribution: keep it, substitute, or delete.
struct TokenOutcomes {
  double p_keep = 1.0;
  std::vector<std::pair<std::string, double>> p_sub;
  double p_delete = 0.0;
};

// A probabilistic left-to-right edit channel over a truth transcript.
// Each gap (|truth|+1 of them) inserts at most one token with p_insert;
// each truth token is kept, substituted or deleted per its table entry.
// repeat_collapse_p adds deletion mass to a token equal to its
// predecessor, imitating an ASR system that drops exact repetitions.
struct ChannelSpec {
  enum class Alphabet { Word, Phone };

  std::vector<std::string> alphabet;
  std::unordered_map<std::string, TokenOutcomes> table;
  double p_insert = 0.0;
  std::vector<std::pair<std::string, double>> insert_dist;
  double repeat_collapse_p = 0.0;
  Alphabet mode = Alphabet::Word;

  // Throws ConfigError when any outcome distribution does not sum to 1
  // within 1e-9 (insert_dist likewise, when p_insert > 0).
  void validate() const;

  // Outcomes for truth position i, with repeat collapsing applied.
  TokenOutcomes outcomes_at(const std::vector<std::string>& truth,
                            std::size_t i) const;
};

// Uniform substitution channel: every alphabet token keeps its identity
// with 1 - p_sub_total - p_delete and substitutes uniformly over the
// other alphabet tokens; insertions draw uniformly from the alphabet.
ChannelSpec make_uniform_channel(std::vector<std::string> alphabet,
                                 double p_sub_total, double p_delete,
                                 double p_insert,
                                 double repeat_collapse_p = 0.0);

ChannelSpec load_channel_spec(const std::string& path);
void save_channel_spec(const ChannelSpec& spec, const std::string& path);

// One ancestral draw; log_prob is the exact log-probability of the
// sampled edit path.
TextHypothesis sample_hypothesis(const ChannelSpec& spec,
                                 const std::vector<std::string>& truth,
                                 Rng& rng);

// Complete output distribution with duplicate surface strings merged
// (string probability, paths marginalized). Throws ConfigError with a
// size estimate when the path count exceeds max_paths.
std::vector<std::pair<std::vector<std::string>, double>> exact_distribution(
    const ChannelSpec& spec, const std::vector<std::string>& truth,
    std::size_t max_paths = 200000);

// Highest path-probability output (lattice Viterbi via width-1 beam).
TextHypothesis channel_best(const ChannelSpec& spec,
                            const std::vector<std::string>& truth);

// Lattice beam search over edit paths; returns up to n distinct surface
// strings sorted by descending path log-probability.
std::vector<TextHypothesis> channel_nbest(const ChannelSpec& spec,
                                          const std::vector<std::string>& truth,
                                          std::size_t width, std::size_t n);

}  // namespace dysflm
