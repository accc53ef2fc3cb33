#include "dysflm/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "dysflm/errors.hpp"
#include "dysflm/metrics.hpp"

namespace dysflm {

double neg_wer_utility(const std::vector<int>& cand,
                       const std::vector<int>& anchor) {
  std::size_t denom = std::max<std::size_t>(anchor.size(), 1);
  return -static_cast<double>(edit_distance(cand, anchor)) /
         static_cast<double>(denom);
}

namespace {

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.tokens < b.tokens;
}

}  // namespace

Hypothesis greedy_decode(const StepModel& model, std::size_t max_len) {
  if (max_len < 1) throw ConfigError("greedy_decode: max_len must be >= 1");
  Hypothesis hyp;
  while (hyp.tokens.size() < max_len) {
    auto lp = model.next_log_probs(hyp.tokens);
    int best = 0;
    for (int v = 1; v < static_cast<int>(lp.size()); ++v)
      if (lp[v] > lp[best]) best = v;  // ties keep the lowest id
    hyp.log_prob += lp[best];
    if (best == model.eos_token()) {
      hyp.finished = true;
      return hyp;
    }
    hyp.tokens.push_back(best);
  }
  return hyp;
}

NBestList beam_decode(const StepModel& model, std::size_t width, std::size_t n,
                      std::size_t max_len) {
  if (width < 1 || n < 1 || n > width)
    throw ConfigError("beam_decode: need 1 <= n <= width");
  NBestList result;
  result.width = width;
  result.n = n;

  std::vector<Hypothesis> beam{Hypothesis{}};
  std::vector<Hypothesis> finished;
  std::vector<Hypothesis> last_partials;

  for (std::size_t step = 0; step < max_len && !beam.empty(); ++step) {
    std::vector<Hypothesis> expansions;
    for (const auto& h : beam) {
      auto lp = model.next_log_probs(h.tokens);
      for (int v = 0; v < static_cast<int>(lp.size()); ++v) {
        Hypothesis e = h;
        e.log_prob += lp[v];
        if (v == model.eos_token()) {
          e.finished = true;
        } else {
          e.tokens.push_back(v);
        }
        expansions.push_back(std::move(e));
      }
    }
    std::sort(expansions.begin(), expansions.end(), better);
    if (expansions.size() > width) expansions.resize(width);
    beam.clear();
    for (auto& e : expansions) {
      if (e.finished)
        finished.push_back(std::move(e));
      else
        beam.push_back(std::move(e));
    }
  }
  last_partials = beam;

  std::sort(finished.begin(), finished.end(), better);
  if (finished.size() > n) finished.resize(n);
  if (finished.size() < n && !last_partials.empty()) {
    result.padded_with_unfinished = true;
    std::sort(last_partials.begin(), last_partials.end(), better);
    for (const auto& p : last_partials) {
      if (finished.size() >= n) break;
      finished.push_back(p);
    }
    std::sort(finished.begin(), finished.end(), better);
  }
  result.hypotheses = std::move(finished);
  return result;
}

std::vector<Hypothesis> ancestral_sample(const StepModel& model, std::size_t s,
                                         std::size_t max_len, Rng& rng) {
  if (s < 1) throw ConfigError("ancestral_sample: S must be >= 1");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Hypothesis> out;
  out.reserve(s);
  for (std::size_t k = 0; k < s; ++k) {
    Hypothesis hyp;
    while (hyp.tokens.size() < max_len) {
      auto lp = model.next_log_probs(hyp.tokens);
      double u = unif(rng), acc = 0.0;
      int pick = static_cast<int>(lp.size()) - 1;
      for (int v = 0; v < static_cast<int>(lp.size()); ++v) {
        acc += std::exp(lp[v]);
        if (u < acc) {
          pick = v;
          break;
        }
      }
      hyp.log_prob += lp[pick];
      if (pick == model.eos_token()) {
        hyp.finished = true;
        break;
      }
      hyp.tokens.push_back(pick);
    }
    out.push_back(std::move(hyp));
  }
  return out;
}

Hypothesis mbr_select(const std::vector<Hypothesis>& candidates,
                      const std::vector<Hypothesis>& anchors,
                      const Utility& utility) {
  if (candidates.empty() || anchors.empty())
    throw DataError("mbr_select: empty candidate or anchor list");
  const Hypothesis* best = nullptr;
  double best_util = 0.0;
  for (const auto& cand : candidates) {
    double sum = 0.0;
    for (const auto& anchor : anchors) sum += utility(cand.tokens, anchor.tokens);
    double mean = sum / static_cast<double>(anchors.size());
    if (!best || mean > best_util ||
        (mean == best_util && better(cand, *best))) {
      best = &cand;
      best_util = mean;
    }
  }
  return *best;
}

TextHypothesis mbr_select_text(const std::vector<TextHypothesis>& candidates,
                               const std::vector<TextHypothesis>& anchors) {
  if (candidates.empty() || anchors.empty())
    throw DataError("mbr_select_text: empty candidate or anchor list");
  std::unordered_map<std::string, int> intern;
  auto encode = [&](const std::vector<std::string>& toks) {
    std::vector<int> ids;
    ids.reserve(toks.size());
    for (const auto& t : toks) {
      auto [it, _] = intern.emplace(t, static_cast<int>(intern.size()));
      ids.push_back(it->second);
    }
    return ids;
  };
  std::vector<Hypothesis> cands, ancs;
  for (const auto& c : candidates)
    cands.push_back({encode(c.tokens), c.log_prob, true});
  for (const auto& a : anchors) ancs.push_back({encode(a.tokens), a.log_prob, true});
  Hypothesis sel = mbr_select(cands, ancs);
  for (std::size_t i = 0; i < cands.size(); ++i)
    if (cands[i].tokens == sel.tokens && cands[i].log_prob == sel.log_prob)
      return candidates[i];
  return candidates.front();  // unreachable
}

std::vector<int> flatten_candidates(std::vector<Hypothesis> hyps,
                                    int sep_token) {
  if (hyps.empty()) throw DataError("flatten_candidates: empty list");
  std::sort(hyps.begin(), hyps.end(), better);
  std::vector<int> out;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    if (i) out.push_back(sep_token);
    out.insert(out.end(), hyps[i].tokens.begin(), hyps[i].tokens.end());
  }
  return out;
}

std::vector<std::string> flatten_candidates_text(
    std::vector<TextHypothesis> hyps, const std::string& sep_token) {
  if (hyps.empty()) throw DataError("flatten_candidates_text: empty list");
  std::sort(hyps.begin(), hyps.end(), [](const auto& a, const auto& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.tokens < b.tokens;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    if (i) out.push_back(sep_token);
    out.insert(out.end(), hyps[i].tokens.begin(), hyps[i].tokens.end());
  }
  return out;
}

}  // namespace dysflm
