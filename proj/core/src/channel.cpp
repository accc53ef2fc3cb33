#include "dysflm/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "dysflm/errors.hpp"

namespace dysflm {

namespace {

constexpr double kSumTol = 1e-9;

void check_dist(double total, const std::string& what) {
  if (std::abs(total - 1.0) > kSumTol)
    throw ConfigError("channel spec: " + what + " probabilities sum to " +
                      std::to_string(total) + ", expected 1");
}

double safe_log(double p) {
  return p > 0.0 ? std::log(p) : -1e300;
}

}  // namespace

void ChannelSpec::validate() const {
  for (const auto& tok : alphabet) {
    auto it = table.find(tok);
    if (it == table.end())
      throw ConfigError("channel spec: no outcome table for token '" + tok + "'");
    double total = it->second.p_keep + it->second.p_delete;
    for (const auto& [t, p] : it->second.p_sub) {
      (void)t;
      total += p;
    }
    check_dist(total, "token '" + tok + "'");
  }
  if (p_insert > 0.0) {
    double total = 0.0;
    for (const auto& [t, p] : insert_dist) {
      (void)t;
      total += p;
    }
    check_dist(total, "insertion");
  }
  if (p_insert < 0.0 || p_insert > 1.0)
    throw ConfigError("channel spec: p_insert out of [0,1]");
  if (repeat_collapse_p < 0.0 || repeat_collapse_p > 1.0)
    throw ConfigError("channel spec: repeat_collapse_p out of [0,1]");
}

TokenOutcomes ChannelSpec::outcomes_at(const std::vector<std::string>& truth,
                                       std::size_t i) const {
  auto it = table.find(truth[i]);
  if (it == table.end())
    throw ConfigError("channel spec: token '" + truth[i] + "' not in table");
  TokenOutcomes o = it->second;
  if (repeat_collapse_p > 0.0 && i > 0 && truth[i] == truth[i - 1]) {
    double extra = repeat_collapse_p * (1.0 - o.p_delete);
    double scale = (1.0 - o.p_delete - extra) / (1.0 - o.p_delete);
    o.p_keep *= scale;
    for (auto& [t, p] : o.p_sub) {
      (void)t;
      p *= scale;
    }
    o.p_delete += extra;
  }
  return o;
}

ChannelSpec make_uniform_channel(std::vector<std::string> alphabet,
                                 double p_sub_total, double p_delete,
                                 double p_insert, double repeat_collapse_p) {
  if (alphabet.empty()) throw ConfigError("channel: empty alphabet");
  ChannelSpec spec;
  spec.alphabet = std::move(alphabet);
  spec.p_insert = p_insert;
  spec.repeat_collapse_p = repeat_collapse_p;
  const std::size_t k = spec.alphabet.size();
  for (const auto& tok : spec.alphabet) {
    TokenOutcomes o;
    o.p_delete = p_delete;
    o.p_keep = 1.0 - p_sub_total - p_delete;
    if (o.p_keep < 0.0) throw ConfigError("channel: p_sub + p_delete > 1");
    if (k > 1) {
      for (const auto& other : spec.alphabet)
        if (other != tok)
          o.p_sub.emplace_back(other, p_sub_total / static_cast<double>(k - 1));
    } else {
      o.p_keep += p_sub_total;  // nothing to substitute with
    }
    spec.table[tok] = std::move(o);
  }
  for (const auto& tok : spec.alphabet)
    spec.insert_dist.emplace_back(tok, 1.0 / static_cast<double>(k));
  spec.validate();
  return spec;
}

TextHypothesis sample_hypothesis(const ChannelSpec& spec,
                                 const std::vector<std::string>& truth,
                                 Rng& rng) {
  if (truth.empty()) throw DataError("sample_hypothesis: empty truth");
  spec.validate();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  TextHypothesis hyp;

  auto maybe_insert = [&]() {
    if (spec.p_insert <= 0.0) return;
    if (unif(rng) < spec.p_insert) {
      double u = unif(rng), acc = 0.0;
      std::size_t pick = spec.insert_dist.size() - 1;
      for (std::size_t k = 0; k < spec.insert_dist.size(); ++k) {
        acc += spec.insert_dist[k].second;
        if (u < acc) {
          pick = k;
          break;
        }
      }
      hyp.tokens.push_back(spec.insert_dist[pick].first);
      hyp.log_prob += safe_log(spec.p_insert * spec.insert_dist[pick].second);
    } else {
      hyp.log_prob += safe_log(1.0 - spec.p_insert);
    }
  };

  for (std::size_t i = 0; i < truth.size(); ++i) {
    maybe_insert();
    TokenOutcomes o = spec.outcomes_at(truth, i);
    double u = unif(rng);
    if (u < o.p_keep) {
      hyp.tokens.push_back(truth[i]);
      hyp.log_prob += safe_log(o.p_keep);
      continue;
    }
    u -= o.p_keep;
    bool done = false;
    for (const auto& [t, p] : o.p_sub) {
      if (u < p) {
        hyp.tokens.push_back(t);
        hyp.log_prob += safe_log(p);
        done = true;
        break;
      }
      u -= p;
    }
    if (!done) hyp.log_prob += safe_log(o.p_delete);  // deletion
  }
  maybe_insert();
  return hyp;
}

namespace {

struct Path {
  std::vector<std::string> emitted;
  double log_prob = 0.0;
};

// Expand one lattice stage (gap insertion or token outcome) over paths.
template <typename ExpandFn>
std::vector<Path> expand(const std::vector<Path>& paths, ExpandFn&& fn) {
  std::vector<Path> out;
  for (const auto& p : paths) fn(p, out);
  return out;
}

void prune(std::vector<Path>& paths, std::size_t width) {
  if (paths.size() <= width) return;
  std::partial_sort(paths.begin(), paths.begin() + static_cast<long>(width),
                    paths.end(), [](const Path& a, const Path& b) {
                      return a.log_prob > b.log_prob;
                    });
  paths.resize(width);
}

std::vector<Path> lattice_paths(const ChannelSpec& spec,
                                const std::vector<std::string>& truth,
                                std::size_t width) {
  spec.validate();
  std::vector<Path> paths{Path{}};

  auto gap = [&](const Path& p, std::vector<Path>& out) {
    if (spec.p_insert > 0.0) {
      Path skip = p;
      skip.log_prob += safe_log(1.0 - spec.p_insert);
      if (spec.p_insert < 1.0) out.push_back(std::move(skip));
      for (const auto& [t, q] : spec.insert_dist) {
        if (q <= 0.0) continue;
        Path ins = p;
        ins.emitted.push_back(t);
        ins.log_prob += safe_log(spec.p_insert * q);
        out.push_back(std::move(ins));
      }
    } else {
      out.push_back(p);
    }
  };

  for (std::size_t i = 0; i < truth.size(); ++i) {
    paths = expand(paths, gap);
    prune(paths, width);
    TokenOutcomes o = spec.outcomes_at(truth, i);
    paths = expand(paths, [&](const Path& p, std::vector<Path>& out) {
      if (o.p_keep > 0.0) {
        Path keep = p;
        keep.emitted.push_back(truth[i]);
        keep.log_prob += safe_log(o.p_keep);
        out.push_back(std::move(keep));
      }
      for (const auto& [t, q] : o.p_sub) {
        if (q <= 0.0) continue;
        Path sub = p;
        sub.emitted.push_back(t);
        sub.log_prob += safe_log(q);
        out.push_back(std::move(sub));
      }
      if (o.p_delete > 0.0) {
        Path del = p;
        del.log_prob += safe_log(o.p_delete);
        out.push_back(std::move(del));
      }
    });
    prune(paths, width);
  }
  paths = expand(paths, gap);
  prune(paths, width);
  return paths;
}

}  // namespace

std::vector<std::pair<std::vector<std::string>, double>> exact_distribution(
    const ChannelSpec& spec, const std::vector<std::string>& truth,
    std::size_t max_paths) {
  spec.validate();
  // Path-count estimate: gaps x token outcomes.
  double est = 1.0;
  const double gap_choices =
      spec.p_insert > 0.0 ? 1.0 + static_cast<double>(spec.insert_dist.size())
                          : 1.0;
  for (std::size_t i = 0; i <= truth.size(); ++i) est *= gap_choices;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    TokenOutcomes o = spec.outcomes_at(truth, i);
    est *= static_cast<double>(1 + o.p_sub.size() + 1);
  }
  if (est > static_cast<double>(max_paths))
    throw ConfigError("exact_distribution: enumeration refused, estimated " +
                      std::to_string(static_cast<long long>(est)) +
                      " paths exceeds cap of " + std::to_string(max_paths));

  auto paths =
      lattice_paths(spec, truth, std::numeric_limits<std::size_t>::max());
  std::map<std::vector<std::string>, double> merged;
  for (const auto& p : paths) {
    double prob = std::exp(p.log_prob);
    if (prob <= 0.0) continue;
    merged[p.emitted] += prob;
  }
  std::vector<std::pair<std::vector<std::string>, double>> out(merged.begin(),
                                                               merged.end());
  return out;
}

TextHypothesis channel_best(const ChannelSpec& spec,
                            const std::vector<std::string>& truth) {
  auto nbest = channel_nbest(spec, truth, 8, 1);
  return nbest.front();
}

std::vector<TextHypothesis> channel_nbest(const ChannelSpec& spec,
                                          const std::vector<std::string>& truth,
                                          std::size_t width, std::size_t n) {
  if (truth.empty()) throw DataError("channel_nbest: empty truth");
  auto paths = lattice_paths(spec, truth, std::max(width, n * 4));
  // Distinct surface strings, best path log-prob per string.
  std::map<std::vector<std::string>, double> best;
  for (const auto& p : paths) {
    auto it = best.find(p.emitted);
    if (it == best.end() || p.log_prob > it->second)
      best[p.emitted] = p.log_prob;
  }
  std::vector<TextHypothesis> out;
  for (const auto& [toks, lp] : best) out.push_back({toks, lp});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.tokens < b.tokens;
  });
  if (out.size() > n) out.resize(n);
  return out;
}

void save_channel_spec(const ChannelSpec& spec, const std::string& path) {
  nlohmann::json j;
  j["alphabet"] = spec.alphabet;
  j["mode"] = spec.mode == ChannelSpec::Alphabet::Word ? "word" : "phone";
  j["p_insert"] = spec.p_insert;
  j["repeat_collapse_p"] = spec.repeat_collapse_p;
  nlohmann::json ins = nlohmann::json::array();
  for (const auto& [t, p] : spec.insert_dist) ins.push_back({{"token", t}, {"p", p}});
  j["insert_dist"] = ins;
  nlohmann::json tbl = nlohmann::json::object();
  for (const auto& [tok, o] : spec.table) {
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& [t, p] : o.p_sub) subs.push_back({{"token", t}, {"p", p}});
    tbl[tok] = {{"p_keep", o.p_keep}, {"p_delete", o.p_delete}, {"p_sub", subs}};
  }
  j["table"] = tbl;
  std::ofstream out(path);
  if (!out) throw DataError("channel spec: cannot write " + path);
  out << j.dump(2) << "\n";
}

ChannelSpec load_channel_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("channel spec: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("channel spec: parse error in " + path + ": " + e.what());
  }
  ChannelSpec spec;
  spec.alphabet = j.at("alphabet").get<std::vector<std::string>>();
  spec.mode = j.value("mode", "word") == "phone" ? ChannelSpec::Alphabet::Phone
                                                 : ChannelSpec::Alphabet::Word;
  spec.p_insert = j.value("p_insert", 0.0);
  spec.repeat_collapse_p = j.value("repeat_collapse_p", 0.0);
  for (const auto& e : j.value("insert_dist", nlohmann::json::array()))
    spec.insert_dist.emplace_back(e.at("token").get<std::string>(),
                                  e.at("p").get<double>());
  for (const auto& [tok, o] : j.at("table").items()) {
    TokenOutcomes t;
    t.p_keep = o.at("p_keep").get<double>();
    t.p_delete = o.at("p_delete").get<double>();
    for (const auto& e : o.value("p_sub", nlohmann::json::array()))
      t.p_sub.emplace_back(e.at("token").get<std::string>(),
                           e.at("p").get<double>());
    spec.table[tok] = std::move(t);
  }
  spec.validate();
  return spec;
}

}  // namespace dysflm
