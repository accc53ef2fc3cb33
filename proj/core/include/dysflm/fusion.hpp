#pragma once

#include <string>
#include <vector>

#include "dysflm/decoding.hpp"
#include "dysflm/labels.hpp"
#include "dysflm/lm.hpp"
#include "dysflm/manifest.hpp"
#include "dysflm/projector.hpp"
#include "dysflm/vocab.hpp"

namespace dysflm {

inline constexpr std::size_t kMaxLabelSteps = 20;

// Modality ablation switches used by the complementarity experiments.
struct FusionOptions {
  bool zero_prefix = false;      // acoustic path forced to zero
  bool drop_hypotheses = false;  // lexical path replaced by empty sequence
};

// The trained system: frozen LM with LoRA adapters, the acoustic
// projector and the shared vocabulary.
template <typename T>
struct FusedModel {
  TransformerLM<T> lm;
  AcousticProjector<T> projector;
  Vocab vocab;
  Schema schema = Schema::Sep28k;

  // Rows that receive gradient updates, in both the embedding table
  // and the untied output head: the label tags, "None", and the
  // [LAB]/[EOS] markers (the new tokens).
  std::vector<int> trainable_embedding_rows() const {
    std::vector<int> rows;
    for (auto c : kAllClasses) rows.push_back(Vocab::label_token(c));
    rows.push_back(Vocab::kNone);
    rows.push_back(Vocab::kLab);
    rows.push_back(Vocab::kEos);
    return rows;
  }
};

// [prefix] [BOS] hyp... [LAB] labels... [EOS], loss mask on the label
// tokens and EOS. Over-long sequences lose hypothesis-tail tokens first;
// labels always survive.
template <typename T>
ModelInput<T> assemble_input(const typename TransformerLM<T>::Mat& prefix,
                             std::vector<int> hyp_tokens,
                             const std::vector<int>& label_tokens,
                             bool with_labels, int max_seq_len) {
  ModelInput<T> input;
  input.prefix = prefix;
  const int p = input.prefix_count();
  std::size_t fixed = 2;  // [BOS] + [LAB]
  if (with_labels) fixed += label_tokens.size() + 1;  // labels + [EOS]
  if (static_cast<int>(fixed) + p > max_seq_len)
    throw DataError("assemble_input: labels alone exceed the length budget");
  std::size_t hyp_budget =
      static_cast<std::size_t>(max_seq_len - p) - fixed;
  if (hyp_tokens.size() > hyp_budget) hyp_tokens.resize(hyp_budget);

  input.tokens.push_back(Vocab::kBos);
  input.tokens.insert(input.tokens.end(), hyp_tokens.begin(), hyp_tokens.end());
  input.tokens.push_back(Vocab::kLab);
  input.loss_mask.assign(input.tokens.size(), 0);
  if (with_labels) {
    for (int t : label_tokens) {
      input.tokens.push_back(t);
      input.loss_mask.push_back(1);
    }
    input.tokens.push_back(Vocab::kEos);
    input.loss_mask.push_back(1);
  }
  input.targets = input.tokens;
  return input;
}

// Mean cross-entropy over all masked positions of the batch. The grads
// variant accumulates unscaled sums into `grads`; divide by mask_count.
template <typename T>
double label_loss(const TransformerLM<T>& lm,
                  const std::vector<ModelInput<T>>& batch,
                  LMGrads<T>* grads = nullptr, bool training = false,
                  Rng* rng = nullptr) {
  if (batch.empty()) throw DataError("label_loss: empty batch");
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& input : batch) {
    std::size_t n = 0;
    for (char m : input.loss_mask)
      if (m) ++n;
    sum += lm.masked_ce(input, grads, training, rng) * static_cast<double>(n);
    count += n;
  }
  return sum / static_cast<double>(count);
}

// Greedy continuation from the [LAB] position: at most kMaxLabelSteps
// tokens, halting at [EOS]; emitted tokens joined with ';'. Total
// function -- never throws on a well-formed model.
template <typename T>
std::string generate_label_string(const FusedModel<T>& model,
                                  const typename TransformerLM<T>::Mat& prefix,
                                  const std::vector<int>& hyp_tokens) {
  ModelInput<T> input =
      assemble_input<T>(prefix, hyp_tokens, {}, false, model.lm.config.max_seq_len);
  std::string out;
  for (std::size_t step = 0; step < kMaxLabelSteps; ++step) {
    auto logits = model.lm.forward(input);
    Eigen::Index last = logits.rows() - 1;
    int best = 0;
    for (int v = 1; v < model.lm.config.vocab_size; ++v)
      if (logits(last, v) > logits(last, best)) best = v;
    if (best == Vocab::kEos) break;
    if (!out.empty()) out += ';';
    out += model.vocab.token(best);
    input.tokens.push_back(best);
    input.targets.push_back(best);
    input.loss_mask.push_back(0);
  }
  return out;
}

// Hypothesis token ids for a clip under a decoder mode (flattening
// multi-candidate modes with [SEP]).
std::vector<int> mode_hypothesis_tokens(const Vocab& vocab,
                                        const ClipExample& example,
                                        DecoderMode mode);

template <typename T>
typename TransformerLM<T>::Mat acoustic_prefix(const FusedModel<T>& model,
                                               const Eigen::MatrixXf& feats,
                                               const FusionOptions& opts = {}) {
  typename TransformerLM<T>::Mat prefix(1, model.lm.config.d_model);
  if (opts.zero_prefix) {
    prefix.setZero();
    return prefix;
  }
  typename AcousticProjector<T>::Mat f = feats.template cast<T>();
  prefix.row(0) = model.projector.forward(f).transpose();
  return prefix;
}

struct Prediction {
  LabelSet labels;
  std::string raw_generated;
};

// project -> flatten(mode hypotheses) -> assemble -> generate -> parse.
template <typename T>
Prediction predict(const FusedModel<T>& model, const ClipExample& example,
                   DecoderMode mode, const FusionOptions& opts = {}) {
  if (!opts.drop_hypotheses && !example.has_mode(mode))
    throw DataError("predict: clip " + example.id + " has no hypotheses for " +
                    std::string(decoder_mode_name(mode)));
  std::vector<int> hyp;
  if (!opts.drop_hypotheses)
    hyp = mode_hypothesis_tokens(model.vocab, example, mode);
  auto prefix = acoustic_prefix(model, example.features, opts);
  Prediction pred;
  pred.raw_generated = generate_label_string(model, prefix, hyp);
  pred.labels = parse_labels(pred.raw_generated, model.schema);
  return pred;
}

}  // namespace dysflm
