#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dysflm/fusion.hpp"

namespace dysflm {

struct TrainConfig {
  double lr0 = 2e-4;
  double weight_decay = 1e-4;
  double eps = 1e-8;
  double beta1 = 0.99;  // as stated in the training recipe, not the usual 0.9
  double beta2 = 0.999;
  int effective_batch = 32;
  int micro_batch = 8;
  double warmup_frac = 0.05;
  int patience = 5;
  int max_epochs = 50;
  std::uint64_t seed = 0;
  DecoderMode decoder_mode = DecoderMode::OneBest;
  FusionOptions ablation;

  void validate() const {
    if (effective_batch < 1 || micro_batch < 1 ||
        effective_batch % micro_batch != 0)
      throw ConfigError("train config: effective_batch must be a multiple of micro_batch");
    if (warmup_frac <= 0.0 || warmup_frac >= 1.0)
      throw ConfigError("train config: warmup_frac must be in (0,1)");
    if (patience < 1 || max_epochs < 1)
      throw ConfigError("train config: patience and max_epochs must be >= 1");
  }
};

// Linear ramp 0 -> lr0 over the first ceil(warmup_frac * total) steps,
// then linear decay lr0 -> 0 at total_steps.
inline double lr_at_step(const TrainConfig& config, long step, long total_steps) {
  if (total_steps < 1) throw ConfigError("lr_at_step: total_steps must be >= 1");
  if (step < 0 || step > total_steps)
    throw ConfigError("lr_at_step: step out of range");
  long warmup = static_cast<long>(
      std::ceil(config.warmup_frac * static_cast<double>(total_steps)));
  if (warmup < 1) warmup = 1;
  if (step <= warmup)
    return config.lr0 * static_cast<double>(step) / static_cast<double>(warmup);
  return config.lr0 * static_cast<double>(total_steps - step) /
         static_cast<double>(total_steps - warmup);
}

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double lr = 0.0;
  int patience_counter = 0;
};

template <typename T>
struct TrainResult {
  explicit TrainResult(FusedModel<T> m) : best_model(std::move(m)) {}

  FusedModel<T> best_model;
  std::vector<EpochRecord> log;
  int best_epoch = 0;
  double best_dev_loss = 0.0;
};

// Tokenized training record; the prefix is recomputed from the features
// every forward pass since the projector itself is trained.
struct TrainExample {
  Eigen::MatrixXf features;
  std::vector<int> hyp_tokens;
  std::vector<int> label_tokens;
};

template <typename T>
TrainExample make_train_example(const FusedModel<T>& model,
                                const ClipExample& clip, DecoderMode mode,
                                const FusionOptions& ablation) {
  TrainExample ex;
  ex.features = clip.features;
  if (!ablation.drop_hypotheses)
    ex.hyp_tokens = mode_hypothesis_tokens(model.vocab, clip, mode);
  for (auto c : clip.labels.members())
    ex.label_tokens.push_back(Vocab::label_token(c));
  if (ex.label_tokens.empty()) ex.label_tokens.push_back(Vocab::kNone);
  return ex;
}

// Decoupled AdamW update: moments never see the decay term.
template <typename T>
class AdamW {
 public:
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

  AdamW(const TrainConfig& config, std::size_t n_tensors)
      : config_(config), m_(n_tensors), v_(n_tensors) {}

  void begin_step(double lr) {
    lr_ = lr;
    ++t_;
  }

  template <typename D1, typename D2>
  void update(std::size_t slot, Eigen::MatrixBase<D1>& param,
              const Eigen::MatrixBase<D2>& grad) {
    Mat& m = m_[slot];
    Mat& v = v_[slot];
    if (m.rows() != grad.rows() || m.cols() != grad.cols()) {
      m = Mat::Zero(grad.rows(), grad.cols());
      v = Mat::Zero(grad.rows(), grad.cols());
    }
    const T b1 = static_cast<T>(config_.beta1);
    const T b2 = static_cast<T>(config_.beta2);
    m = b1 * m + (T(1) - b1) * grad;
    v = (b2 * v.array() + (T(1) - b2) * grad.array().square()).matrix();
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    Mat mhat = m / static_cast<T>(bc1);
    Mat vhat = v / static_cast<T>(bc2);
    param -= static_cast<T>(lr_) *
             ((mhat.array() / (vhat.array().sqrt() + static_cast<T>(config_.eps)))
                  .matrix() +
              static_cast<T>(config_.weight_decay) * param);
  }

 private:
  TrainConfig config_;
  std::vector<Mat> m_, v_;
  double lr_ = 0.0;
  long t_ = 0;
};

// Seeded per-epoch shuffle into micro-batches.
std::vector<std::vector<std::size_t>> make_batch_order(std::size_t n,
                                                       std::size_t micro_batch,
                                                       std::uint64_t seed,
                                                       int epoch);

// Pads every input of a micro-batch to the batch max with [PAD]
// (loss_mask false at padding).
template <typename T>
void pad_batch(std::vector<ModelInput<T>>& batch) {
  std::size_t max_len = 0;
  for (const auto& in : batch) max_len = std::max(max_len, in.tokens.size());
  for (auto& in : batch) {
    while (in.tokens.size() < max_len) {
      in.tokens.push_back(Vocab::kPad);
      in.targets.push_back(Vocab::kPad);
      in.loss_mask.push_back(0);
    }
  }
}

// Test hook: observes (epoch, computed dev loss) and returns the value
// the early-stopping logic should see.
using DevLossOverride = std::function<double(int, double)>;

template <typename T>
double eval_dev_loss(const FusedModel<T>& model,
                     const std::vector<TrainExample>& dev,
                     const FusionOptions& ablation) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& ex : dev) {
    typename TransformerLM<T>::Mat prefix(1, model.lm.config.d_model);
    if (ablation.zero_prefix) {
      prefix.setZero();
    } else {
      typename AcousticProjector<T>::Mat f = ex.features.template cast<T>();
      prefix.row(0) = model.projector.forward(f).transpose();
    }
    auto input = assemble_input<T>(prefix, ex.hyp_tokens, ex.label_tokens, true,
                                   model.lm.config.max_seq_len);
    std::size_t n = 0;
    for (char m : input.loss_mask)
      if (m) ++n;
    sum += model.lm.masked_ce(input, nullptr) * static_cast<double>(n);
    count += n;
  }
  if (count == 0) throw DataError("dev loss: no masked positions");
  return sum / static_cast<double>(count);
}

// Epochs of shuffled micro-batches with gradient accumulation; decoupled
// weight decay on the trainable parameters only (LoRA A/B, projector,
// label-token embedding rows). Stops when the dev loss fails to improve
// for `patience` consecutive epochs; returns the lowest-dev-loss model.
template <typename T>
TrainResult<T> train(FusedModel<T> model, const std::vector<TrainExample>& train_set,
                     const std::vector<TrainExample>& dev_set,
                     const TrainConfig& config,
                     const DevLossOverride& dev_override = nullptr) {
  config.validate();
  if (train_set.empty() || dev_set.empty())
    throw DataError("train: empty train or dev split");
  if (!model.lm.use_lora) throw ConfigError("train: model has no LoRA adapters");

  const int micro_per_step = config.effective_batch / config.micro_batch;
  const long steps_per_epoch = static_cast<long>(
      (train_set.size() + config.effective_batch - 1) /
      static_cast<std::size_t>(config.effective_batch));
  const long total_steps = steps_per_epoch * config.max_epochs;

  const auto trainable_rows = model.trainable_embedding_rows();
  // optimizer slots: per-layer q_a/q_b/v_a/v_b, projector w1/b1/w2/b2,
  // then per trainable token row: embedding row, head row, head bias
  const std::size_t n_lora = static_cast<std::size_t>(model.lm.config.n_layers) * 4;
  AdamW<T> opt(config, n_lora + 4 + 3 * trainable_rows.size());

  Rng dropout_rng = make_rng(config.seed, "dropout");

  TrainResult<T> result(model);
  result.best_dev_loss = std::numeric_limits<double>::infinity();
  int patience_counter = 0;
  long global_step = 0;

  LMGrads<T> grads;
  typename AcousticProjector<T>::Grads proj_grads;
  proj_grads.ensure(model.projector);

  auto zero_grads = [&]() {
    for (auto& g : grads.q_a) g.setZero();
    for (auto& g : grads.q_b) g.setZero();
    for (auto& g : grads.v_a) g.setZero();
    for (auto& g : grads.v_b) g.setZero();
    if (grads.emb.size()) grads.emb.setZero();
    if (grads.head.size()) {
      grads.head.setZero();
      grads.head_b.setZero();
    }
    grads.loss_sum = 0.0;
    grads.mask_count = 0;
    proj_grads.w1.setZero();
    proj_grads.b1.setZero();
    proj_grads.w2.setZero();
    proj_grads.b2.setZero();
  };

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    auto batches = make_batch_order(train_set.size(),
                                    static_cast<std::size_t>(config.micro_batch),
                                    config.seed, epoch);
    double epoch_loss_sum = 0.0;
    std::size_t epoch_mask_count = 0;
    double lr = 0.0;

    std::size_t bi = 0;
    while (bi < batches.size()) {
      zero_grads();
      for (int k = 0; k < micro_per_step && bi < batches.size(); ++k, ++bi) {
        // assemble and pad the micro-batch with the current projector
        std::vector<ModelInput<T>> inputs;
        std::vector<typename AcousticProjector<T>::Cache> pcaches;
        for (std::size_t idx : batches[bi]) {
          const TrainExample& ex = train_set[idx];
          typename TransformerLM<T>::Mat prefix(1, model.lm.config.d_model);
          typename AcousticProjector<T>::Cache pc;
          if (config.ablation.zero_prefix) {
            prefix.setZero();
          } else {
            typename AcousticProjector<T>::Mat f = ex.features.template cast<T>();
            prefix.row(0) =
                model.projector.forward(f, &pc, true, &dropout_rng).transpose();
          }
          pcaches.push_back(std::move(pc));
          inputs.push_back(assemble_input<T>(prefix, ex.hyp_tokens,
                                             ex.label_tokens, true,
                                             model.lm.config.max_seq_len));
        }
        pad_batch(inputs);
        for (std::size_t e = 0; e < inputs.size(); ++e) {
          model.lm.ensure_grad_shapes(grads, 1);
          grads.d_prefix.setZero();
          model.lm.masked_ce(inputs[e], &grads, true, &dropout_rng);
          if (!config.ablation.zero_prefix) {
            typename AcousticProjector<T>::Vec dp =
                grads.d_prefix.row(0).transpose();
            model.projector.backward(pcaches[e], dp, proj_grads);
          }
        }
      }
      if (!std::isfinite(grads.loss_sum))
        throw NumericError("train: non-finite loss at step " +
                           std::to_string(global_step));
      epoch_loss_sum += grads.loss_sum;
      epoch_mask_count += grads.mask_count;

      ++global_step;
      lr = lr_at_step(config, global_step, total_steps);
      opt.begin_step(lr);
      const T inv = T(1) / static_cast<T>(grads.mask_count);
      std::size_t slot = 0;
      for (int l = 0; l < model.lm.config.n_layers; ++l) {
        opt.update(slot++, model.lm.lora_q[l].A, (grads.q_a[l] * inv).eval());
        opt.update(slot++, model.lm.lora_q[l].B, (grads.q_b[l] * inv).eval());
        opt.update(slot++, model.lm.lora_v[l].A, (grads.v_a[l] * inv).eval());
        opt.update(slot++, model.lm.lora_v[l].B, (grads.v_b[l] * inv).eval());
      }
      if (!config.ablation.zero_prefix) {
        opt.update(slot + 0, model.projector.w1, (proj_grads.w1 * inv).eval());
        opt.update(slot + 1, model.projector.b1, (proj_grads.b1 * inv).eval());
        opt.update(slot + 2, model.projector.w2, (proj_grads.w2 * inv).eval());
        opt.update(slot + 3, model.projector.b2, (proj_grads.b2 * inv).eval());
      }
      slot += 4;
      for (std::size_t r = 0; r < trainable_rows.size(); ++r) {
        const int id = trainable_rows[r];
        auto row = model.lm.tok_emb.row(id);
        opt.update(slot + 3 * r, row, (grads.emb.row(id) * inv).eval());
        auto hrow = model.lm.head_w.row(id);
        opt.update(slot + 3 * r + 1, hrow, (grads.head.row(id) * inv).eval());
        auto hb = model.lm.head_b.segment(id, 1);
        opt.update(slot + 3 * r + 2, hb,
                   (grads.head_b.segment(id, 1) * inv).eval());
      }
    }

    double dev_loss = eval_dev_loss(model, dev_set, config.ablation);
    if (dev_override) dev_loss = dev_override(epoch, dev_loss);
    if (!std::isfinite(dev_loss))
      throw NumericError("train: non-finite dev loss at epoch " +
                         std::to_string(epoch));

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss_sum / static_cast<double>(epoch_mask_count);
    rec.dev_loss = dev_loss;
    rec.lr = lr;
    if (dev_loss < result.best_dev_loss) {
      result.best_dev_loss = dev_loss;
      result.best_epoch = epoch;
      result.best_model = model;
      patience_counter = 0;
    } else {
      ++patience_counter;
    }
    rec.patience_counter = patience_counter;
    result.log.push_back(rec);
    if (patience_counter >= config.patience) break;
  }
  return result;
}

}  // namespace dysflm
