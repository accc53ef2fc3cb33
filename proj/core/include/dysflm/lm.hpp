#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dysflm/errors.hpp"
#include "dysflm/lora.hpp"
#include "dysflm/rng.hpp"

namespace dysflm {

struct LMConfig {
  int vocab_size = 0;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 128;
  int max_seq_len = 1024;
  std::uint64_t seed = 0;

  void validate() const {
    if (vocab_size < 1 || d_model < 1 || n_layers < 1 || n_heads < 1 ||
        d_ff < 1 || max_seq_len < 1)
      throw ConfigError("lm config: all counts must be >= 1");
    if (d_model % n_heads != 0)
      throw ConfigError("lm config: d_model must be divisible by n_heads");
  }
};

// One forward-pass input: optional continuous prefix rows prepended to
// the token embeddings. targets[j] is the CE target at token position j
// and is read only where loss_mask[j] is set (defaults to tokens[j]).
template <typename T>
struct ModelInput {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

  Mat prefix;  // P x d_model, P may be 0
  std::vector<int> tokens;
  std::vector<int> targets;
  std::vector<char> loss_mask;

  int prefix_count() const { return static_cast<int>(prefix.rows()); }
  int positions() const {
    return prefix_count() + static_cast<int>(tokens.size());
  }
};

namespace detail {

template <typename T>
T gelu(T x) {
  const T c = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  T inner = c * (x + static_cast<T>(0.044715) * x * x * x);
  return static_cast<T>(0.5) * x * (T(1) + std::tanh(inner));
}

template <typename T>
T gelu_grad(T x) {
  const T c = static_cast<T>(0.7978845608028654);
  T x3 = x * x * x;
  T inner = c * (x + static_cast<T>(0.044715) * x3);
  T t = std::tanh(inner);
  T dinner = c * (T(1) + static_cast<T>(3 * 0.044715) * x * x);
  return static_cast<T>(0.5) * (T(1) + t) +
         static_cast<T>(0.5) * x * (T(1) - t * t) * dinner;
}

}  // namespace detail

// Per-layer gradients of the trainable (LoRA) parameters.
template <typename T>
struct LMGrads {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

  std::vector<Mat> q_a, q_b, v_a, v_b;  // per layer
  Mat emb;       // vocab x d_model (trainable rows only)
  Mat head;      // vocab x d_model (trainable rows only)
  Eigen::Matrix<T, Eigen::Dynamic, 1> head_b;  // vocab
  Mat d_prefix;  // P x d_model, chained to the projector

  double loss_sum = 0.0;
  std::size_t mask_count = 0;
};

// Small pre-norm causal transformer with learned positional embeddings.
// Base weights are frozen after seeded init; LoRA adapters on the
// attention query/value projections carry the trainable capacity.
template <typename T>
class TransformerLM {
 public:
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  struct Layer {
    Vec ln1_g, ln1_b, ln2_g, ln2_b;
    Mat wq, wk, wv, wo;  // d x d, applied as y = x * W^T
    Mat w1;              // d_ff x d
    Vec b1;
    Mat w2;  // d x d_ff
    Vec b2;
  };

  LMConfig config;
  Mat tok_emb;  // vocab x d
  Mat pos_emb;  // max_seq_len x d
  std::vector<Layer> layers;
  Vec lnf_g, lnf_b;
  Mat head_w;  // vocab x d (untied)
  Vec head_b;

  bool use_lora = false;
  std::vector<LoraAdapter<T>> lora_q, lora_v;  // per layer when attached

  explicit TransformerLM(const LMConfig& cfg) : config(cfg) {
    config.validate();
    Rng rng(mix_seed(cfg.seed, hash_name("lm-init")));
    std::normal_distribution<double> gauss(0.0, 0.02);
    auto fill = [&](Mat& m, int rows, int cols) {
      m.resize(rows, cols);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = static_cast<T>(gauss(rng));
    };
    const int d = cfg.d_model;
    fill(tok_emb, cfg.vocab_size, d);
    fill(pos_emb, cfg.max_seq_len, d);
    layers.resize(static_cast<std::size_t>(cfg.n_layers));
    for (auto& l : layers) {
      l.ln1_g = Vec::Ones(d);
      l.ln1_b = Vec::Zero(d);
      l.ln2_g = Vec::Ones(d);
      l.ln2_b = Vec::Zero(d);
      fill(l.wq, d, d);
      fill(l.wk, d, d);
      fill(l.wv, d, d);
      fill(l.wo, d, d);
      fill(l.w1, cfg.d_ff, d);
      l.b1 = Vec::Zero(cfg.d_ff);
      fill(l.w2, d, cfg.d_ff);
      l.b2 = Vec::Zero(d);
    }
    lnf_g = Vec::Ones(d);
    lnf_b = Vec::Zero(d);
    fill(head_w, cfg.vocab_size, d);
    head_b = Vec::Zero(cfg.vocab_size);
  }

  // Attaches zero-update adapters on every block's query and value
  // projections.
  void attach_lora(int rank, T alpha, T dropout_p, std::uint64_t seed) {
    lora_q.clear();
    lora_v.clear();
    const int d = config.d_model;
    for (int l = 0; l < config.n_layers; ++l) {
      lora_q.push_back(init_adapter<T>(d, d, rank, alpha,
                                       mix_seed(seed, 2 * l), dropout_p,
                                       "layer" + std::to_string(l) + ".wq"));
      lora_v.push_back(init_adapter<T>(d, d, rank, alpha,
                                       mix_seed(seed, 2 * l + 1), dropout_p,
                                       "layer" + std::to_string(l) + ".wv"));
    }
    use_lora = true;
  }

  void detach_lora() {
    use_lora = false;
    lora_q.clear();
    lora_v.clear();
  }

  struct LayerCache {
    Mat x_in;                  // pre-ln1 input
    Mat xhat1, xhat2;          // layernorm normalized rows
    Vec inv_std1, inv_std2;    // per row
    Mat h1, h2;                // post-ln activations
    Mat hq_drop, hv_drop;      // dropped LoRA inputs (training); else h1
    Mat hq_mask, hv_mask;      // dropout multipliers; empty in eval mode
    Mat q, k, v;               // S x d
    std::vector<Mat> attn;     // per-head softmax, S x S
    Mat ff_pre;                // S x d_ff (pre-activation)
    Mat ff_act;                // S x d_ff
  };

  struct Cache {
    std::vector<LayerCache> layer;
    Mat xhatf;
    Vec inv_stdf;
    Mat hf;
    Mat logits;  // S x vocab
  };

  // Causal forward pass; returns per-position logits. Deterministic in
  // eval mode; training mode draws LoRA dropout masks from rng.
  Mat forward(const ModelInput<T>& input, Cache* cache = nullptr,
              bool training = false, Rng* rng = nullptr) const {
    const int p = input.prefix_count();
    const int n = static_cast<int>(input.tokens.size());
    const int s = p + n;
    const int d = config.d_model;
    if (s > config.max_seq_len)
      throw DataError("lm: sequence length " + std::to_string(s) +
                      " exceeds max_seq_len " +
                      std::to_string(config.max_seq_len));
    if (s == 0) throw DataError("lm: empty input");
    if (p > 0 && input.prefix.cols() != d)
      throw DimensionError("lm: prefix dim != d_model");
    for (int t : input.tokens)
      if (t < 0 || t >= config.vocab_size)
        throw DataError("lm: token id out of range: " + std::to_string(t));
    if (use_lora && training && !rng)
      throw ConfigError("lm: training forward with LoRA requires an rng");

    Mat x(s, d);
    for (int i = 0; i < p; ++i) x.row(i) = input.prefix.row(i);
    for (int j = 0; j < n; ++j) x.row(p + j) = tok_emb.row(input.tokens[j]);
    for (int i = 0; i < s; ++i) x.row(i) += pos_emb.row(i);

    if (cache) cache->layer.resize(layers.size());

    const int nh = config.n_heads;
    const int dk = d / nh;
    const T att_scale = T(1) / std::sqrt(static_cast<T>(dk));

    for (std::size_t li = 0; li < layers.size(); ++li) {
      const Layer& l = layers[li];
      LayerCache* lc = cache ? &cache->layer[li] : nullptr;
      if (lc) lc->x_in = x;

      Mat h1 = layer_norm(x, l.ln1_g, l.ln1_b, lc ? &lc->xhat1 : nullptr,
                          lc ? &lc->inv_std1 : nullptr);
      Mat q = h1 * l.wq.transpose();
      Mat k = h1 * l.wk.transpose();
      Mat v = h1 * l.wv.transpose();
      Mat hq_drop, hv_drop, hq_mask, hv_mask;
      if (use_lora) {
        hq_mask = drop_mask(s, d, lora_q[li].dropout_p, training, rng);
        hv_mask = drop_mask(s, d, lora_v[li].dropout_p, training, rng);
        hq_drop = hq_mask.size() ? Mat(h1.array() * hq_mask.array()) : h1;
        hv_drop = hv_mask.size() ? Mat(h1.array() * hv_mask.array()) : h1;
        q += lora_q[li].scale() *
             (hq_drop * lora_q[li].A.transpose()) * lora_q[li].B.transpose();
        v += lora_v[li].scale() *
             (hv_drop * lora_v[li].A.transpose()) * lora_v[li].B.transpose();
      }
      if (lc) {
        lc->h1 = h1;
        lc->hq_drop = hq_drop;
        lc->hv_drop = hv_drop;
        lc->hq_mask = hq_mask;
        lc->hv_mask = hv_mask;
        lc->q = q;
        lc->k = k;
        lc->v = v;
        lc->attn.resize(static_cast<std::size_t>(nh));
      }

      Mat att_out(s, d);
      for (int h = 0; h < nh; ++h) {
        auto qh = q.middleCols(h * dk, dk);
        auto kh = k.middleCols(h * dk, dk);
        auto vh = v.middleCols(h * dk, dk);
        Mat scores = (qh * kh.transpose()) * att_scale;
        Mat probs(s, s);
        for (int i = 0; i < s; ++i) {
          T row_max = scores(i, 0);
          for (int j = 1; j <= i; ++j) row_max = std::max(row_max, scores(i, j));
          T denom = T(0);
          for (int j = 0; j <= i; ++j) {
            probs(i, j) = std::exp(scores(i, j) - row_max);
            denom += probs(i, j);
          }
          for (int j = 0; j <= i; ++j) probs(i, j) /= denom;
          for (int j = i + 1; j < s; ++j) probs(i, j) = T(0);
        }
        att_out.middleCols(h * dk, dk) = probs * vh;
        if (lc) lc->attn[static_cast<std::size_t>(h)] = std::move(probs);
      }
      x += att_out * l.wo.transpose();

      Mat h2 = layer_norm(x, l.ln2_g, l.ln2_b, lc ? &lc->xhat2 : nullptr,
                          lc ? &lc->inv_std2 : nullptr);
      Mat ff_pre = (h2 * l.w1.transpose()).rowwise() + l.b1.transpose();
      Mat ff_act = ff_pre.unaryExpr([](T v) { return detail::gelu(v); });
      if (lc) {
        lc->h2 = h2;
        lc->ff_pre = ff_pre;
        lc->ff_act = ff_act;
      }
      x += (ff_act * l.w2.transpose()).rowwise() + l.b2.transpose();
    }

    Mat hf = layer_norm(x, lnf_g, lnf_b, cache ? &cache->xhatf : nullptr,
                        cache ? &cache->inv_stdf : nullptr);
    Mat logits = (hf * head_w.transpose()).rowwise() + head_b.transpose();
    if (cache) {
      cache->hf = hf;
      cache->logits = logits;
    }
    return logits;
  }

  Mat next_token_logits(const ModelInput<T>& input) const {
    return forward(input);
  }

  // Sum of log softmax(logits)[token] over continuation positions
  // appended after the context. Empty continuation -> 0.
  double sequence_log_prob(const ModelInput<T>& context,
                           const std::vector<int>& continuation) const {
    if (continuation.empty()) return 0.0;
    ModelInput<T> full = context;
    full.tokens.insert(full.tokens.end(), continuation.begin(),
                       continuation.end());
    full.targets.clear();
    full.loss_mask.clear();
    Mat logits = forward(full);
    const int ctx = context.positions();
    double total = 0.0;
    for (std::size_t i = 0; i < continuation.size(); ++i) {
      int row = ctx - 1 + static_cast<int>(i);
      total += log_softmax_at(logits, row, continuation[i]);
    }
    return total;
  }

  // Mean masked cross-entropy; accumulates gradients for the trainable
  // parameters (LoRA A/B, embedding rows, prefix rows) into grads when
  // non-null. Loss contributions are unscaled sums; callers divide by
  // mask_count so accumulation across micro-batches stays exact.
  double masked_ce(const ModelInput<T>& input, LMGrads<T>* grads,
                   bool training = false, Rng* rng = nullptr) const {
    if (input.loss_mask.size() != input.tokens.size())
      throw DataError("lm: loss_mask length mismatch");
    std::vector<int> targets =
        input.targets.empty() ? input.tokens : input.targets;
    if (targets.size() != input.tokens.size())
      throw DataError("lm: targets length mismatch");
    std::size_t count = 0;
    for (char m : input.loss_mask)
      if (m) ++count;
    if (count == 0) throw DataError("lm: empty loss mask");

    Cache cache;
    Mat logits = forward(input, &cache, training, rng);
    const int p = input.prefix_count();
    const int s = input.positions();

    double loss_sum = 0.0;
    Mat dlogits = Mat::Zero(s, config.vocab_size);
    for (std::size_t j = 0; j < input.tokens.size(); ++j) {
      if (!input.loss_mask[j]) continue;
      int row = p + static_cast<int>(j) - 1;
      if (row < 0) throw DataError("lm: masked position has no predictor");
      int target = targets[j];
      if (target < 0 || target >= config.vocab_size)
        throw DataError("lm: target id out of range");
      loss_sum -= log_softmax_at(logits, row, target);
      if (grads) {
        // d/dlogits of -log softmax = softmax - onehot
        Vec row_logits = logits.row(row).transpose();
        T row_max = row_logits.maxCoeff();
        Vec ex = (row_logits.array() - row_max).exp();
        Vec sm = ex / ex.sum();
        sm(target) -= T(1);
        dlogits.row(row) += sm.transpose();
      }
    }
    if (grads) {
      ensure_grad_shapes(*grads, p);
      backward(input, cache, dlogits, *grads);
      grads->loss_sum += loss_sum;
      grads->mask_count += count;
    }
    return loss_sum / static_cast<double>(count);
  }

  void ensure_grad_shapes(LMGrads<T>& g, int prefix_rows) const {
    const int d = config.d_model;
    if (g.emb.rows() != config.vocab_size)
      g.emb = Mat::Zero(config.vocab_size, d);
    if (g.head.rows() != config.vocab_size) {
      g.head = Mat::Zero(config.vocab_size, d);
      g.head_b = Eigen::Matrix<T, Eigen::Dynamic, 1>::Zero(config.vocab_size);
    }
    if (use_lora && g.q_a.empty()) {
      for (int l = 0; l < config.n_layers; ++l) {
        g.q_a.push_back(Mat::Zero(lora_q[l].A.rows(), lora_q[l].A.cols()));
        g.q_b.push_back(Mat::Zero(lora_q[l].B.rows(), lora_q[l].B.cols()));
        g.v_a.push_back(Mat::Zero(lora_v[l].A.rows(), lora_v[l].A.cols()));
        g.v_b.push_back(Mat::Zero(lora_v[l].B.rows(), lora_v[l].B.cols()));
      }
    }
    if (g.d_prefix.rows() != prefix_rows) g.d_prefix = Mat::Zero(prefix_rows, d);
  }

 private:
  static Mat layer_norm(const Mat& x, const Vec& g, const Vec& b, Mat* xhat_out,
                        Vec* inv_std_out) {
    const T eps = static_cast<T>(1e-5);
    Mat out(x.rows(), x.cols());
    Mat xhat(x.rows(), x.cols());
    Vec inv_std(x.rows());
    const T dim = static_cast<T>(x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      T mu = x.row(i).mean();
      T var = (x.row(i).array() - mu).square().sum() / dim;
      T is = T(1) / std::sqrt(var + eps);
      inv_std(i) = is;
      xhat.row(i) = (x.row(i).array() - mu) * is;
      out.row(i) =
          (xhat.row(i).array() * g.transpose().array()) + b.transpose().array();
    }
    if (xhat_out) *xhat_out = std::move(xhat);
    if (inv_std_out) *inv_std_out = std::move(inv_std);
    return out;
  }

  // dY -> dX through y = g*xhat + b (g, b frozen).
  static Mat layer_norm_backward(const Mat& dy, const Mat& xhat,
                                 const Vec& inv_std, const Vec& g) {
    Mat dx(dy.rows(), dy.cols());
    const T dim = static_cast<T>(dy.cols());
    for (Eigen::Index i = 0; i < dy.rows(); ++i) {
      Eigen::Array<T, 1, Eigen::Dynamic> dxhat =
          dy.row(i).array() * g.transpose().array();
      T m1 = dxhat.sum() / dim;
      T m2 = (dxhat * xhat.row(i).array()).sum() / dim;
      dx.row(i) = ((dxhat - m1 - xhat.row(i).array() * m2) * inv_std(i)).matrix();
    }
    return dx;
  }

  // Inverted-dropout multipliers (0 or 1/keep); empty matrix in eval mode.
  static Mat drop_mask(int rows, int cols, T p, bool training, Rng* rng) {
    if (!training || p <= T(0)) return Mat();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Mat mask(rows, cols);
    T keep = T(1) - p;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        mask(i, j) = unif(*rng) < p ? T(0) : T(1) / keep;
    return mask;
  }

  static double log_softmax_at(const Mat& logits, int row, int token) {
    T row_max = logits.row(row).maxCoeff();
    double denom = 0.0;
    for (Eigen::Index v = 0; v < logits.cols(); ++v)
      denom += std::exp(static_cast<double>(logits(row, v) - row_max));
    return static_cast<double>(logits(row, token) - row_max) - std::log(denom);
  }

  void backward(const ModelInput<T>& input, const Cache& cache,
                const Mat& dlogits, LMGrads<T>& grads) const {
    const int p = input.prefix_count();
    const int s = input.positions();
    const int d = config.d_model;
    const int nh = config.n_heads;
    const int dk = d / nh;
    const T att_scale = T(1) / std::sqrt(static_cast<T>(dk));

    // head and final layer norm (only the label-region head rows get
    // their gradients applied; the rest stay frozen)
    grads.head += dlogits.transpose() * cache.hf;
    grads.head_b += dlogits.colwise().sum().transpose();
    Mat dhf = dlogits * head_w;
    Mat dx = layer_norm_backward(dhf, cache.xhatf, cache.inv_stdf, lnf_g);

    for (int li = static_cast<int>(layers.size()) - 1; li >= 0; --li) {
      const Layer& l = layers[static_cast<std::size_t>(li)];
      const LayerCache& lc = cache.layer[static_cast<std::size_t>(li)];

      // feed-forward branch
      Mat dff_out = dx;  // residual passthrough keeps dx as-is
      Mat dact = dff_out * l.w2;
      Mat dpre =
          dact.array() * lc.ff_pre.unaryExpr([](T v) {
                             return detail::gelu_grad(v);
                           }).array();
      Mat dh2 = dpre * l.w1;
      dx += layer_norm_backward(dh2, lc.xhat2, lc.inv_std2, l.ln2_g);

      // attention branch
      Mat datt_out = dx * l.wo;
      Mat dq = Mat::Zero(s, d), dkm = Mat::Zero(s, d), dv = Mat::Zero(s, d);
      for (int h = 0; h < nh; ++h) {
        const Mat& probs = lc.attn[static_cast<std::size_t>(h)];
        auto doh = datt_out.middleCols(h * dk, dk);
        auto vh = lc.v.middleCols(h * dk, dk);
        auto qh = lc.q.middleCols(h * dk, dk);
        auto kh = lc.k.middleCols(h * dk, dk);
        Mat dprobs = doh * vh.transpose();
        dv.middleCols(h * dk, dk) = probs.transpose() * doh;
        Mat dscores(s, s);
        for (int i = 0; i < s; ++i) {
          T dot = T(0);
          for (int j = 0; j <= i; ++j) dot += dprobs(i, j) * probs(i, j);
          for (int j = 0; j <= i; ++j)
            dscores(i, j) = probs(i, j) * (dprobs(i, j) - dot);
          for (int j = i + 1; j < s; ++j) dscores(i, j) = T(0);
        }
        dq.middleCols(h * dk, dk) = (dscores * kh) * att_scale;
        dkm.middleCols(h * dk, dk) = (dscores.transpose() * qh) * att_scale;
      }

      Mat dh1 = dq * l.wq + dkm * l.wk + dv * l.wv;
      if (use_lora) {
        const auto& aq = lora_q[static_cast<std::size_t>(li)];
        const auto& av = lora_v[static_cast<std::size_t>(li)];
        auto lora_back = [&](const LoraAdapter<T>& ad, const Mat& h_drop,
                             const Mat& mask, const Mat& dz, Mat& da, Mat& db) {
          Mat u = h_drop * ad.A.transpose();          // S x r
          db += ad.scale() * (dz.transpose() * u);    // m x r
          Mat du = ad.scale() * (dz * ad.B);          // S x r
          da += du.transpose() * h_drop;              // r x n
          Mat dh_drop = du * ad.A;                    // S x n
          if (mask.size())
            dh1 += (dh_drop.array() * mask.array()).matrix();
          else
            dh1 += dh_drop;
        };
        lora_back(aq, lc.hq_drop, lc.hq_mask, dq,
                  grads.q_a[static_cast<std::size_t>(li)],
                  grads.q_b[static_cast<std::size_t>(li)]);
        lora_back(av, lc.hv_drop, lc.hv_mask, dv,
                  grads.v_a[static_cast<std::size_t>(li)],
                  grads.v_b[static_cast<std::size_t>(li)]);
      }
      dx += layer_norm_backward(dh1, lc.xhat1, lc.inv_std1, l.ln1_g);
      // dx now holds the gradient w.r.t. lc.x_in
    }

    for (int i = 0; i < p; ++i) grads.d_prefix.row(i) += dx.row(i);
    for (std::size_t j = 0; j < input.tokens.size(); ++j)
      grads.emb.row(input.tokens[j]) += dx.row(p + static_cast<long>(j));
  }
};

}  // namespace dysflm
