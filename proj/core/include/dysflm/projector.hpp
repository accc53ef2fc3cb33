#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "dysflm/errors.hpp"
#include "dysflm/rng.hpp"

namespace dysflm {

// Mean pooling over frames, then linear -> ReLU -> linear into the LM's
// token space. The hidden width defaults to 512; toy runs shrink it.
template <typename T>
struct AcousticProjector {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  Mat w1;  // hidden x a
  Vec b1;
  Mat w2;  // d_model x hidden
  Vec b2;
  T dropout_p = T(0.10);

  int feature_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }
  int output_dim() const { return static_cast<int>(w2.rows()); }

  struct Cache {
    Vec pooled;   // a
    Vec pre;      // hidden (pre-ReLU)
    Vec hidden;   // hidden (post-ReLU, post-dropout)
    Vec mask;     // dropout multipliers; empty in eval mode
  };

  struct Grads {
    Mat w1, w2;
    Vec b1, b2;

    void ensure(const AcousticProjector& p) {
      if (w1.rows() != p.w1.rows()) {
        w1 = Mat::Zero(p.w1.rows(), p.w1.cols());
        b1 = Vec::Zero(p.b1.size());
        w2 = Mat::Zero(p.w2.rows(), p.w2.cols());
        b2 = Vec::Zero(p.b2.size());
      }
    }
  };

  // feats: L x a, one row per frame.
  Vec forward(const Mat& feats, Cache* cache = nullptr, bool training = false,
              Rng* rng = nullptr) const {
    if (feats.rows() < 1 || feats.cols() != feature_dim())
      throw DimensionError("projector: feature matrix shape mismatch");
    if (!feats.allFinite())
      throw DataError("projector: non-finite acoustic features");
    Vec pooled = feats.colwise().mean().transpose();
    Vec pre = w1 * pooled + b1;
    Vec hidden = pre.cwiseMax(T(0));
    Vec mask;
    if (training && dropout_p > T(0)) {
      if (!rng) throw ConfigError("projector: training forward requires rng");
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      mask.resize(hidden.size());
      T keep = T(1) - dropout_p;
      for (Eigen::Index i = 0; i < hidden.size(); ++i)
        mask(i) = unif(*rng) < dropout_p ? T(0) : T(1) / keep;
      hidden = hidden.cwiseProduct(mask);
    }
    Vec out = w2 * hidden + b2;
    if (cache) {
      cache->pooled = std::move(pooled);
      cache->pre = std::move(pre);
      cache->hidden = std::move(hidden);
      cache->mask = std::move(mask);
    }
    return out;
  }

  void backward(const Cache& cache, const Vec& dout, Grads& grads) const {
    grads.ensure(*this);
    grads.w2 += dout * cache.hidden.transpose();
    grads.b2 += dout;
    Vec dhidden = w2.transpose() * dout;
    if (cache.mask.size()) dhidden = dhidden.cwiseProduct(cache.mask);
    Vec dpre = dhidden;
    for (Eigen::Index i = 0; i < dpre.size(); ++i)
      if (cache.pre(i) <= T(0)) dpre(i) = T(0);
    grads.w1 += dpre * cache.pooled.transpose();
    grads.b1 += dpre;
  }
};

template <typename T>
AcousticProjector<T> init_projector(int feature_dim, int hidden_dim,
                                    int d_model, std::uint64_t seed,
                                    T dropout_p = T(0.10)) {
  if (feature_dim < 1 || hidden_dim < 1 || d_model < 1)
    throw ConfigError("projector: dims must be >= 1");
  AcousticProjector<T> p;
  p.dropout_p = dropout_p;
  Rng rng(mix_seed(seed, hash_name("projector-init")));
  std::normal_distribution<double> gauss(0.0, 0.02);
  auto fill = [&](typename AcousticProjector<T>::Mat& m, int r, int c) {
    m.resize(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = static_cast<T>(gauss(rng));
  };
  fill(p.w1, hidden_dim, feature_dim);
  p.b1 = AcousticProjector<T>::Vec::Zero(hidden_dim);
  fill(p.w2, d_model, hidden_dim);
  p.b2 = AcousticProjector<T>::Vec::Zero(d_model);
  return p;
}

}  // namespace dysflm
