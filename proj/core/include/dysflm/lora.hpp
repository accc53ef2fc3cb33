#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dysflm/errors.hpp"
#include "dysflm/rng.hpp"

namespace dysflm {

// Low-rank adapter over a frozen m x n weight: effective update
// delta = (alpha/r) * B * A with A ~ N(0, 0.02^2) and B = 0 at init,
// so the adapted map equals the frozen map at step 0.
template <typename T>
struct LoraAdapter {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  Mat A;  // r x n
  Mat B;  // m x r
  int rank = 0;
  T alpha = T(16);
  T dropout_p = T(0.10);
  std::string target;

  T scale() const { return alpha / static_cast<T>(rank); }
  Mat delta() const { return scale() * (B * A); }
};

template <typename T>
LoraAdapter<T> init_adapter(int m, int n, int r, T alpha, std::uint64_t seed,
                            T dropout_p = T(0.10), std::string target = "") {
  if (r < 1 || r > std::min(m, n))
    throw ConfigError("lora: rank " + std::to_string(r) +
                      " out of range for " + std::to_string(m) + "x" +
                      std::to_string(n));
  LoraAdapter<T> ad;
  ad.rank = r;
  ad.alpha = alpha;
  ad.dropout_p = dropout_p;
  ad.target = std::move(target);
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.02);
  ad.A.resize(r, n);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < n; ++j) ad.A(i, j) = static_cast<T>(gauss(rng));
  ad.B = LoraAdapter<T>::Mat::Zero(m, r);
  return ad;
}

// W*x + (alpha/r) * B * (A * drop(x)). Inverted dropout: kept entries
// are scaled by 1/(1-p) so the eval path applies no correction.
template <typename T>
typename LoraAdapter<T>::Vec adapted_forward(
    const typename LoraAdapter<T>::Mat& w, const LoraAdapter<T>& adapter,
    const typename LoraAdapter<T>::Vec& x, bool training = false,
    Rng* rng = nullptr) {
  if (w.cols() != x.size() || adapter.A.cols() != w.cols() ||
      adapter.B.rows() != w.rows())
    throw DimensionError("lora: shape mismatch in adapted_forward");
  typename LoraAdapter<T>::Vec xd = x;
  if (training && adapter.dropout_p > T(0)) {
    if (!rng) throw ConfigError("lora: training forward requires an rng");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    T keep = T(1) - adapter.dropout_p;
    for (Eigen::Index i = 0; i < xd.size(); ++i)
      xd(i) = unif(*rng) < adapter.dropout_p ? T(0) : xd(i) / keep;
  }
  return w * x + adapter.scale() * (adapter.B * (adapter.A * xd));
}

template <typename T>
typename LoraAdapter<T>::Mat merge(const typename LoraAdapter<T>::Mat& w,
                                   const LoraAdapter<T>& adapter) {
  if (adapter.A.cols() != w.cols() || adapter.B.rows() != w.rows())
    throw DimensionError("lora: shape mismatch in merge");
  return w + adapter.delta();
}

}  // namespace dysflm
