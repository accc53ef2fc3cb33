#include <doctest.h>

#include "dysflm/errors.hpp"
#include "dysflm/lora.hpp"

using namespace dysflm;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

TEST_CASE("fresh adapter is the identity update") {
  Mat w = Mat::Random(4, 3);
  auto ad = init_adapter<double>(4, 3, 2, 16.0, 9);
  CHECK(ad.B.isZero(0.0));
  CHECK(ad.delta().isZero(0.0));
  Vec x = Vec::Random(3);
  Vec y = adapted_forward<double>(w, ad, x);
  CHECK((y - w * x).norm() == doctest::Approx(0.0));
  CHECK((merge<double>(w, ad) - w).norm() == doctest::Approx(0.0));
}

TEST_CASE("merge equals the adapted eval forward after updates") {
  Mat w = Mat::Random(5, 5);
  auto ad = init_adapter<double>(5, 5, 3, 16.0, 9);
  ad.B = Mat::Random(5, 3);  // pretend training moved B
  Vec x = Vec::Random(5);
  Vec adapted = adapted_forward<double>(w, ad, x);
  Vec merged = merge<double>(w, ad) * x;
  CHECK((adapted - merged).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("hand-worked rank-1 update") {
  // W = I(2), A = [1 0], B = [0 1]^T, alpha = 4, r = 1 -> scale 4
  Mat w = Mat::Identity(2, 2);
  LoraAdapter<double> ad;
  ad.rank = 1;
  ad.alpha = 4.0;
  ad.dropout_p = 0.0;
  ad.A = Mat::Zero(1, 2);
  ad.A(0, 0) = 1.0;
  ad.B = Mat::Zero(2, 1);
  ad.B(1, 0) = 1.0;
  Vec x(2);
  x << 3.0, 0.0;
  Vec y = adapted_forward<double>(w, ad, x);
  CHECK(y(0) == doctest::Approx(3.0));
  CHECK(y(1) == doctest::Approx(12.0));  // 0 + 4 * 1 * (1*3)
}

TEST_CASE("rank bounds and shape mismatches are rejected") {
  CHECK_THROWS_AS(init_adapter<double>(4, 3, 0, 16.0, 1), ConfigError);
  CHECK_THROWS_AS(init_adapter<double>(4, 3, 4, 16.0, 1), ConfigError);
  Mat w = Mat::Random(4, 3);
  auto ad = init_adapter<double>(4, 4, 2, 16.0, 1);
  Vec x = Vec::Random(3);
  CHECK_THROWS_AS(adapted_forward<double>(w, ad, x), DimensionError);
}

TEST_CASE("training dropout keeps the expectation, eval applies none") {
  Mat w = Mat::Zero(2, 2);
  auto ad = init_adapter<double>(2, 2, 1, 2.0, 3, 0.5);
  ad.B = Mat::Ones(2, 1);
  Vec x = Vec::Ones(2);
  Vec eval1 = adapted_forward<double>(w, ad, x);
  Vec eval2 = adapted_forward<double>(w, ad, x);
  CHECK((eval1 - eval2).norm() == 0.0);  // eval path is deterministic
  Rng rng(77);
  Vec mean = Vec::Zero(2);
  const int n = 20000;
  for (int i = 0; i < n; ++i)
    mean += adapted_forward<double>(w, ad, x, true, &rng);
  mean /= n;
  CHECK((mean - eval1).lpNorm<Eigen::Infinity>() < 0.05 * eval1.norm() + 0.05);
}
