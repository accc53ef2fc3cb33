#include <doctest.h>

#include "dysflm/errors.hpp"
#include "dysflm/projector.hpp"

using namespace dysflm;
using P = AcousticProjector<double>;

TEST_CASE("hand-worked pool -> affine -> relu -> affine") {
  P p;
  p.dropout_p = 0.0;
  p.w1.resize(2, 2);
  p.w1 << 1.0, 0.0, -1.0, 1.0;
  p.b1 = P::Vec::Zero(2);
  p.b1 << 0.0, 0.5;
  p.w2.resize(1, 2);
  p.w2 << 2.0, 3.0;
  p.b2 = P::Vec::Zero(1);
  p.b2 << -1.0;

  P::Mat feats(2, 2);  // pooled = (2, 4)
  feats << 1.0, 3.0, 3.0, 5.0;
  // pre = (2, 2.5); relu no-op; out = 2*2 + 3*2.5 - 1 = 10.5
  P::Vec out = p.forward(feats);
  REQUIRE(out.size() == 1);
  CHECK(out(0) == doctest::Approx(10.5));

  // drive the first hidden unit negative: pooled (−2, 4) -> pre (−2, 6.5)
  feats << -1.0, 3.0, -3.0, 5.0;
  out = p.forward(feats);
  CHECK(out(0) == doctest::Approx(2.0 * 0.0 + 3.0 * 6.5 - 1.0));
}

TEST_CASE("backward matches finite differences") {
  P p = init_projector<double>(3, 5, 4, 11, 0.0);
  P::Mat feats = P::Mat::Random(6, 3);
  P::Vec dout = P::Vec::Random(4);

  P::Cache cache;
  p.forward(feats, &cache);
  P::Grads grads;
  p.backward(cache, dout, grads);

  const double h = 1e-7;
  auto scalar_loss = [&]() { return dout.dot(p.forward(feats)); };
  auto check_entry = [&](double& param, double analytic) {
    double keep = param;
    param = keep + h;
    double up = scalar_loss();
    param = keep - h;
    double dn = scalar_loss();
    param = keep;
    CHECK(analytic == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
  };
  check_entry(p.w1(2, 1), grads.w1(2, 1));
  check_entry(p.b1(4), grads.b1(4));
  check_entry(p.w2(1, 3), grads.w2(1, 3));
  check_entry(p.b2(0), grads.b2(0));
}

TEST_CASE("shape and finiteness validation") {
  P p = init_projector<double>(3, 4, 2, 1, 0.0);
  P::Mat wrong = P::Mat::Random(5, 2);
  CHECK_THROWS_AS(p.forward(wrong), DimensionError);
  P::Mat nan_feats = P::Mat::Random(5, 3);
  nan_feats(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(p.forward(nan_feats), DataError);
  CHECK_THROWS_AS(init_projector<double>(0, 4, 2, 1), ConfigError);
}
