#include "support.hpp"

#include <attctl/errors.hpp>
#include <attctl/errstate.hpp>

#include <gtest/gtest.h>

using namespace attctl;

TEST(TrackingError, MatchingFramesGiveZeroError) {
  test::RandomStates rs(1);
  const Quaternion q = rs.quat();
  const Vector3 w = rs.vec3();
  const TrackingError e = make_tracking_error<double>(q, w, q, w, 0.1);
  EXPECT_LT(e.q_e.v.norm(), 1e-15);
  EXPECT_NEAR(e.q_e.w, 1.0, 1e-15);
  EXPECT_LT(e.omega_e.norm(), 1e-15);
  EXPECT_LT(e.s.norm(), 1e-15);
}

TEST(TrackingError, CaseSignsOfInitialScalarPart) {
  const Quaternion id = Quaternion::identity();
  EXPECT_GT(quat_error(case_attitude(1), id).w, 0.0);
  EXPECT_LT(quat_error(case_attitude(2), id).w, 0.0);
}

TEST(TrackingError, SlidingVariableIsRecomputable) {
  test::RandomStates rs(2);
  for (int k = 0; k < 200; ++k) {
    const TrackingError e =
        make_tracking_error<double>(rs.quat(), rs.vec3(), rs.quat(), rs.vec3(), -0.1);
    EXPECT_EQ(e.s, e.omega_e + e.lambda_slope * e.q_e.v);
  }
}

TEST(Slope, SignFollowsInitialScalarPart) {
  EXPECT_EQ(initial_slope(0.4, 0.1), 0.1);
  EXPECT_EQ(initial_slope(-0.4, 0.1), -0.1);
  EXPECT_THROW(initial_slope(1e-7, 0.1), UnwindingError);
}

TEST(Barrier, Values) {
  EXPECT_EQ(barrier_value(Quaternion::identity(), 0.5), 0.0);
  EXPECT_EQ(barrier_value(Quaternion{Vector3::Zero(), -1.0}, 0.5), 0.0);
  const Quaternion half{Vector3(std::sqrt(0.75), 0, 0), 0.5};
  EXPECT_NEAR(barrier_value(half, 0.5), 0.693147, 1e-6);
  EXPECT_EQ(barrier_value(half, 0.5), barrier_value(Quaternion{half.v, -0.5}, 0.5));
  EXPECT_THROW(barrier_value(Quaternion{Vector3(1, 0, 0), 0.0}, 0.5), UnwindingError);
}

TEST(Barrier, StrictlyDecreasingInScalarPart) {
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 1000; ++k) {
    const double x = k / 1000.0;
    const double v = barrier_value(Quaternion{Vector3(std::sqrt(1 - x * x), 0, 0), x}, 0.5);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Gibbs, Values) {
  EXPECT_EQ(gibbs_vector(Quaternion::identity()), Vector3::Zero());
  const Quaternion q{Vector3(0.5, 0, 0), std::sqrt(0.75)};
  EXPECT_NEAR(gibbs_vector(q)(0), 0.57735, 1e-5);
  EXPECT_EQ(gibbs_vector(q), gibbs_vector(-q));
}

TEST(Lemma1, Values) {
  EXPECT_EQ(lemma1_gap(1.0), 0.0);
  EXPECT_NEAR(lemma1_gap(0.5), 0.113706, 1e-6);
  EXPECT_EQ(lemma1_gap(-0.5), lemma1_gap(0.5));
}

TEST(Lemma1, HoldsOnGrid) {
  for (int k = 0; k < 500; ++k) {
    const double x = k < 250 ? std::pow(10.0, -3.0 + 3.0 * k / 249.0) : 0.001 + 0.999 * (k - 250) / 249.0;
    EXPECT_GE(lemma1_gap(x), -1e-12) << x;
    EXPECT_GE(lemma1_gap(-x), -1e-12) << -x;
  }
}

TEST(Lemma2, Values) {
  const BarrierBounds b = lemma2_bounds(0.5, 0.5);
  EXPECT_NEAR(b.upper, 0.924196, 1e-6);
  EXPECT_EQ(b.lower, 0.5);
  EXPECT_NEAR(lemma2_bounds(0.999, 0.5).upper, 0.5, 1e-3);
  for (double d : {0.05, 0.3, 0.7, 0.95}) {
    for (double a : {0.1, 0.5, 1.0, 5.0}) {
      const BarrierBounds bb = lemma2_bounds(d, a);
      EXPECT_GT(bb.upper, bb.lower);
      EXPECT_LE(bb.lower, std::min(1.0, a));
    }
  }
}

TEST(Lemma2, SandwichHoldsOnGrid) {
  for (int di = 1; di <= 19; ++di) {
    const double delta = 0.05 * di;
    for (double alpha : {0.1, 0.5, 1.0, 5.0}) {
      const BarrierBounds bb = lemma2_bounds(delta, alpha);
      for (int k = 0; k < 1000; ++k) {
        const double x = delta + (1.0 - delta) * k / 999.0;
        const Quaternion q{Vector3(std::sqrt(std::max(0.0, 1 - x * x)), 0, 0), x};
        const double v = barrier_value(q, alpha);
        const double w = q.v.squaredNorm();
        EXPECT_GE(v - bb.lower * w, -1e-12);
        EXPECT_GE(bb.upper * w - v, -1e-12);
      }
    }
  }
}
