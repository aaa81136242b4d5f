#pragma once

// Tracking error, the logarithmic barrier on q_e4, and the two algebraic
// bounds that make the barrier usable in an exponential-stability argument.

#include <attctl/attmath.hpp>
#include <attctl/errors.hpp>
#include <attctl/plant.hpp>

#include <algorithm>
#include <cmath>
#include <utility>

namespace attctl {

/// Minimum |q_e4| accepted when freezing the slope sign at t = 0.
inline constexpr double kPermissibleQe4 = 1e-6;
/// Below this the barrier and the Gibbs vector are not evaluated.
inline constexpr double kBarrierBlowup = 1e-12;

struct AefParams {
  double alpha = 0.5;
  double beta = 0.1;
};

template <typename Scalar> struct TrackingErrorT {
  UnitQuaternion<Scalar> q_e;
  Vec3<Scalar> omega_e = Vec3<Scalar>::Zero();
  Vec3<Scalar> s = Vec3<Scalar>::Zero();
  Scalar lambda_slope = Scalar(0);
  Mat3<Scalar> C = Mat3<Scalar>::Identity();  // reference -> body
};
using TrackingError = TrackingErrorT<double>;

/// Slope Lambda = beta * sign(q_e4(0)); evaluated once per run.
inline double initial_slope(double qe4_at_start, double beta) {
  if (std::abs(qe4_at_start) < kPermissibleQe4) {
    throw UnwindingError("initial attitude error is outside the permissible set (|q_e4| < 1e-6)",
                         0.0, qe4_at_start);
  }
  return qe4_at_start > 0.0 ? beta : -beta;
}

template <typename Scalar>
TrackingErrorT<Scalar> make_tracking_error(const UnitQuaternion<Scalar>& q,
                                           const Vec3<Scalar>& omega,
                                           const UnitQuaternion<Scalar>& q_r,
                                           const Vec3<Scalar>& omega_r, Scalar lambda_slope) {
  TrackingErrorT<Scalar> e;
  e.q_e = quat_error(q, q_r);
  e.C = rotmat(e.q_e);
  e.omega_e = omega - e.C * omega_r;
  e.lambda_slope = lambda_slope;
  e.s = e.omega_e + lambda_slope * e.q_e.v;
  return e;
}

inline TrackingError make_tracking_error(const BodyState& body, const ReferenceState& ref,
                                         double lambda_slope) {
  return make_tracking_error<double>(body.q, body.omega, ref.q_r, ref.omega_r, lambda_slope);
}

/// V_q = -alpha ln(q_e4^2).
inline double barrier_value(const Quaternion& q_e, double alpha) {
  if (std::abs(q_e.w) < kBarrierBlowup) {
    throw UnwindingError("barrier blow-up: |q_e4| below 1e-12", 0.0, q_e.w);
  }
  return -alpha * std::log(q_e.w * q_e.w);
}

template <typename Scalar> Vec3<Scalar> gibbs_vector(const UnitQuaternion<Scalar>& q_e) {
  if (std::abs(q_e.w) < Scalar(kBarrierBlowup)) {
    throw UnwindingError("Gibbs vector undefined: |q_e4| below 1e-12", 0.0,
                         static_cast<double>(q_e.w));
  }
  return q_e.v / q_e.w;
}

/// (1 - x^2)/|x| + ln x^2, nonnegative on 0 < |x| <= 1.
inline double lemma1_gap(double qe4) {
  const double x2 = qe4 * qe4;
  return (1.0 - x2) / std::abs(qe4) + std::log(x2);
}

struct BarrierBounds {
  double lower;  // multiplies ||q_ev||^2 from below
  double upper;  // multiplies ||q_ev||^2 from above
};

/// Quadratic sandwich for V_q on delta <= |q_e4| <= 1.
inline BarrierBounds lemma2_bounds(double delta, double alpha) {
  const double d2 = delta * delta;
  return {std::min(1.0, alpha), -alpha * std::log(d2) / (1.0 - d2)};
}

}  // namespace attctl
