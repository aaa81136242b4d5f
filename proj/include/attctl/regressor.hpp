#pragma once

// Regressor Phi of the tracking-error dynamics, its split into an integrable
// part (Phi1) and a non-integrable part (Phi2), the reconfigured Phi2hat that
// replaces off-slot rates with filter states, and the closed-form solution mu
// of the resulting PDE  d mu / d omega = (Phi + Psi)^T.
//
// Every row of Phi2, seen as a function of its own slot omega_i with the other
// two components frozen, is affine in omega_i. Writing h_i for omega_hat with
// slot i zeroed and e_i for the unit vector,
//
//   row_i Phi2(h_i + tau e_i) = a_i + tau b_i,
//   a_i = row_i Phi2(h_i),
//   b_i = row_i [ -S(e_i)L[h_i] - S(h_i)L[e_i] + L[e_i x Omega] + Lambda L[Q e_i] ],
//
// so mu2 = sum_i ( a_i omega_i + b_i omega_i^2 / 2 ).

#include <attctl/attmath.hpp>
#include <attctl/errstate.hpp>

#include <algorithm>
#include <cmath>

namespace attctl {

/// Every quantity the regressors are built from, all measurable.
template <typename Scalar> struct SignalsT {
  Vec3<Scalar> omega = Vec3<Scalar>::Zero();      // measured body rate
  Vec3<Scalar> omega_hat = Vec3<Scalar>::Zero();  // filter state
  TrackingErrorT<Scalar> err;
  Vec3<Scalar> omega_r = Vec3<Scalar>::Zero();
  Vec3<Scalar> omega_r_dot = Vec3<Scalar>::Zero();
  Vec3<Scalar> omega_r_ddot = Vec3<Scalar>::Zero();
  Vec3<Scalar> Omega = Vec3<Scalar>::Zero();      // C omega_r
  Vec3<Scalar> Omega_bar = Vec3<Scalar>::Zero();  // C omega_r_dot
  Mat3<Scalar> Q = Mat3<Scalar>::Zero();          // kinematics_matrix(q_e)
  Vec3<Scalar> xi = Vec3<Scalar>::Zero();         // Gibbs vector
  Scalar k_p = Scalar(0);
};
using Signals = SignalsT<double>;

template <typename Scalar> struct RegressorBundleT {
  Mat36<Scalar> Phi, Phi1, Phi2, Phi2hat, Psi;
  Vec3<Scalar> y, ybar;
};
using RegressorBundle = RegressorBundleT<double>;

/// y = -Omega_bar - k_p Omega + k_p Lambda q_ev + xi - Lambda Q Omega.
template <typename Scalar>
Vec3<Scalar> build_y(const TrackingErrorT<Scalar>& err, const Vec3<Scalar>& Omega,
                     const Vec3<Scalar>& Omega_bar, Scalar k_p) {
  const Scalar lam = err.lambda_slope;
  return -Omega_bar - k_p * Omega + k_p * lam * err.q_e.v + gibbs_vector(err.q_e) -
         lam * kinematics_matrix(err.q_e) * Omega;
}

template <typename Scalar>
SignalsT<Scalar> make_signals(const UnitQuaternion<Scalar>& q, const Vec3<Scalar>& omega,
                              const UnitQuaternion<Scalar>& q_r, const Vec3<Scalar>& omega_r,
                              const Vec3<Scalar>& omega_r_dot, const Vec3<Scalar>& omega_r_ddot,
                              const Vec3<Scalar>& omega_hat, Scalar lambda_slope, Scalar k_p) {
  SignalsT<Scalar> sig;
  sig.omega = omega;
  sig.omega_hat = omega_hat;
  sig.err = make_tracking_error(q, omega, q_r, omega_r, lambda_slope);
  sig.omega_r = omega_r;
  sig.omega_r_dot = omega_r_dot;
  sig.omega_r_ddot = omega_r_ddot;
  sig.Omega = sig.err.C * omega_r;
  sig.Omega_bar = sig.err.C * omega_r_dot;
  sig.Q = kinematics_matrix(sig.err.q_e);
  sig.xi = gibbs_vector(sig.err.q_e);
  sig.k_p = k_p;
  return sig;
}

inline Signals make_signals(const BodyState& measured, const ReferenceState& ref,
                            const Vector3& omega_hat, double lambda_slope, double k_p) {
  return make_signals<double>(measured.q, measured.omega, ref.q_r, ref.omega_r, ref.omega_r_dot,
                              ref.omega_r_ddot, omega_hat, lambda_slope, k_p);
}

/// Phi2 evaluated at an arbitrary rate x with Omega, q_e and Lambda held fixed.
template <typename Scalar>
Mat36<Scalar> phi2_at(const Vec3<Scalar>& x, const Vec3<Scalar>& Omega, const Mat3<Scalar>& Q,
                      Scalar lambda_slope) {
  return -skew(x) * lmap(x) + lmap(Vec3<Scalar>(x.cross(Omega))) +
         lambda_slope * lmap(Vec3<Scalar>(Q * x));
}

/// Phi1 = k_p L[omega] + L[y].
template <typename Scalar>
Mat36<Scalar> phi1_at(const Vec3<Scalar>& omega, const Vec3<Scalar>& y, Scalar k_p) {
  return k_p * lmap(omega) + lmap(y);
}

template <typename Scalar> RegressorBundleT<Scalar> build_regressors(const SignalsT<Scalar>& sig) {
  RegressorBundleT<Scalar> b;
  const Scalar lam = sig.err.lambda_slope;
  b.y = build_y(sig.err, sig.Omega, sig.Omega_bar, sig.k_p);
  b.ybar = b.y + sig.k_p * sig.omega + sig.omega.cross(sig.Omega) + lam * sig.Q * sig.omega;
  b.Phi1 = phi1_at(sig.omega, b.y, sig.k_p);
  b.Phi2 = phi2_at(sig.omega, sig.Omega, sig.Q, lam);
  for (int i = 0; i < 3; ++i) {
    Vec3<Scalar> x = sig.omega_hat;
    x(i) = sig.omega(i);
    b.Phi2hat.row(i) = phi2_at(x, sig.Omega, sig.Q, lam).row(i);
  }
  b.Psi = b.Phi2hat - b.Phi2;
  b.Phi = b.Phi1 + b.Phi2;
  return b;
}

/// mu1 = L[y]^T omega + k_p omega_bar.
template <typename Scalar>
Vec6<Scalar> mu1(const Vec3<Scalar>& omega, const Vec3<Scalar>& y, Scalar k_p) {
  Vec6<Scalar> sq;
  sq << Scalar(0.5) * omega(0) * omega(0), Scalar(0.5) * omega(1) * omega(1),
      Scalar(0.5) * omega(2) * omega(2), omega(1) * omega(2), omega(0) * omega(2),
      omega(0) * omega(1);
  return lmap(y).transpose() * omega + k_p * sq;
}

namespace detail {

template <typename Scalar> Vec3<Scalar> without_slot(const Vec3<Scalar>& v, int i) {
  Vec3<Scalar> h = v;
  h(i) = Scalar(0);
  return h;
}

/// Slope b_i of row i of Phi2 along its own slot.
template <typename Scalar>
Eigen::Matrix<Scalar, 1, 6> phi2_slot_slope(int i, const Vec3<Scalar>& h,
                                            const Vec3<Scalar>& Omega, const Mat3<Scalar>& Q,
                                            Scalar lambda_slope) {
  const Vec3<Scalar> e = Vec3<Scalar>::Unit(i);
  const Mat36<Scalar> d = -skew(e) * lmap(h) - skew(h) * lmap(e) +
                          lmap(Vec3<Scalar>(e.cross(Omega))) +
                          lambda_slope * lmap(Vec3<Scalar>(Q * e));
  return d.row(i);
}

}  // namespace detail

/// Closed form of sum_i int_0^{omega_i} row_i Phi2(omega_hat with slot i = tau) dtau.
template <typename Scalar>
Vec6<Scalar> mu2(const Vec3<Scalar>& omega, const Vec3<Scalar>& omega_hat,
                 const Vec3<Scalar>& Omega, const Mat3<Scalar>& Q, Scalar lambda_slope) {
  Vec6<Scalar> out = Vec6<Scalar>::Zero();
  for (int i = 0; i < 3; ++i) {
    const Vec3<Scalar> h = detail::without_slot(omega_hat, i);
    const Eigen::Matrix<Scalar, 1, 6> a = phi2_at(h, Omega, Q, lambda_slope).row(i);
    const Eigen::Matrix<Scalar, 1, 6> b = detail::phi2_slot_slope(i, h, Omega, Q, lambda_slope);
    const Scalar wi = omega(i);
    out += (wi * a + Scalar(0.5) * wi * wi * b).transpose();
  }
  return out;
}

/// mu = mu1 + mu2 at the given rate, other arguments taken from sig.
template <typename Scalar>
Vec6<Scalar> mu_at(const Vec3<Scalar>& omega, const SignalsT<Scalar>& sig,
                   const Vec3<Scalar>& y) {
  return mu1(omega, y, sig.k_p) +
         mu2(omega, sig.omega_hat, sig.Omega, sig.Q, sig.err.lambda_slope);
}

template <typename Scalar> Vec6<Scalar> mu(const SignalsT<Scalar>& sig) {
  const Vec3<Scalar> y = build_y(sig.err, sig.Omega, sig.Omega_bar, sig.k_p);
  return mu_at(sig.omega, sig, y);
}

/// Filter driving the off-slot arguments of Phi2hat.
template <typename Scalar>
Vec3<Scalar> omega_hat_derivative(const Vec3<Scalar>& omega_hat, const Vec3<Scalar>& ybar,
                                  const Vec3<Scalar>& omega, Scalar k_f) {
  return -ybar - k_f * (omega_hat - omega);
}

/// Time derivatives of the non-omega arguments of mu. All are measurable.
template <typename Scalar> struct SignalRatesT {
  Vec3<Scalar> qev_dot, Omega_dot, Omega_bar_dot, xi_dot, y_dot, omega_hat_dot;
  Scalar qe4_dot;
  Mat3<Scalar> Q_dot;
};

template <typename Scalar>
SignalRatesT<Scalar> signal_rates(const SignalsT<Scalar>& sig, const Vec3<Scalar>& ybar,
                                  Scalar k_f) {
  SignalRatesT<Scalar> r;
  const auto& e = sig.err;
  const Scalar lam = e.lambda_slope;
  r.qev_dot = sig.Q * e.omega_e;
  r.qe4_dot = Scalar(-0.5) * e.q_e.v.dot(e.omega_e);
  r.Q_dot = Scalar(0.5) * (skew(r.qev_dot) + r.qe4_dot * Mat3<Scalar>::Identity());
  r.Omega_dot = -e.omega_e.cross(sig.Omega) + e.C * sig.omega_r_dot;
  r.Omega_bar_dot = -e.omega_e.cross(sig.Omega_bar) + e.C * sig.omega_r_ddot;
  r.xi_dot = (r.qev_dot * e.q_e.w - e.q_e.v * r.qe4_dot) / (e.q_e.w * e.q_e.w);
  r.y_dot = -r.Omega_bar_dot - sig.k_p * r.Omega_dot + sig.k_p * lam * r.qev_dot + r.xi_dot -
            lam * r.Q_dot * sig.Omega - lam * sig.Q * r.Omega_dot;
  r.omega_hat_dot = omega_hat_derivative(sig.omega_hat, ybar, sig.omega, k_f);
  return r;
}

/// Partial time derivative of mu with omega held fixed. Uses measured
/// signals only; the body acceleration never enters.
/// The overload taking omega_hat_dot is for callers that drive the off-slot
/// arguments with something other than the filter.
template <typename Scalar>
Vec6<Scalar> mu_bar_dot(const SignalsT<Scalar>& sig, const Vec3<Scalar>& ybar, Scalar k_f,
                        const Vec3<Scalar>& omega_hat_dot) {
  auto r = signal_rates(sig, ybar, k_f);
  r.omega_hat_dot = omega_hat_dot;
  const Scalar lam = sig.err.lambda_slope;
  const Vec3<Scalar>& Om = sig.Omega;

  Vec6<Scalar> out = lmap(r.y_dot).transpose() * sig.omega;
  for (int i = 0; i < 3; ++i) {
    const Vec3<Scalar> e = Vec3<Scalar>::Unit(i);
    const Vec3<Scalar> h = detail::without_slot(sig.omega_hat, i);
    const Vec3<Scalar> hd = detail::without_slot(r.omega_hat_dot, i);
    const Mat36<Scalar> a_dot = -skew(hd) * lmap(h) - skew(h) * lmap(hd) +
                                lmap(Vec3<Scalar>(hd.cross(Om))) +
                                lmap(Vec3<Scalar>(h.cross(r.Omega_dot))) +
                                lam * lmap(Vec3<Scalar>(r.Q_dot * h)) +
                                lam * lmap(Vec3<Scalar>(sig.Q * hd));
    const Mat36<Scalar> b_dot = -skew(e) * lmap(hd) - skew(hd) * lmap(e) +
                                lmap(Vec3<Scalar>(e.cross(r.Omega_dot))) +
                                lam * lmap(Vec3<Scalar>(r.Q_dot * e));
    const Scalar wi = sig.omega(i);
    out += (wi * a_dot.row(i) + Scalar(0.5) * wi * wi * b_dot.row(i)).transpose();
  }
  return out;
}

template <typename Scalar>
Vec6<Scalar> mu_bar_dot(const SignalsT<Scalar>& sig, const Vec3<Scalar>& ybar, Scalar k_f) {
  return mu_bar_dot(sig, ybar, k_f, omega_hat_derivative(sig.omega_hat, ybar, sig.omega, k_f));
}

/// Central-difference Jacobian of an arbitrary mu(omega) map, 6 x 3.
template <typename Fn>
Eigen::Matrix<double, 6, 3> fd_jacobian(Fn&& mu_fn, const Vector3& omega, double h) {
  Eigen::Matrix<double, 6, 3> jac;
  for (int j = 0; j < 3; ++j) {
    Vector3 plus = omega, minus = omega;
    plus(j) += h;
    minus(j) -= h;
    jac.col(j) = (mu_fn(plus) - mu_fn(minus)) / (2.0 * h);
  }
  return jac;
}

/// max |FD d mu/d omega - (Phi + Psi)^T|, scaled by max(1, max|(Phi+Psi)^T|).
template <typename Fn>
double mu_jacobian_deviation(Fn&& mu_fn, const RegressorBundle& bundle, const Vector3& omega,
                             double h) {
  const Eigen::Matrix<double, 6, 3> expected = (bundle.Phi + bundle.Psi).transpose();
  const Eigen::Matrix<double, 6, 3> jac = fd_jacobian(mu_fn, omega, h);
  const double scale = std::max(1.0, expected.cwiseAbs().maxCoeff());
  return (jac - expected).cwiseAbs().maxCoeff() / scale;
}

inline double mu_jacobian_deviation(const Signals& sig, double h) {
  const RegressorBundle bundle = build_regressors(sig);
  auto fn = [&](const Vector3& w) { return mu_at(w, sig, bundle.y); };
  return mu_jacobian_deviation(fn, bundle, sig.omega, h);
}

}  // namespace attctl
