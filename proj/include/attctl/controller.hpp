#pragma once

// Composite I&I adaptive attitude controller with a prediction-error learning
// term, the finite/fixed-time power-term extension, and a plain
// certainty-equivalence baseline on the same regressor.

#include <attctl/drem.hpp>
#include <attctl/errstate.hpp>
#include <attctl/regressor.hpp>

#include <string_view>

namespace attctl {

struct ControllerGains {
  AefParams aef;
  double kappa = 0.5;
  double f_m = 2.0;
  double gamma = 25.0;
  double lambda = 0.01;
  DremGains drem;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double iota1 = 0.85;
  double iota2 = 1.1;
  double gamma_ce = 10.0;  // baseline adaptation gain

  /// k_p = k_f = kappa (f_m + 1); never set independently.
  double k_p() const { return kappa * (f_m + 1.0); }
  double k_f() const { return k_p(); }

  /// Throws ConfigError on a non-positive gain or an out-of-range exponent.
  void validate() const;
};

enum class EstimatorVariant { Exponential, FiniteTime, FixedTime, CeBaseline };

std::string_view to_string(EstimatorVariant v);
EstimatorVariant parse_variant(std::string_view name);

struct EstimatorState {
  Vector6 theta_hat = Vector6::Zero();
  Vector6 zeta = Vector6::Zero();  // gamma * mu, recomputed at every evaluation

  Vector6 estimate() const { return theta_hat + zeta; }
};

/// u = -Phi (theta_hat + zeta).
inline Vector3 control_torque(const RegressorBundle& bundle, const EstimatorState& est) {
  return -bundle.Phi * est.estimate();
}

/// epsilon = Delta_N (theta_hat + zeta) - Y_N.
inline Vector6 prediction_error(const EstimatorState& est, const ScalarLre& lre) {
  return lre.Delta_N * est.estimate() - lre.Y_N;
}

/// x / ||x||, and 0 at the origin.
inline Vector6 norm_sign(const Vector6& x) {
  const double n = x.norm();
  return n > 0.0 ? Vector6(x / n) : Vector6::Zero();
}

/// lambda1 ||eps||^iota1 sgn(eps) + lambda2 ||eps||^iota2 sgn(eps).
Vector6 power_term(const Vector6& eps, const ControllerGains& gains);

/// -gamma [mu_bar_dot - (Phi + Psi)^T ybar]: the manifold-shaping part.
inline Vector6 ii_learning_term(const RegressorBundle& bundle, const Vector6& mu_bar_dot,
                                double gamma) {
  return -gamma * (mu_bar_dot - (bundle.Phi + bundle.Psi).transpose() * bundle.ybar);
}

/// -gamma (lambda eps + Theta): the prediction-error part.
inline Vector6 drem_learning_term(const Vector6& eps, const Vector6& power, double gamma,
                                  double lambda) {
  return -gamma * (lambda * eps + power);
}

Vector6 theta_hat_derivative(const RegressorBundle& bundle, const Vector6& mu_bar_dot,
                             const Vector6& eps, const ControllerGains& gains,
                             const Vector6& power);

/// Baseline: u = -Phi theta_ce.
inline Vector3 ce_baseline_torque(const RegressorBundle& bundle, const Vector6& theta_ce) {
  return -bundle.Phi * theta_ce;
}

/// Gradient law theta_ce_dot = gamma_ce Phi^T s. With u = -Phi theta_ce the
/// filtered error obeys J s_dot = -Phi (theta_ce - theta) - J (k_p s + xi), and
/// this sign cancels the cross term in s^T J s / 2 + |theta_ce - theta|^2 / (2 gamma_ce).
inline Vector6 ce_baseline_derivative(const RegressorBundle& bundle, const Vector3& s,
                                      double gamma_ce) {
  return gamma_ce * bundle.Phi.transpose() * s;
}

}  // namespace attctl
