#include <attctl/controller.hpp>

#include <cmath>
#include <string>

namespace attctl {

void ControllerGains::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string("gain '") + name + "' must be positive");
  };
  positive(aef.alpha, "alpha");
  positive(aef.beta, "beta");
  positive(kappa, "kappa");
  positive(f_m, "f_m");
  positive(gamma, "gamma");
  if (!(lambda >= 0.0)) throw ConfigError("gain 'lambda' must be >= 0");
  positive(drem.a, "a");
  positive(drem.b, "b");
  positive(drem.k_I, "k_I");
  positive(drem.k_N, "k_N");
  positive(gamma_ce, "gamma_ce");
  if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("lambda1 and lambda2 must be >= 0");
  if (!(iota1 > 0.0 && iota1 < 1.0)) throw ConfigError("iota1 must lie in (0, 1)");
  if (!(iota2 > 1.0)) throw ConfigError("iota2 must exceed 1");
}

std::string_view to_string(EstimatorVariant v) {
  switch (v) {
    case EstimatorVariant::Exponential: return "exponential";
    case EstimatorVariant::FiniteTime: return "finite-time";
    case EstimatorVariant::FixedTime: return "fixed-time";
    case EstimatorVariant::CeBaseline: return "ce-baseline";
  }
  return "unknown";
}

EstimatorVariant parse_variant(std::string_view name) {
  if (name == "exponential") return EstimatorVariant::Exponential;
  if (name == "finite-time") return EstimatorVariant::FiniteTime;
  if (name == "fixed-time") return EstimatorVariant::FixedTime;
  if (name == "ce-baseline") return EstimatorVariant::CeBaseline;
  throw ConfigError("unknown estimator variant '" + std::string(name) + "'");
}

Vector6 power_term(const Vector6& eps, const ControllerGains& gains) {
  const double n = eps.norm();
  if (n == 0.0) return Vector6::Zero();
  const double scale =
      gains.lambda1 * std::pow(n, gains.iota1) + gains.lambda2 * std::pow(n, gains.iota2);
  return scale * (eps / n);
}

Vector6 theta_hat_derivative(const RegressorBundle& bundle, const Vector6& mu_bar_dot,
                             const Vector6& eps, const ControllerGains& gains,
                             const Vector6& power) {
  return ii_learning_term(bundle, mu_bar_dot, gains.gamma) +
         drem_learning_term(eps, power, gains.gamma, gains.lambda);
}

}  // namespace attctl
