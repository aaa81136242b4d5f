#pragma once

// Independent oracles and random-state generators shared by the unit and
// acceptance tests. Nothing here reuses the library's regressor builders.

#include <attctl/attmath.hpp>
#include <attctl/regressor.hpp>
#include <attctl/sim.hpp>

#include <random>

namespace attctl::test {

class RandomStates {
 public:
  explicit RandomStates(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }

  Vector3 vec3(double scale = 1.0) {
    return Vector3(uniform(-scale, scale), uniform(-scale, scale), uniform(-scale, scale));
  }

  Quaternion quat() {
    std::normal_distribution<double> n;
    Vector4 c(n(gen_), n(gen_), n(gen_), n(gen_));
    return Quaternion::fromCoeffs(c.normalized());
  }

  /// Random quaternion with |w| >= floor so the Gibbs vector stays tame.
  Quaternion quat_away_from_equator(double floor = 0.2) {
    for (;;) {
      Quaternion q = quat();
      if (std::abs(q.w) >= floor) return q;
    }
  }

  Signals signals(double k_p = 1.5) {
    const Quaternion qr = quat();
    const Quaternion qe = quat_away_from_equator();
    const Quaternion q = quat_multiply(qr, qe);
    const double lam = (qe.w > 0 ? 1.0 : -1.0) * 0.1;
    return make_signals<double>(q, vec3(), qr, vec3(), vec3(), vec3(), vec3(), lam, k_p);
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

/// Phi written straight from the tracking-error dynamics:
/// -S(w)L[w] + L[S(w)Omega - Omega_bar + k_p s + xi + Lambda q_ev_dot].
inline Matrix36 phi_direct(const Signals& sig) {
  const auto& e = sig.err;
  const Vector3 qev_dot = 0.5 * (e.q_e.v.cross(e.omega_e) + e.q_e.w * e.omega_e);
  const Vector3 arg = sig.omega.cross(sig.Omega) - sig.Omega_bar + sig.k_p * e.s +
                      e.q_e.v / e.q_e.w + e.lambda_slope * qev_dot;
  return -skew(sig.omega) * lmap(sig.omega) + lmap(arg);
}

/// Row i of Phi2 as a function of the full rate argument.
inline Eigen::Matrix<double, 1, 6> phi2_row(int i, const Vector3& x, const Signals& sig) {
  const Vector3& Om = sig.Omega;
  const Matrix3& Q = sig.Q;
  const Matrix3 sx = skew(x);
  const Matrix36 m = -sx * lmap(x) + lmap(Vector3(sx * Om)) + sig.err.lambda_slope * lmap(Vector3(Q * x));
  return m.row(i);
}

/// Nominal Case 1/2 scenario with the default gains.
inline Scenario nominal(int which, double duration = 40.0) {
  Scenario sc;
  sc.label = which == 1 ? "nominal_case1" : "nominal_case2";
  sc.initial.q = case_attitude(which);
  sc.duration = duration;
  return sc;
}

inline Scenario perturbed(EstimatorVariant v, std::uint64_t seed = 1) {
  Scenario sc = nominal(2, 100.0);
  sc.label = v == EstimatorVariant::CeBaseline ? "perturbed_ce_baseline" : "perturbed_case2";
  sc.variant = v;
  sc.disturbance = true;
  sc.noise = NoiseConfig{0.1, 1e-3, seed};
  return sc;
}

}  // namespace attctl::test
