#pragma once

// Regressor filtering, Kreisselmeier extension, determinant mixing, and the
// LTV extension that turns an interval-exciting scalar regressor into one
// with a permanent positive floor.

#include <attctl/attmath.hpp>

#include <optional>
#include <span>

namespace attctl {

struct DremGains {
  double a = 5.0;     // H(s) = 1/(s + a)
  double b = 0.5;     // K(s) = 1/(s + b)
  double k_I = 1e9;   // mixing amplification
  double k_N = 8.0;   // extension weight
};

struct DremState {
  Vector3 omega_f = Vector3::Zero();
  Matrix36 W_f = Matrix36::Zero();
  Vector3 u_f = Vector3::Zero();
  Vector6 M = Vector6::Zero();
  Matrix6 N = Matrix6::Zero();
  Vector6 chi = Vector6::Zero();
  double Xi = 1.0;

  /// omega_f(0) = omega(0)/a, every other filter at rest, Xi(0) = 1.
  static DremState initial(const Vector3& omega0, double a, const Vector6& chi0 = Vector6::Zero());
};

/// Same layout as DremState, holding time derivatives.
using DremRate = DremState;

struct ScalarLre {
  Vector6 Y = Vector6::Zero();
  double Delta = 0.0;
  Vector6 Y_N = Vector6::Zero();
  double Delta_N = 0.0;
};

/// W = -S(omega) L[omega]; J omega_dot = W theta + u.
Matrix36 gyroscopic_regressor(const Vector3& omega);

/// omega_f rate, the measurable stand-in for the filtered acceleration.
inline Vector3 omega_f_rate(const DremState& state, const Vector3& omega, double a) {
  return omega - a * state.omega_f;
}

/// W_a = L[omega_f_dot] - W_f, so that u_f = W_a theta.
Matrix36 filtered_regressor(const DremState& state, const Vector3& omega_f_dot);

DremRate drem_derivative(const DremState& state, const Vector3& omega, const Vector3& u,
                         const DremGains& gains, double Delta, const Vector6& Y);

/// Determinant via LU with partial pivoting.
double determinant(const Matrix6& n);
/// Adjugate via cofactors (5 x 5 minors, each by LU).
Matrix6 adjugate(const Matrix6& n);

/// Y = k_I adj(N) M, Delta = k_I det(N). Y_N and Delta_N are left zero.
ScalarLre mix(const DremState& state, double k_I);

/// Y_i = k_I det(N with column i replaced by M).
Vector6 mix_cramer(const DremState& state, double k_I);

/// Fills Y_N = Y + k_N (chi - Xi chi0), Delta_N = Delta + k_N (1 - Xi).
ScalarLre extend(const DremState& state, ScalarLre lre, double k_N, const Vector6& chi0);

struct PeFloor {
  double T_s;   // first time after which Delta_N stays above the threshold
  double hbar;  // infimum of Delta_N from T_s on
};

inline constexpr double kDefaultPeThreshold = 1e-6;

/// nullopt when Delta_N never settles above the threshold.
std::optional<PeFloor> pe_floor_monitor(std::span<const double> t,
                                        std::span<const double> delta_n,
                                        double threshold = kDefaultPeThreshold);

}  // namespace attctl
