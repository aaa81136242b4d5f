#include <attctl/drem.hpp>

#include <algorithm>
#include <limits>

namespace attctl {

DremState DremState::initial(const Vector3& omega0, double a, const Vector6& chi0) {
  DremState s;
  s.omega_f = omega0 / a;
  s.chi = chi0;
  return s;
}

Matrix36 gyroscopic_regressor(const Vector3& omega) { return -skew(omega) * lmap(omega); }

Matrix36 filtered_regressor(const DremState& state, const Vector3& omega_f_dot) {
  return lmap(omega_f_dot) - state.W_f;
}

DremRate drem_derivative(const DremState& state, const Vector3& omega, const Vector3& u,
                         const DremGains& gains, double Delta, const Vector6& Y) {
  const double a = gains.a;
  const double b = gains.b;
  DremRate d;
  d.omega_f = omega_f_rate(state, omega, a);
  d.W_f = gyroscopic_regressor(omega) - a * state.W_f;
  d.u_f = u - a * state.u_f;
  const Matrix36 w_a = filtered_regressor(state, d.omega_f);
  d.M = -b * state.M + w_a.transpose() * state.u_f;
  d.N = -b * state.N + w_a.transpose() * w_a;
  d.chi = Delta * (Y - Delta * state.chi);
  d.Xi = -Delta * Delta * state.Xi;
  return d;
}

double determinant(const Matrix6& n) { return Eigen::PartialPivLU<Matrix6>(n).determinant(); }

Matrix6 adjugate(const Matrix6& n) {
  using Matrix5 = Eigen::Matrix<double, 5, 5>;
  Matrix6 adj;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      Matrix5 minor;
      for (int i = 0, mi = 0; i < 6; ++i) {
        if (i == r) continue;
        for (int j = 0, mj = 0; j < 6; ++j) {
          if (j == c) continue;
          minor(mi, mj++) = n(i, j);
        }
        ++mi;
      }
      const double cof = Eigen::PartialPivLU<Matrix5>(minor).determinant();
      // adj = transpose of the cofactor matrix
      adj(c, r) = ((r + c) % 2 == 0) ? cof : -cof;
    }
  }
  return adj;
}

ScalarLre mix(const DremState& state, double k_I) {
  ScalarLre lre;
  lre.Y = k_I * (adjugate(state.N) * state.M);
  lre.Delta = k_I * determinant(state.N);
  return lre;
}

Vector6 mix_cramer(const DremState& state, double k_I) {
  Vector6 y;
  for (int i = 0; i < 6; ++i) {
    Matrix6 replaced = state.N;
    replaced.col(i) = state.M;
    y(i) = k_I * determinant(replaced);
  }
  return y;
}

ScalarLre extend(const DremState& state, ScalarLre lre, double k_N, const Vector6& chi0) {
  lre.Y_N = lre.Y + k_N * (state.chi - state.Xi * chi0);
  lre.Delta_N = lre.Delta + k_N * (1.0 - state.Xi);
  return lre;
}

std::optional<PeFloor> pe_floor_monitor(std::span<const double> t,
                                        std::span<const double> delta_n, double threshold) {
  const std::size_t n = std::min(t.size(), delta_n.size());
  if (n == 0) return std::nullopt;
  // Last sample at or below the threshold; the floor starts right after it.
  std::size_t start = 0;
  for (std::size_t k = n; k-- > 0;) {
    if (!(delta_n[k] > threshold)) {
      start = k + 1;
      break;
    }
  }
  if (start >= n) return std::nullopt;
  double inf = std::numeric_limits<double>::infinity();
  for (std::size_t k = start; k < n; ++k) inf = std::min(inf, delta_n[k]);
  return PeFloor{t[start], inf};
}

}  // namespace attctl
