#pragma once

// Closed-loop simulation: plant, reference attitude, controller and filters
// integrated together as one 78-dimensional ODE with fixed-step RK4.

#include <attctl/controller.hpp>
#include <attctl/drem.hpp>
#include <attctl/plant.hpp>
#include <attctl/regressor.hpp>

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace attctl {

/// Packed layout of the closed-loop state.
namespace layout {
inline constexpr int kQ = 0;         // 4
inline constexpr int kOmega = 4;     // 3
inline constexpr int kQr = 7;        // 4
inline constexpr int kOmegaHat = 11; // 3
inline constexpr int kThetaHat = 14; // 6
inline constexpr int kOmegaF = 20;   // 3
inline constexpr int kWf = 23;       // 18, column-major
inline constexpr int kUf = 41;       // 3
inline constexpr int kM = 44;        // 6
inline constexpr int kN = 50;        // 21, upper triangle row by row
inline constexpr int kChi = 71;      // 6
inline constexpr int kXi = 77;       // 1
inline constexpr int kSize = 78;
}  // namespace layout

using AugmentedState = Eigen::Matrix<double, layout::kSize, 1>;

struct ClosedLoopState {
  BodyState body;
  Quaternion q_r;
  Vector3 omega_hat = Vector3::Zero();
  Vector6 theta_hat = Vector6::Zero();  // theta_ce for the baseline
  DremState drem;
};

AugmentedState pack(const ClosedLoopState& s);
ClosedLoopState unpack(const AugmentedState& x);

/// Classical four-stage Runge-Kutta update, no projection.
template <typename State, typename Derivative>
State rk4_step(const State& x, double t, double h, Derivative&& f) {
  const State k1 = f(x, t);
  const State k2 = f(State(x + 0.5 * h * k1), t + 0.5 * h);
  const State k3 = f(State(x + 0.5 * h * k2), t + 0.5 * h);
  const State k4 = f(State(x + h * k3), t + h);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Renormalizes both quaternions in place.
void project(AugmentedState& x);

struct Scenario {
  std::string label = "scenario";
  double duration = 40.0;
  double step = 0.01;
  BodyState initial;
  ControllerGains gains;
  InertiaParams theta_true{(Vector6() << 20, 17, 15, 1.4, 0.9, 1.2).finished()};
  std::optional<NoiseConfig> noise;
  bool disturbance = false;
  EstimatorVariant variant = EstimatorVariant::Exponential;
  Vector6 estimate0 = (Vector6() << 10, 30, 8, 0, 0, 0).finished();  // theta_hat(0) + zeta(0)
  Vector6 chi0 = Vector6::Zero();
  Vector6 M0 = Vector6::Zero();  // Kreisselmeier memory at t = 0
  ReferenceProfile reference;
  std::uint64_t seed = 1;
  // Ablation: drive Phi2hat and mu2 with omega itself instead of the filter.
  bool exact_rate_substitution = false;

  /// Throws ConfigError when a precondition fails.
  void validate() const;
  std::size_t step_count() const;
};

/// Case 1 / Case 2 initial attitudes: q_v(0) = +-q0, q_4(0) = +-sqrt(1 - |q0|^2).
Quaternion case_attitude(int which);

/// Everything computed in one evaluation of the closed-loop vector field.
struct Evaluation {
  ClosedLoopState state;
  BodyState measured;
  ReferenceState ref;
  Signals signals;
  RegressorBundle bundle;
  ScalarLre lre;
  EstimatorState est;
  Vector6 mu_bar_dot = Vector6::Zero();
  Vector6 eps = Vector6::Zero();
  Vector6 power = Vector6::Zero();
  Vector6 ii_term = Vector6::Zero();
  Vector6 drem_term = Vector6::Zero();
  Vector3 u = Vector3::Zero();
  Vector3 u_d = Vector3::Zero();
  Matrix36 W_a = Matrix36::Zero();
  AugmentedState derivative = AugmentedState::Zero();
};

class ClosedLoop {
 public:
  /// noise0 is the measurement perturbation at t = 0; it fixes Lambda.
  explicit ClosedLoop(Scenario scenario, const NoiseSample& noise0 = {});

  const Scenario& scenario() const { return scenario_; }
  const RigidBody& body() const { return body_; }
  double lambda_slope() const { return lambda_slope_; }

  /// State at t = 0. noise0 is the measurement perturbation held over step 0.
  AugmentedState initial_state(const NoiseSample& noise0) const;

  Evaluation evaluate(const AugmentedState& x, double t, const NoiseSample& noise) const;
  AugmentedState derivative(const AugmentedState& x, double t, const NoiseSample& noise) const {
    return evaluate(x, t, noise).derivative;
  }

 private:
  Scenario scenario_;
  RigidBody body_;
  double lambda_slope_ = 0.0;
};

struct LogSample {
  double t = 0.0;
  Vector4 q_e = Vector4::Zero();  // true tracking error
  Vector3 omega_e = Vector3::Zero();
  Vector4 q_e_meas = Vector4::Zero();  // as seen through the sensors
  Vector3 omega_e_meas = Vector3::Zero();
  Vector3 s = Vector3::Zero();
  Vector3 u = Vector3::Zero();
  Vector6 estimate = Vector6::Zero();
  Vector6 theta_err = Vector6::Zero();
  Vector6 eps = Vector6::Zero();
  double Delta = 0.0;
  double Delta_N = 0.0;
  double Xi = 1.0;
  double V_q = 0.0;
  double phi_theta_err = 0.0;  // ||Phi theta_err||
  Vector3 omega_tilde = Vector3::Zero();
  double psi_norm = 0.0;       // spectral norm of Psi
  Vector6 ii_term = Vector6::Zero();
  Vector6 drem_term = Vector6::Zero();
};

struct TrajectoryLog {
  std::string label;
  EstimatorVariant variant = EstimatorVariant::Exponential;
  double lambda_slope = 0.0;
  std::uint64_t seed = 0;
  std::vector<LogSample> samples;

  std::vector<double> channel(double LogSample::* member) const;
};

struct StepView {
  double t;
  const AugmentedState& state;
  const Evaluation& eval;
};
using StepObserver = std::function<void(const StepView&)>;

/// Runs the scenario to completion. Throws UnwindingError when |q_e4| drops
/// below 1e-6 and NonFiniteError on NaN/Inf.
TrajectoryLog run_scenario(const Scenario& scenario, const StepObserver& observer = {});

/// One header row with units, one row per sample, 17 significant digits.
/// Extra columns must have one entry per sample.
using ExtraColumn = std::pair<std::string, std::vector<double>>;
void write_trajectory_csv(std::ostream& os, const TrajectoryLog& log,
                          const std::vector<ExtraColumn>& extra = {});

}  // namespace attctl
