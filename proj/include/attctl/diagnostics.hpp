#pragma once

// Simulation-side analysis: dynamic scaling, the composite Lyapunov function,
// envelope fits, settling-time bounds and Table-I style metrics. Everything
// here reads a finished log and the true inertia; nothing feeds back into
// the controller.

#include <attctl/controller.hpp>
#include <attctl/sim.hpp>

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace attctl {

struct ScalingParams {
  double rho = 1.0;  // slack in eta = 2 (1/kappa + rho)
  double r0 = 0.1;
};

/// f(r) = f_m tanh(r) + 1.
double scaling_function(double r, double f_m);

/// r_dot = gamma f sqrt(ln f) / f'(r) ||Psi||^2. Throws std::domain_error for r <= 0.
double scaling_derivative(double r, double psi_norm, double gamma, double f_m);

/// R = sqrt(J_m) e^{-1/(2 J_m^2)} e^{sqrt(ln f)/J_m}.
double scaling_factor(double f_r, double J_m);

struct ScalingDiagnostics {
  double r = 0.0;  // +inf once f has saturated at f_m + 1
  double R = 0.0;
  double f_r = 1.0;
  Vector6 z = Vector6::Zero();
};

struct LyapunovSample {
  double t = 0.0;
  double V_q = 0.0;
  double V_s = 0.0;
  double V_w = 0.0;
  double V_z = 0.0;
  double V_total = 0.0;
  double Z_norm2 = 0.0;  // |q_ev|^2 + |s|^2 + |omega_tilde|^2 + |z|^2
  ScalingDiagnostics scaling;
};

double lyapunov_eta(const ControllerGains& gains, const ScalingParams& params);

/// Integrates the scaling dynamics over the logged ||Psi|| with the trapezoid
/// rule on rho = sqrt(ln f(r)), for which rho_dot = gamma ||Psi||^2 / 2 exactly,
/// and evaluates V at every sample.
std::vector<LyapunovSample> lyapunov_series(const TrajectoryLog& log,
                                            const InertiaParams& theta_true,
                                            const ControllerGains& gains,
                                            const ScalingParams& params = {});

/// Largest one-step increase V(t_{k+1}) - V(t_k); <= 0 for a non-increasing series.
double max_step_increase(std::span<const LyapunovSample> series);

struct SandwichCheck {
  double lower = 0.0;     // varsigma_lower
  double upper = 0.0;     // varsigma_upper
  double min_slack = 0.0; // min over samples of both inequality margins, relative
  bool holds = false;
};

/// varsigma_lower |Z|^2 <= V <= varsigma_upper |Z|^2 with delta = min |q_e4|.
SandwichCheck sandwich_check(std::span<const LyapunovSample> series, const TrajectoryLog& log,
                             const ControllerGains& gains, const ScalingParams& params = {});

struct EnvelopeFit {
  double rate = 0.0;
  double r_squared = 0.0;
  std::size_t samples = 0;
};

/// Least-squares slope of ln V on [t0, t1]. Samples with V < 1e-300 are dropped.
/// Throws std::invalid_argument with fewer than 2 usable samples.
EnvelopeFit exponential_envelope_fit(std::span<const double> t, std::span<const double> V,
                                     double t0, double t1);

struct SettlingBounds {
  std::optional<double> finite;  // measured from T_s
  std::optional<double> fixed;   // absolute time, includes T_s
  double c1 = 0.0;
  double c2 = 0.0;
};

/// Both bounds; a bound is empty when its constants vanish (lambda1 = 0, or lambda2 = 0
/// for the fixed-time one) or hbar <= 0.
SettlingBounds settling_bounds(const ControllerGains& gains, double hbar, double V_z_at_Ts,
                               double R_m, double T_s);

/// First time after which ||theta_err|| stays below threshold.
std::optional<double> crossing_time(const TrajectoryLog& log, double threshold);

struct Metrics {
  std::string label;
  std::uint64_t seed = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  double rms_qev = 0.0;        // measured feedback error, max over components
  double rms_omega_e = 0.0;
  double rms_theta_err = 0.0;
  double rms_qev_true = 0.0;   // true state
  double rms_omega_e_true = 0.0;
  double min_abs_qe4 = 0.0;    // whole run
  std::optional<double> T_s_detected;
  std::optional<double> hbar;
  double sync_ratio_spread = 0.0;
};

/// Throws std::invalid_argument if no sample lies in [t_start, t_end].
Metrics metrics(const TrajectoryLog& log, double t_start, double t_end, double eps_pe = 1e-6);

/// max over pairs of (max - min) / |mean| of theta_err_i / theta_err_j on the window,
/// components below 1e-6 in magnitude excluded.
double sync_ratio_spread(const TrajectoryLog& log, double t_start, double t_end);

void write_metrics_csv(std::ostream& os, std::span<const Metrics> rows);
void write_metrics_report(std::ostream& os, std::span<const Metrics> rows);

}  // namespace attctl
