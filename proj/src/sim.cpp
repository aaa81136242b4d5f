#include <attctl/sim.hpp>

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace attctl {

namespace {

constexpr std::array<std::pair<int, int>, 21> kUpper = [] {
  std::array<std::pair<int, int>, 21> idx{};
  int k = 0;
  for (int i = 0; i < 6; ++i)
    for (int j = i; j < 6; ++j) idx[k++] = {i, j};
  return idx;
}();

Vector3 seg3(const AugmentedState& x, int at) { return x.segment<3>(at); }

Vector3 disturbance(const Scenario& sc, double t) {
  return sc.disturbance ? disturbance_at(t) : Vector3::Zero();
}
Vector6 seg6(const AugmentedState& x, int at) { return x.segment<6>(at); }

Quaternion quat_at(const AugmentedState& x, int at) {
  return Quaternion::fromCoeffs(x.segment<4>(at));
}

double spectral_norm(const Matrix36& m) {
  // Largest eigenvalue of the 3 x 3 Gram matrix.
  Eigen::SelfAdjointEigenSolver<Matrix3> eig(m * m.transpose(), Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues()(2)));
}

}  // namespace

AugmentedState pack(const ClosedLoopState& s) {
  using namespace layout;
  AugmentedState x;
  x.segment<4>(kQ) = s.body.q.coeffs();
  x.segment<3>(kOmega) = s.body.omega;
  x.segment<4>(kQr) = s.q_r.coeffs();
  x.segment<3>(kOmegaHat) = s.omega_hat;
  x.segment<6>(kThetaHat) = s.theta_hat;
  x.segment<3>(kOmegaF) = s.drem.omega_f;
  x.segment<18>(kWf) = Eigen::Map<const Eigen::Matrix<double, 18, 1>>(s.drem.W_f.data());
  x.segment<3>(kUf) = s.drem.u_f;
  x.segment<6>(kM) = s.drem.M;
  for (std::size_t k = 0; k < kUpper.size(); ++k)
    x(kN + static_cast<int>(k)) = s.drem.N(kUpper[k].first, kUpper[k].second);
  x.segment<6>(kChi) = s.drem.chi;
  x(kXi) = s.drem.Xi;
  return x;
}

ClosedLoopState unpack(const AugmentedState& x) {
  using namespace layout;
  ClosedLoopState s;
  s.body.q = quat_at(x, kQ);
  s.body.omega = seg3(x, kOmega);
  s.q_r = quat_at(x, kQr);
  s.omega_hat = seg3(x, kOmegaHat);
  s.theta_hat = seg6(x, kThetaHat);
  s.drem.omega_f = seg3(x, kOmegaF);
  s.drem.W_f = Eigen::Map<const Matrix36>(x.segment<18>(kWf).eval().data());
  s.drem.u_f = seg3(x, kUf);
  s.drem.M = seg6(x, kM);
  for (std::size_t k = 0; k < kUpper.size(); ++k) {
    const auto [i, j] = kUpper[k];
    s.drem.N(i, j) = s.drem.N(j, i) = x(kN + static_cast<int>(k));
  }
  s.drem.chi = seg6(x, kChi);
  s.drem.Xi = x(kXi);
  return s;
}

void project(AugmentedState& x) {
  x.segment<4>(layout::kQ).normalize();
  x.segment<4>(layout::kQr).normalize();
}

Quaternion case_attitude(int which) {
  const Vector3 q0(0.33, -0.3, -0.62);
  const double w = std::sqrt(1.0 - q0.squaredNorm());
  if (which == 1) return {q0, w};
  if (which == 2) return {-q0, -w};
  throw ConfigError("case must be 1 or 2");
}

void Scenario::validate() const {
  if (!(step > 0.0)) throw ConfigError("step must be positive");
  if (duration < 0.0 || (duration > 0.0 && duration < step))
    throw ConfigError("duration must be zero or at least one step");
  if (!initial.q.coeffs().allFinite() || std::abs(initial.q.norm() - 1.0) > 1e-6)
    throw ConfigError("initial attitude must be a unit quaternion");
  gains.validate();
  if (!theta_true.positive_definite()) throw ConfigError("theta_true is not positive definite");
  if (noise && (noise->cone_half_angle_deg < 0.0 || noise->gyro_std < 0.0))
    throw ConfigError("noise levels must be nonnegative");
  // q_r(0) is the identity, so q_e(0) = q(0).
  if (std::abs(initial.q.w) <= kPermissibleQe4)
    throw ConfigError("initial attitude error is outside the permissible set (|q_e4(0)| <= 1e-6)");
}

std::size_t Scenario::step_count() const {
  return static_cast<std::size_t>(std::llround(duration / step));
}

ClosedLoop::ClosedLoop(Scenario scenario, const NoiseSample& noise0)
    : scenario_(std::move(scenario)), body_(scenario_.theta_true) {
  scenario_.validate();
  const BodyState measured0 = apply_noise(
      BodyState{scenario_.initial.q.normalized(), scenario_.initial.omega}, noise0);
  lambda_slope_ = initial_slope(measured0.q.w, scenario_.gains.aef.beta);
}

AugmentedState ClosedLoop::initial_state(const NoiseSample& noise0) const {
  const Scenario& sc = scenario_;
  ClosedLoopState s;
  s.body = sc.initial;
  s.body.q = s.body.q.normalized();
  s.q_r = Quaternion::identity();

  const BodyState measured = apply_noise(s.body, noise0);
  s.omega_hat = measured.omega;
  s.drem = DremState::initial(measured.omega, sc.gains.drem.a, sc.chi0);
  s.drem.M = sc.M0;

  if (sc.variant == EstimatorVariant::CeBaseline) {
    s.theta_hat = sc.estimate0;
  } else {
    // The configured vector is theta_hat(0) + zeta(0).
    const ReferenceState ref = with_attitude(s.q_r, sc.reference.at(0.0));
    const Signals sig = make_signals(measured, ref, s.omega_hat, lambda_slope_, sc.gains.k_p());
    s.theta_hat = sc.estimate0 - sc.gains.gamma * mu(sig);
  }
  return pack(s);
}

Evaluation ClosedLoop::evaluate(const AugmentedState& x, double t,
                                const NoiseSample& noise) const {
  const Scenario& sc = scenario_;
  const ControllerGains& g = sc.gains;
  Evaluation e;
  e.state = unpack(x);
  ClosedLoopState& st = e.state;
  st.body.q = st.body.q.normalized();
  st.q_r = st.q_r.normalized();

  e.ref = with_attitude(st.q_r, sc.reference.at(t));
  e.measured = apply_noise(st.body, noise);

  try {
    const Vector3 omega_hat = sc.exact_rate_substitution ? e.measured.omega : st.omega_hat;
    e.signals = make_signals(e.measured, e.ref, omega_hat, lambda_slope_, g.k_p());
  } catch (const UnwindingError& err) {
    throw UnwindingError(err.what(), t, err.qe4());
  }
  e.bundle = build_regressors(e.signals);
  e.lre = extend(st.drem, mix(st.drem, g.drem.k_I), g.drem.k_N, sc.chi0);

  Vector6 theta_rate;
  if (sc.variant == EstimatorVariant::CeBaseline) {
    e.est.theta_hat = st.theta_hat;
    e.u = ce_baseline_torque(e.bundle, st.theta_hat);
    e.eps = prediction_error(e.est, e.lre);
    theta_rate = ce_baseline_derivative(e.bundle, e.signals.err.s, g.gamma_ce);
  } else {
    e.est.theta_hat = st.theta_hat;
    e.est.zeta = g.gamma * mu(e.signals);
    e.u = control_torque(e.bundle, e.est);
    e.eps = prediction_error(e.est, e.lre);
    if (sc.variant == EstimatorVariant::FiniteTime || sc.variant == EstimatorVariant::FixedTime)
      e.power = power_term(e.eps, g);
    if (sc.exact_rate_substitution) {
      // omega_hat tracks omega, so its rate is the body acceleration (simulator only)
      const Vector3 wdot = plant_derivative(st.body, e.u, disturbance(sc, t), body_).omega_dot;
      e.mu_bar_dot = mu_bar_dot(e.signals, e.bundle.ybar, g.k_f(), wdot);
    } else {
      e.mu_bar_dot = mu_bar_dot(e.signals, e.bundle.ybar, g.k_f());
    }
    e.ii_term = ii_learning_term(e.bundle, e.mu_bar_dot, g.gamma);
    e.drem_term = drem_learning_term(e.eps, e.power, g.gamma, g.lambda);
    theta_rate = e.ii_term + e.drem_term;
  }

  e.u_d = disturbance(sc, t);
  const BodyStateRate plant = plant_derivative(st.body, e.u, e.u_d, body_);
  const Vector3& w_meas = e.measured.omega;

  ClosedLoopState rate;
  rate.body.q = Quaternion::fromCoeffs(plant.q_dot);
  rate.body.omega = plant.omega_dot;
  rate.q_r = Quaternion::fromCoeffs(quat_rate(st.q_r, e.ref.omega_r));
  rate.omega_hat = omega_hat_derivative(st.omega_hat, e.bundle.ybar, w_meas, g.k_f());
  rate.theta_hat = theta_rate;
  if (sc.variant == EstimatorVariant::CeBaseline) {
    // The baseline has no regressor-extension bank; its slots stay at their initial values.
    rate.drem = DremRate{};
    rate.drem.Xi = 0.0;
  } else {
    rate.drem = drem_derivative(st.drem, w_meas, e.u, g.drem, e.lre.Delta, e.lre.Y);
    e.W_a = filtered_regressor(st.drem, rate.drem.omega_f);
  }
  e.derivative = pack(rate);

  if (!e.derivative.allFinite()) {
    std::ostringstream msg;
    msg << "non-finite closed-loop derivative at t=" << t << "\nstate: " << x.transpose()
        << "\nderivative: " << e.derivative.transpose();
    throw NonFiniteError(msg.str(), t);
  }
  return e;
}

std::vector<double> TrajectoryLog::channel(double LogSample::* member) const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.*member);
  return out;
}

namespace {

LogSample make_sample(const ClosedLoop& loop, const Evaluation& e, double t) {
  const Scenario& sc = loop.scenario();
  LogSample s;
  s.t = t;
  const TrackingError te = make_tracking_error(e.state.body, e.ref, loop.lambda_slope());
  s.q_e = te.q_e.coeffs();
  s.omega_e = te.omega_e;
  s.q_e_meas = e.signals.err.q_e.coeffs();
  s.omega_e_meas = e.signals.err.omega_e;
  s.s = te.s;
  s.u = e.u;
  s.estimate = e.est.estimate();
  s.theta_err = s.estimate - sc.theta_true.theta;
  s.eps = e.eps;
  s.Delta = e.lre.Delta;
  s.Delta_N = e.lre.Delta_N;
  s.Xi = e.state.drem.Xi;
  s.V_q = barrier_value(te.q_e, sc.gains.aef.alpha);
  s.phi_theta_err = (e.bundle.Phi * s.theta_err).norm();
  s.omega_tilde = e.state.omega_hat - e.state.body.omega;
  s.psi_norm = spectral_norm(e.bundle.Psi);
  s.ii_term = e.ii_term;
  s.drem_term = e.drem_term;
  return s;
}

}  // namespace

TrajectoryLog run_scenario(const Scenario& scenario, const StepObserver& observer) {
  scenario.validate();
  TrajectoryLog log;
  log.label = scenario.label;
  log.variant = scenario.variant;
  log.seed = scenario.noise ? scenario.noise->seed : scenario.seed;

  std::optional<NoiseSource> rng;
  if (scenario.noise) rng.emplace(scenario.noise->seed);
  auto next_noise = [&]() { return rng ? rng->draw(*scenario.noise) : NoiseSample{}; };

  // Lambda is frozen from the measured error at t = 0.
  NoiseSample noise = next_noise();
  const ClosedLoop loop(scenario, noise);
  log.lambda_slope = loop.lambda_slope();

  AugmentedState x = loop.initial_state(noise);
  const std::size_t steps = scenario.step_count();
  const double h = scenario.step;
  log.samples.reserve(steps + 1);

  auto record = [&](double t) {
    const Evaluation e = loop.evaluate(x, t, noise);
    log.samples.push_back(make_sample(loop, e, t));
    if (observer) observer(StepView{t, x, e});
  };
  record(0.0);

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * h;
    x = rk4_step(x, t, h, [&](const AugmentedState& s, double tt) {
      return loop.derivative(s, tt, noise);
    });
    project(x);
    const double t_next = static_cast<double>(k + 1) * h;
    if (!x.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite state at t=" << t_next << "\nstate: " << x.transpose();
      throw NonFiniteError(msg.str(), t_next);
    }
    const double qe4 =
        quat_error(quat_at(x, layout::kQ), quat_at(x, layout::kQr)).w;
    if (std::abs(qe4) < kPermissibleQe4)
      throw UnwindingError("unwinding guard breached: |q_e4| below 1e-6", t_next, qe4);
    noise = next_noise();
    record(t_next);
  }
  return log;
}

void write_trajectory_csv(std::ostream& os, const TrajectoryLog& log,
                          const std::vector<ExtraColumn>& extra) {
  for (const auto& col : extra)
    if (col.second.size() != log.samples.size())
      throw std::invalid_argument("extra column '" + col.first + "' has wrong length");
  std::vector<std::string> header{"t[s]"};
  auto add = [&](const char* stem, int n, const char* unit) {
    for (int i = 1; i <= n; ++i) header.push_back(std::string(stem) + std::to_string(i) + unit);
  };
  add("q_e", 4, "[-]");
  add("omega_e", 3, "[rad/s]");
  add("q_e_meas", 4, "[-]");
  add("omega_e_meas", 3, "[rad/s]");
  add("s", 3, "[rad/s]");
  add("u", 3, "[N*m]");
  add("theta_est", 6, "[kg*m^2]");
  add("theta_err", 6, "[kg*m^2]");
  add("eps", 6, "[kg*m^2]");
  for (const char* name : {"Delta[-]", "Delta_N[-]", "Xi[-]", "V_q[-]", "phi_theta_err[N*m]"})
    header.emplace_back(name);
  add("omega_tilde", 3, "[rad/s]");
  header.emplace_back("psi_norm[rad/s]");
  for (const auto& col : extra) header.push_back(col.first);

  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';

  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    os << buf;
  };
  auto put_vec = [&](const auto& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) put(v(i));
  };
  for (std::size_t k = 0; k < log.samples.size(); ++k) {
    const LogSample& s = log.samples[k];
    std::snprintf(buf, sizeof buf, "%.17g", s.t);
    os << buf;
    put_vec(s.q_e);
    put_vec(s.omega_e);
    put_vec(s.q_e_meas);
    put_vec(s.omega_e_meas);
    put_vec(s.s);
    put_vec(s.u);
    put_vec(s.estimate);
    put_vec(s.theta_err);
    put_vec(s.eps);
    put(s.Delta);
    put(s.Delta_N);
    put(s.Xi);
    put(s.V_q);
    put(s.phi_theta_err);
    put_vec(s.omega_tilde);
    put(s.psi_norm);
    for (const auto& col : extra) put(col.second.at(k));
    os << '\n';
  }
}

}  // namespace attctl
