#include "commands.hpp"

#include <attctl/drem.hpp>
#include <attctl/errstate.hpp>
#include <attctl/regressor.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

namespace attctl::cli {

namespace {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  Vector3 vec3() { return Vector3(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)); }
  Quaternion quat(double min_w = 0.0) {
    std::normal_distribution<double> n;
    for (;;) {
      const Vector4 c(n(gen_), n(gen_), n(gen_), n(gen_));
      const Quaternion q = Quaternion::fromCoeffs(c.normalized());
      if (std::abs(q.w) >= min_w) return q;
    }
  }
  Signals signals() {
    const Quaternion qr = quat(), qe = quat(0.2);
    const double lam = (qe.w > 0 ? 1.0 : -1.0) * 0.1;
    return make_signals<double>(quat_multiply(qr, qe), vec3(), qr, vec3(), vec3(), vec3(), vec3(),
                                lam, 1.5);
  }

 private:
  std::mt19937_64 gen_;
};

// Phi from the tracking-error dynamics, without the Phi1 + Phi2 split.
Matrix36 phi_direct(const Signals& sig) {
  const auto& e = sig.err;
  const Vector3 qev_dot = sig.Q * e.omega_e;
  const Vector3 arg = sig.omega.cross(sig.Omega) - sig.Omega_bar + sig.k_p * e.s + sig.xi +
                      e.lambda_slope * qev_dot;
  return -skew(sig.omega) * lmap(sig.omega) + lmap(arg);
}

// mu with the quadratic coefficient of mu2 changed from 1/2 to 0.45.
Vector6 corrupted_mu(const Vector3& w, const Signals& sig, const Vector3& y) {
  Vector6 m = mu_at(w, sig, y);
  for (int i = 0; i < 3; ++i) {
    const Vector3 h = detail::without_slot(sig.omega_hat, i);
    const auto b = detail::phi2_slot_slope(i, h, sig.Omega, sig.Q, sig.err.lambda_slope);
    m -= (0.05 * w(i) * w(i) * b).transpose();
  }
  return m;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

VerifyCheck below(std::string name, double dev, double limit) {
  return {std::move(name), dev, "< " + fmt(limit), dev < limit};
}

VerifyCheck at_least(std::string name, double value, double limit) {
  return {std::move(name), value, ">= " + fmt(limit), value >= limit};
}

Scenario short_nominal(double duration) {
  Scenario sc;
  sc.label = "verify";
  sc.initial.q = case_attitude(1);
  sc.duration = duration;
  return sc;
}

}  // namespace

std::vector<VerifyCheck> run_verification(bool corrupt_mu2) {
  constexpr double kEpsPe = 1e-6;
  std::vector<VerifyCheck> checks;
  Sampler rs(20240611);

  double gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 500; ++k) {
    const double x = std::pow(10.0, -3.0 + 3.0 * k / 499.0);
    gap = std::min({gap, lemma1_gap(x), lemma1_gap(-x)});
  }
  checks.push_back(at_least("Lemma 1 gap, 1000 points of q_e4", gap, -1e-12));

  double slack = std::numeric_limits<double>::infinity();
  for (int di = 1; di <= 19; ++di) {
    const double delta = 0.05 * di;
    for (double alpha : {0.1, 0.5, 1.0, 5.0}) {
      const BarrierBounds bb = lemma2_bounds(delta, alpha);
      for (int k = 0; k < 200; ++k) {
        const double x = delta + (1.0 - delta) * k / 199.0;
        const double v = -alpha * std::log(x * x), w = 1.0 - x * x;
        slack = std::min({slack, v - bb.lower * w, bb.upper * w - v});
      }
    }
  }
  checks.push_back(at_least("Lemma 2 sandwich slack, (delta, alpha) grid", slack, -1e-12));

  double dec = 0.0, jac = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const Signals sig = rs.signals();
    const RegressorBundle b = build_regressors(sig);
    dec = std::max(dec, (b.Phi - phi_direct(sig)).cwiseAbs().maxCoeff());
    if (n % 4 != 0) continue;
    if (corrupt_mu2) {
      auto f = [&](const Vector3& w) { return corrupted_mu(w, sig, b.y); };
      jac = std::max(jac, mu_jacobian_deviation(f, b, sig.omega, 1e-6));
    } else {
      jac = std::max(jac, mu_jacobian_deviation(sig, 1e-6));
    }
  }
  checks.push_back(below("Phi = Phi1 + Phi2 vs direct form, max abs", dec, 1e-10));
  checks.push_back(below("d mu/d omega = (Phi + Psi)^T, max rel (FD)", jac, 1e-5));

  double adj = 0.0;
  for (int n = 0; n < 200; ++n) {
    Matrix6 a;
    for (int i = 0; i < 36; ++i) a(i) = rs.uniform(-1, 1);
    const Matrix6 N = a * a.transpose() + 0.1 * Matrix6::Identity();
    const double d = determinant(N);
    adj = std::max(adj, (adjugate(N) * N - d * Matrix6::Identity()).cwiseAbs().maxCoeff() /
                            std::abs(d));
  }
  checks.push_back(below("adj(N) N = det(N) I, max rel (random PSD N)", adj, 1e-8));

  const Scenario sc = short_nominal(10.0);
  const Vector6 theta = sc.theta_true.theta;
  double lre = 0.0;
  const TrajectoryLog log = run_scenario(sc, [&](const StepView& v) {
    if (v.t >= 1.0) lre = std::max(lre, (v.eval.state.drem.u_f - v.eval.W_a * theta).norm());
  });
  double eps = 0.0;
  for (const auto& s : log.samples)
    if (s.Delta_N > kEpsPe)
      eps = std::max(eps, (s.eps - s.Delta_N * s.theta_err).norm() / (s.Delta_N * theta.norm()));
  checks.push_back(below("eps = Delta_N theta_err, max rel (10 s run)", eps, 1e-8));
  checks.push_back(below("|u_f - W_a theta| for t >= 1 s", lre, 1e-6));

  Scenario cut = short_nominal(20.0);
  cut.reference.freeze_time = 8.0;
  const TrajectoryLog clog = run_scenario(cut);
  const auto floor = pe_floor_monitor(clog.channel(&LogSample::t),
                                      clog.channel(&LogSample::Delta_N), kEpsPe);
  double dn_min = floor ? std::numeric_limits<double>::infinity() : 0.0;
  for (const auto& s : clog.samples)
    if (floor && s.t >= floor->T_s) dn_min = std::min(dn_min, s.Delta_N);
  checks.push_back({"Lemma 3 floor after excitation cut, min Delta_N", dn_min, "> " + fmt(kEpsPe),
                    dn_min > kEpsPe});
  return checks;
}

}  // namespace attctl::cli
