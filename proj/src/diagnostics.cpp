#include <attctl/diagnostics.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace attctl {

double scaling_function(double r, double f_m) { return f_m * std::tanh(r) + 1.0; }

double scaling_derivative(double r, double psi_norm, double gamma, double f_m) {
  if (!(r > 0.0)) throw std::domain_error("scaling state r must be positive");
  const double f = scaling_function(r, f_m);
  const double sech = 1.0 / std::cosh(r);
  const double df = f_m * sech * sech;
  return gamma * f * std::sqrt(std::log(f)) / df * psi_norm * psi_norm;
}

double scaling_factor(double f_r, double J_m) {
  return std::sqrt(J_m) * std::exp(-1.0 / (2.0 * J_m * J_m)) *
         std::exp(std::sqrt(std::log(f_r)) / J_m);
}

double lyapunov_eta(const ControllerGains& gains, const ScalingParams& params) {
  return 2.0 * (1.0 / gains.kappa + params.rho);
}

std::vector<LyapunovSample> lyapunov_series(const TrajectoryLog& log,
                                            const InertiaParams& theta_true,
                                            const ControllerGains& gains,
                                            const ScalingParams& params) {
  if (!(params.r0 > 0.0)) throw std::invalid_argument("r(0) must be positive");
  const double J_m = theta_true.min_eigenvalue();
  const double eta = lyapunov_eta(gains, params);
  const double f_m = gains.f_m;
  const double rho_max = std::sqrt(std::log(f_m + 1.0));
  double rho = std::sqrt(std::log(scaling_function(params.r0, f_m)));

  std::vector<LyapunovSample> out;
  out.reserve(log.samples.size());
  for (std::size_t k = 0; k < log.samples.size(); ++k) {
    const LogSample& s = log.samples[k];
    if (k > 0) {
      const LogSample& p = log.samples[k - 1];
      rho += 0.25 * gains.gamma * (s.t - p.t) *
             (p.psi_norm * p.psi_norm + s.psi_norm * s.psi_norm);
      rho = std::min(rho, rho_max);
    }
    LyapunovSample v;
    v.t = s.t;
    ScalingDiagnostics& sc = v.scaling;
    sc.f_r = std::exp(rho * rho);
    sc.r = rho >= rho_max ? std::numeric_limits<double>::infinity()
                          : std::atanh((sc.f_r - 1.0) / f_m);
    sc.R = scaling_factor(sc.f_r, J_m);
    sc.z = s.theta_err / sc.R;

    const Quaternion qe = Quaternion::fromCoeffs(s.q_e);
    v.V_q = barrier_value(qe, gains.aef.alpha);
    v.V_s = 0.5 * s.s.squaredNorm();
    v.V_w = 0.5 * s.omega_tilde.squaredNorm();
    v.V_z = sc.z.squaredNorm() / (2.0 * gains.gamma);
    v.V_total = v.V_q + v.V_s + v.V_w + eta * v.V_z;
    v.Z_norm2 = qe.v.squaredNorm() + s.s.squaredNorm() + s.omega_tilde.squaredNorm() +
                sc.z.squaredNorm();
    out.push_back(v);
  }
  return out;
}

double max_step_increase(std::span<const LyapunovSample> series) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < series.size(); ++k)
    worst = std::max(worst, series[k].V_total - series[k - 1].V_total);
  return series.size() < 2 ? 0.0 : worst;
}

SandwichCheck sandwich_check(std::span<const LyapunovSample> series, const TrajectoryLog& log,
                             const ControllerGains& gains, const ScalingParams& params) {
  double delta = 1.0;
  for (const auto& s : log.samples) delta = std::min(delta, std::abs(s.q_e(3)));
  const double eta = lyapunov_eta(gains, params);
  const double kz = eta / (2.0 * gains.gamma);
  SandwichCheck out;
  double alpha_hi = gains.aef.alpha;
  // At delta = 1 the whole run sits at the equilibrium; the limit of the bound is alpha.
  if (delta < 1.0) alpha_hi = lemma2_bounds(delta, gains.aef.alpha).upper;
  const double alpha_lo = std::min(1.0, gains.aef.alpha);
  out.lower = std::min({alpha_lo, 0.5, kz});
  out.upper = std::max({alpha_hi, 0.5, kz});
  out.min_slack = std::numeric_limits<double>::infinity();
  for (const auto& v : series) {
    const double scale = std::max(v.Z_norm2, 1e-300);
    const double lo = (v.V_total - out.lower * v.Z_norm2) / scale;
    const double hi = (out.upper * v.Z_norm2 - v.V_total) / scale;
    out.min_slack = std::min({out.min_slack, lo, hi});
  }
  if (series.empty()) out.min_slack = 0.0;
  out.holds = out.min_slack >= -1e-12;
  return out;
}

EnvelopeFit exponential_envelope_fit(std::span<const double> t, std::span<const double> V,
                                     double t0, double t1) {
  const std::size_t n = std::min(t.size(), V.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  std::size_t m = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (t[k] < t0 || t[k] > t1 || !(V[k] >= 1e-300)) continue;
    const double x = t[k], y = std::log(V[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    ++m;
  }
  if (m < 2) throw std::invalid_argument("envelope fit needs at least two positive samples");
  const double mm = static_cast<double>(m);
  const double cxx = sxx - sx * sx / mm;
  const double cxy = sxy - sx * sy / mm;
  const double cyy = syy - sy * sy / mm;
  EnvelopeFit fit;
  fit.samples = m;
  fit.rate = cxx > 0.0 ? cxy / cxx : 0.0;
  // A flat series is fitted exactly by a zero slope.
  fit.r_squared = cyy > 0.0 && cxx > 0.0 ? (cxy * cxy) / (cxx * cyy) : 1.0;
  return fit;
}

SettlingBounds settling_bounds(const ControllerGains& gains, double hbar, double V_z_at_Ts,
                               double R_m, double T_s) {
  SettlingBounds out;
  if (!(hbar > 0.0) || !(R_m > 0.0)) return out;
  const double g2 = 2.0 * gains.gamma;
  const double i1 = gains.iota1, i2 = gains.iota2;
  out.c1 = std::pow(g2, 0.5 * (i1 + 1.0)) * gains.lambda1 * std::pow(hbar, i1) *
           std::pow(R_m, i1 - 1.0);
  out.c2 = std::pow(g2, 0.5 * (i2 + 1.0)) * gains.lambda2 * std::pow(hbar, i2) *
           std::pow(R_m, i2 - 1.0);
  if (out.c1 > 0.0) {
    const double k = gains.lambda * gains.gamma * hbar;
    const double v = std::pow(std::max(V_z_at_Ts, 0.0), 0.5 * (1.0 - i1));
    if (k > 0.0)
      out.finite = 1.0 / (k * (1.0 - i1)) * std::log((2.0 * k * v + out.c1) / out.c1);
    else
      out.finite = 2.0 * v / (out.c1 * (1.0 - i1));
  }
  if (out.c1 > 0.0 && out.c2 > 0.0)
    out.fixed = T_s + 2.0 / (out.c1 * (1.0 - i1)) + 2.0 / (out.c2 * (i2 - 1.0));
  return out;
}

std::optional<double> crossing_time(const TrajectoryLog& log, double threshold) {
  const auto& s = log.samples;
  if (s.empty() || !(s.back().theta_err.norm() < threshold)) return std::nullopt;
  std::size_t k = s.size() - 1;
  while (k > 0 && s[k - 1].theta_err.norm() < threshold) --k;
  return s[k].t;
}

double sync_ratio_spread(const TrajectoryLog& log, double t_start, double t_end) {
  constexpr double kFloor = 1e-6;
  double worst = 0.0;
  for (int i = 0; i < 6; ++i) {
    for (int j = i + 1; j < 6; ++j) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo, sum = 0.0;
      std::size_t m = 0;
      for (const auto& s : log.samples) {
        if (s.t < t_start || s.t > t_end) continue;
        const double a = s.theta_err(i), b = s.theta_err(j);
        if (std::abs(a) < kFloor || std::abs(b) < kFloor) continue;
        const double ratio = a / b;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        sum += ratio;
        ++m;
      }
      if (m < 2) continue;
      const double mean = std::abs(sum / static_cast<double>(m));
      if (mean > 0.0) worst = std::max(worst, (hi - lo) / mean);
    }
  }
  return worst;
}

Metrics metrics(const TrajectoryLog& log, double t_start, double t_end, double eps_pe) {
  if (!(t_end > t_start)) throw std::invalid_argument("metrics window must have t_end > t_start");
  Metrics m;
  m.label = log.label;
  m.seed = log.seed;
  m.t_start = t_start;
  m.t_end = t_end;
  Vector3 qev = Vector3::Zero(), we = Vector3::Zero(), qev_t = Vector3::Zero(),
          we_t = Vector3::Zero();
  Vector6 th = Vector6::Zero();
  std::size_t n = 0;
  constexpr double kTol = 1e-9;
  m.min_abs_qe4 = std::numeric_limits<double>::infinity();
  std::vector<double> t, dn;
  t.reserve(log.samples.size());
  dn.reserve(log.samples.size());
  for (const auto& s : log.samples) {
    m.min_abs_qe4 = std::min(m.min_abs_qe4, std::abs(s.q_e(3)));
    t.push_back(s.t);
    dn.push_back(s.Delta_N);
    if (s.t < t_start - kTol || s.t > t_end + kTol) continue;
    qev += s.q_e_meas.head<3>().cwiseAbs2();
    we += s.omega_e_meas.cwiseAbs2();
    qev_t += s.q_e.head<3>().cwiseAbs2();
    we_t += s.omega_e.cwiseAbs2();
    th += s.theta_err.cwiseAbs2();
    ++n;
  }
  if (n == 0) throw std::invalid_argument("metrics window contains no samples");
  const double inv = 1.0 / static_cast<double>(n);
  m.rms_qev = std::sqrt(qev.maxCoeff() * inv);
  m.rms_omega_e = std::sqrt(we.maxCoeff() * inv);
  m.rms_qev_true = std::sqrt(qev_t.maxCoeff() * inv);
  m.rms_omega_e_true = std::sqrt(we_t.maxCoeff() * inv);
  m.rms_theta_err = std::sqrt(th.maxCoeff() * inv);
  if (const auto floor = pe_floor_monitor(t, dn, eps_pe)) {
    m.T_s_detected = floor->T_s;
    m.hbar = floor->hbar;
  }
  m.sync_ratio_spread = sync_ratio_spread(log, t_start, t_end);
  return m;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : "nan"; }

}  // namespace

void write_metrics_csv(std::ostream& os, std::span<const Metrics> rows) {
  os << "label,seed,t_start[s],t_end[s],rms_qev[-],rms_omega_e[rad/s],rms_theta_err[kg*m^2],"
        "rms_qev_true[-],rms_omega_e_true[rad/s],min_abs_qe4[-],T_s_detected[s],hbar[-],"
        "sync_ratio_spread[-]\n";
  for (const auto& m : rows) {
    os << m.label << ',' << m.seed << ',' << num(m.t_start) << ',' << num(m.t_end) << ','
       << num(m.rms_qev) << ',' << num(m.rms_omega_e) << ',' << num(m.rms_theta_err) << ','
       << num(m.rms_qev_true) << ',' << num(m.rms_omega_e_true) << ',' << num(m.min_abs_qe4)
       << ',' << opt(m.T_s_detected) << ',' << opt(m.hbar) << ',' << num(m.sync_ratio_spread)
       << '\n';
  }
}

void write_metrics_report(std::ostream& os, std::span<const Metrics> rows) {
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %12s %12s %12s %10s %8s\n", "scenario", "rms(q_ev)",
                "rms(w_e)", "rms(th_err)", "min|q_e4|", "T_s");
  os << line;
  for (const auto& m : rows) {
    std::snprintf(line, sizeof line, "%-28s %12.4e %12.4e %12.4e %10.4f %8s\n", m.label.c_str(),
                  m.rms_qev, m.rms_omega_e, m.rms_theta_err, m.min_abs_qe4,
                  m.T_s_detected ? num(*m.T_s_detected).substr(0, 8).c_str() : "none");
    os << line;
  }
  if (rows.empty()) return;
  os << "RMS over [" << rows.front().t_start << ", " << rows.front().t_end
     << "] s, maximum over vector components; q_ev and w_e as measured by the sensors.\n";
}

}  // namespace attctl
