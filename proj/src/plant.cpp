#include <attctl/plant.hpp>

#include <cmath>
#include <numbers>

namespace attctl {

double InertiaParams::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix3> eig(matrix(), Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

RigidBody::RigidBody(const InertiaParams& params) : params_(params), j_(params.matrix()) {
  Eigen::SelfAdjointEigenSolver<Matrix3> eig(j_, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(2);
  if (!(lo > 0.0)) throw std::invalid_argument("inertia matrix is not positive definite");
  if (hi / lo > 1e12) throw std::invalid_argument("inertia matrix is numerically singular");
  j_min_ = lo;
  j_inv_ = j_.inverse();
}

BodyStateRate plant_derivative(const BodyState& state, const Vector3& u, const Vector3& u_d,
                               const RigidBody& body) {
  const Vector3& w = state.omega;
  BodyStateRate rate;
  rate.q_dot = quat_rate(state.q, w);
  rate.omega_dot = body.inverse() * (-w.cross(body.inertia() * w) + u + u_d);
  return rate;
}

namespace {

struct ScalarProfile {
  double value, first, second;
};

ScalarProfile profile(double t) {
  constexpr double pi = std::numbers::pi;
  const double g = std::exp(-0.01 * t * t);
  const double g1 = -0.02 * t * g;
  const double g2 = (-0.02 + 0.0004 * t * t) * g;
  const double c = std::cos(t);
  const double s = std::sin(t);

  // 0.3 (1 - g) cos t
  const double a0 = 0.3 * (1.0 - g) * c;
  const double a1 = 0.3 * (-g1 * c - (1.0 - g) * s);
  const double a2 = 0.3 * (-g2 * c + 2.0 * g1 * s - (1.0 - g) * c);

  // (t g) (0.08 pi + 0.006 sin t)
  const double m0 = t * g, m1 = g + t * g1, m2 = 2.0 * g1 + t * g2;
  const double p0 = 0.08 * pi + 0.006 * s, p1 = 0.006 * c, p2 = -0.006 * s;
  const double b0 = m0 * p0;
  const double b1 = m1 * p0 + m0 * p1;
  const double b2 = m2 * p0 + 2.0 * m1 * p1 + m0 * p2;

  return {a0 + b0, a1 + b1, a2 + b2};
}

}  // namespace

ReferenceRates reference_at(double t) {
  const auto p = profile(t);
  const Vector3 ones = Vector3::Ones();
  return {p.value * ones, p.first * ones, p.second * ones};
}

ReferenceRates ReferenceProfile::at(double t) const {
  if (freeze_time && t >= *freeze_time) {
    ReferenceRates held;
    held.omega_r = reference_at(*freeze_time).omega_r;
    return held;
  }
  return reference_at(t);
}

ReferenceState with_attitude(const Quaternion& q_r, const ReferenceRates& rates) {
  return {q_r, rates.omega_r, rates.omega_r_dot, rates.omega_r_ddot};
}

Vector3 disturbance_at(double t) {
  return 1e-4 * Vector3(3.0 * std::cos(0.2 * t) + 4.0 * std::sin(0.06 * t) - 10.0,
                        -1.5 * std::sin(0.04 * t) + 3.0 * std::cos(0.1 * t) + 15.0,
                        3.0 * std::sin(0.2 * t) - 8.0 * std::sin(0.08 * t) + 5.0);
}

double NoiseSource::uniform() {
  // 53 high bits -> [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NoiseSource::gaussian() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

NoiseSample NoiseSource::draw(const NoiseConfig& config) {
  NoiseSample sample;
  if (config.cone_half_angle_deg > 0.0) {
    // Uniform over the spherical cap: cos(polar) uniform on [cos(max), 1].
    const double cos_max = std::cos(config.cone_half_angle_deg * std::numbers::pi / 180.0);
    sample.cos_polar = 1.0 - uniform() * (1.0 - cos_max);
    sample.azimuth = 2.0 * std::numbers::pi * uniform();
  }
  if (config.gyro_std > 0.0) {
    for (int i = 0; i < 3; ++i) sample.gyro(i) = config.gyro_std * gaussian();
  }
  return sample;
}

std::optional<Vector3> eigenaxis(const Quaternion& q) {
  const double n = q.v.norm();
  if (n < 1e-12) return std::nullopt;
  return Vector3(q.v / n);
}

BodyState apply_noise(const BodyState& state, const NoiseSample& sample) {
  BodyState out = state;
  out.omega += sample.gyro;
  if (sample.cos_polar >= 1.0) return out;
  const auto axis = eigenaxis(state.q);
  if (!axis) return out;

  const Vector3& n = *axis;
  // Tangent basis from the coordinate axis least aligned with n.
  Eigen::Index k;
  n.cwiseAbs().minCoeff(&k);
  const Vector3 helper = Vector3::Unit(k);
  const Vector3 e1 = n.cross(helper).normalized();
  const Vector3 e2 = n.cross(e1);

  const double sin_polar = std::sqrt(std::max(0.0, 1.0 - sample.cos_polar * sample.cos_polar));
  const Vector3 perturbed =
      sample.cos_polar * n +
      sin_polar * (std::cos(sample.azimuth) * e1 + std::sin(sample.azimuth) * e2);

  // q = [n sin(psi/2), cos(psi/2)]: keep the eigenangle, swap the axis.
  const double half_sin = state.q.v.norm();
  out.q = Quaternion{perturbed.normalized() * half_sin, state.q.w}.normalized();
  return out;
}

BodyState measure(const BodyState& state, const NoiseConfig& config, NoiseSource& rng) {
  return apply_noise(state, rng.draw(config));
}

}  // namespace attctl
