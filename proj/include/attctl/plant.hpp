#pragma once

// Rigid-body truth model, the reference trajectory, and the disturbance and
// sensor-noise models used by the robustness campaign.

#include <attctl/attmath.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>

namespace attctl {

/// theta = [J11, J22, J33, J23, J13, J12] in kg m^2.
struct InertiaParams {
  Vector6 theta = Vector6::Zero();

  Matrix3 matrix() const { return reconstruct(theta); }
  double min_eigenvalue() const;
  bool positive_definite() const { return min_eigenvalue() > 0.0; }
};

/// Inertia with a cached inverse. Construction rejects indefinite or
/// numerically singular matrices (condition number above 1e12).
class RigidBody {
 public:
  explicit RigidBody(const InertiaParams& params);

  const InertiaParams& params() const { return params_; }
  const Matrix3& inertia() const { return j_; }
  const Matrix3& inverse() const { return j_inv_; }
  double min_eigenvalue() const { return j_min_; }

 private:
  InertiaParams params_;
  Matrix3 j_;
  Matrix3 j_inv_;
  double j_min_;
};

struct BodyState {
  Quaternion q;
  Vector3 omega = Vector3::Zero();
};

struct BodyStateRate {
  Vector4 q_dot = Vector4::Zero();
  Vector3 omega_dot = Vector3::Zero();
};

BodyStateRate plant_derivative(const BodyState& state, const Vector3& u, const Vector3& u_d,
                               const RigidBody& body);

/// Reference angular velocity and its first two time derivatives.
struct ReferenceRates {
  Vector3 omega_r = Vector3::Zero();
  Vector3 omega_r_dot = Vector3::Zero();
  Vector3 omega_r_ddot = Vector3::Zero();
};

struct ReferenceState {
  Quaternion q_r;
  Vector3 omega_r = Vector3::Zero();
  Vector3 omega_r_dot = Vector3::Zero();
  Vector3 omega_r_ddot = Vector3::Zero();
};

/// Scalar profile applied on all three axes:
///   w(t) = 0.3 (1 - e^{-0.01 t^2}) cos t + t e^{-0.01 t^2} (0.08 pi + 0.006 sin t)
struct ReferenceProfile {
  // Holds omega_r at its value at freeze_time afterwards (derivatives zero).
  std::optional<double> freeze_time;

  ReferenceRates at(double t) const;
};

/// Rates of the unfrozen profile.
ReferenceRates reference_at(double t);

ReferenceState with_attitude(const Quaternion& q_r, const ReferenceRates& rates);

/// Slowly varying external torque, N m.
Vector3 disturbance_at(double t);

struct NoiseConfig {
  double cone_half_angle_deg = 0.0;
  double gyro_std = 0.0;
  std::uint64_t seed = 0;
};

/// One draw of the measurement noise. The cone perturbation is stored in the
/// tangent frame of the eigenaxis, so it can be re-applied to any state.
struct NoiseSample {
  double cos_polar = 1.0;
  double azimuth = 0.0;
  Vector3 gyro = Vector3::Zero();
};

/// Seeded 64-bit Mersenne Twister with portable uniform and Box-Muller
/// transforms, so sample streams are identical across standard libraries.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // [0, 1)
  double gaussian();
  NoiseSample draw(const NoiseConfig& config);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

BodyState apply_noise(const BodyState& state, const NoiseSample& sample);

/// Measured attitude and rate: eigenaxis perturbed uniformly inside the
/// configured cone, gyro corrupted by zero-mean Gaussian noise.
BodyState measure(const BodyState& state, const NoiseConfig& config, NoiseSource& rng);

/// Eigenaxis of q, or nullopt when the rotation angle is numerically zero.
std::optional<Vector3> eigenaxis(const Quaternion& q);

}  // namespace attctl
