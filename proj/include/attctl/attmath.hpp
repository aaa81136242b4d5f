#pragma once

// Fixed-size quaternion algebra and the inertia regression operator.
// Quaternions are stored vector-part first: [v1, v2, v3, w].

#include <Eigen/Dense>
#include <cmath>

namespace attctl {

template <typename Scalar> using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Vec4 = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar> using Vec6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar> using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar> using Mat36 = Eigen::Matrix<Scalar, 3, 6>;
template <typename Scalar> using Mat6 = Eigen::Matrix<Scalar, 6, 6>;

using Vector3 = Vec3<double>;
using Vector4 = Vec4<double>;
using Vector6 = Vec6<double>;
using Matrix3 = Mat3<double>;
using Matrix36 = Mat36<double>;
using Matrix6 = Mat6<double>;

template <typename Scalar> struct UnitQuaternion {
  Vec3<Scalar> v = Vec3<Scalar>::Zero();
  Scalar w = Scalar(1);

  static UnitQuaternion identity() { return {}; }

  static UnitQuaternion fromCoeffs(const Vec4<Scalar>& c) {
    return {c.template head<3>(), c(3)};
  }

  Vec4<Scalar> coeffs() const {
    Vec4<Scalar> c;
    c << v, w;
    return c;
  }

  Scalar norm() const { return std::sqrt(v.squaredNorm() + w * w); }

  UnitQuaternion normalized() const {
    const Scalar n = norm();
    return {v / n, w / n};
  }

  UnitQuaternion operator-() const { return {-v, -w}; }
};

using Quaternion = UnitQuaternion<double>;

/// Cross-product matrix: skew(x) * y == x.cross(y).
template <typename Derived>
Mat3<typename Derived::Scalar> skew(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Mat3<Scalar> s;
  s << Scalar(0), -x(2), x(1),
       x(2), Scalar(0), -x(0),
       -x(1), x(0), Scalar(0);
  return s;
}

/// Regression operator with lmap(x) * theta == J * x for
/// theta = [J11, J22, J33, J23, J13, J12].
template <typename Derived>
Mat36<typename Derived::Scalar> lmap(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar z(0);
  Mat36<Scalar> l;
  l << x(0), z, z, z, x(2), x(1),
       z, x(1), z, x(2), z, x(0),
       z, z, x(2), x(1), x(0), z;
  return l;
}

/// Symmetric inertia matrix from its six independent entries.
template <typename Derived>
Mat3<typename Derived::Scalar> reconstruct(const Eigen::MatrixBase<Derived>& theta) {
  using Scalar = typename Derived::Scalar;
  Mat3<Scalar> j;
  j << theta(0), theta(5), theta(4),
       theta(5), theta(1), theta(3),
       theta(4), theta(3), theta(2);
  return j;
}

/// Inverse of reconstruct.
template <typename Derived>
Vec6<typename Derived::Scalar> pack_inertia(const Eigen::MatrixBase<Derived>& j) {
  Vec6<typename Derived::Scalar> theta;
  theta << j(0, 0), j(1, 1), j(2, 2), j(1, 2), j(0, 2), j(0, 1);
  return theta;
}

/// Hamilton product. quat_multiply(conjugate(qr), q) expands to the
/// error-quaternion component formula used by quat_error.
template <typename Scalar>
UnitQuaternion<Scalar> quat_multiply(const UnitQuaternion<Scalar>& a,
                                     const UnitQuaternion<Scalar>& b) {
  return {a.w * b.v + b.w * a.v + a.v.cross(b.v), a.w * b.w - a.v.dot(b.v)};
}

template <typename Scalar>
UnitQuaternion<Scalar> conjugate(const UnitQuaternion<Scalar>& q) {
  return {-q.v, q.w};
}

/// Relative attitude of the body frame with respect to the reference frame.
template <typename Scalar>
UnitQuaternion<Scalar> quat_error(const UnitQuaternion<Scalar>& q,
                                  const UnitQuaternion<Scalar>& qr) {
  return {qr.w * q.v - q.w * qr.v + skew(q.v) * qr.v, qr.w * q.w + qr.v.dot(q.v)};
}

/// Rotation matrix taking reference-frame coordinates to body-frame coordinates.
template <typename Scalar> Mat3<Scalar> rotmat(const UnitQuaternion<Scalar>& qe) {
  return (qe.w * qe.w - qe.v.squaredNorm()) * Mat3<Scalar>::Identity() +
         Scalar(2) * qe.v * qe.v.transpose() - Scalar(2) * qe.w * skew(qe.v);
}

/// Q(q) = 0.5 (S(q_v) + q_w I); maps angular velocity to the vector-part rate.
template <typename Scalar> Mat3<Scalar> kinematics_matrix(const UnitQuaternion<Scalar>& q) {
  return Scalar(0.5) * (skew(q.v) + q.w * Mat3<Scalar>::Identity());
}

/// Quaternion rate driven by body angular velocity omega.
template <typename Scalar>
Vec4<Scalar> quat_rate(const UnitQuaternion<Scalar>& q, const Vec3<Scalar>& omega) {
  Vec4<Scalar> d;
  d << kinematics_matrix(q) * omega, Scalar(-0.5) * q.v.dot(omega);
  return d;
}

}  // namespace attctl
