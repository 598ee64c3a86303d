// Copyright 2026 The HPGT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace hpgt {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

Mat3 skew(const Vec3& v);
Vec3 vee(const Mat3& m);

/// Rotation matrix with checked construction. Internal code that already
/// guarantees orthonormality uses unchecked().
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  /// Throws BadQuaternion if m is not orthonormal with det +1 (tol 1e-9).
  static Rotation from_matrix(const Mat3& m);
  static Rotation unchecked(const Mat3& m) { return Rotation(m); }
  static Rotation identity() { return Rotation(); }

  const Mat3& matrix() const { return m_; }
  Rotation inverse() const { return Rotation(m_.transpose()); }
  Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  bool is_valid(double tol = 1e-9) const;

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Hamilton convention, scalar-first storage (w, x, y, z). The matrix of a
/// quaternion rotates vectors actively: v' = R(q) v, and R(a*b) = R(a) R(b).
struct UnitQuaternion {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  static UnitQuaternion from_vec(const Vec4& v);
  static UnitQuaternion from_rotation(const Rotation& r);

  Vec4 vec() const { return Vec4(w, x, y, z); }
  Mat3 matrix() const;
  Rotation rotation() const { return Rotation::unchecked(matrix()); }
  /// Flip sign so that w >= 0.
  UnitQuaternion canonical() const;
  UnitQuaternion operator*(const UnitQuaternion& o) const;
  UnitQuaternion conjugate() const { return {w, -x, -y, -z}; }
};

/// L(a) b = a * b
Mat4 quat_left(const UnitQuaternion& q);
/// R(b) a = a * b
Mat4 quat_right(const UnitQuaternion& q);

// Raw matrix forms, used in the inner loops.
Mat3 so3_exp_mat(const Vec3& phi);
Vec3 so3_log_mat(const Mat3& R);
/// Right Jacobian of SO(3) and its inverse.
Mat3 right_jacobian(const Vec3& phi);
Mat3 right_jacobian_inv(const Vec3& phi);

Rotation so3_exp(const Vec3& phi);
/// Principal log, norm in [0, pi]. For a rotation of exactly pi the axis sign
/// is chosen so that its largest-magnitude component is positive.
Vec3 so3_log(const Rotation& R);

/// Smallest rotation taking the direction of g onto -z (gravity-aligned world).
Mat3 align_to_down(const Vec3& g);

/// Project an almost-orthonormal matrix back onto SO(3).
Mat3 orthonormalize(const Mat3& m);

struct Pose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  Pose(const Rotation& r, const Vec3& t) : rotation(r), translation(t) {}

  static Pose identity() { return Pose(); }
  const Mat3& R() const { return rotation.matrix(); }
  const Vec3& p() const { return translation; }
  Vec3 operator*(const Vec3& v) const { return R() * v + translation; }
};

Pose pose_compose(const Pose& a, const Pose& b);
Pose pose_inverse(const Pose& a);
inline Pose operator*(const Pose& a, const Pose& b) { return pose_compose(a, b); }

struct ScrewInvariants {
  double theta = 0.0;  // rad
  double d = 0.0;      // m, along the screw axis
};

inline constexpr double kScrewAngleFloor = 1e-4;

/// Throws DegenerateScrew when theta < kScrewAngleFloor.
ScrewInvariants screw_invariants(const Pose& rel);

}  // namespace hpgt
