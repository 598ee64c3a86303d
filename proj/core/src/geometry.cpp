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

#include "hpgt/geometry.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "hpgt/errors.hpp"

namespace hpgt {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

Rotation Rotation::from_matrix(const Mat3& m) {
  Rotation r(m);
  if (!m.allFinite() || !r.is_valid()) {
    throw Error(ErrorCode::kBadQuaternion, "matrix is not a rotation");
  }
  return r;
}

bool Rotation::is_valid(double tol) const {
  return (m_.transpose() * m_ - Mat3::Identity()).norm() <= tol &&
         std::abs(m_.determinant() - 1.0) <= tol;
}

UnitQuaternion UnitQuaternion::from_vec(const Vec4& v) {
  Vec4 n = v.normalized();
  return {n[0], n[1], n[2], n[3]};
}

UnitQuaternion UnitQuaternion::from_rotation(const Rotation& r) {
  Eigen::Quaterniond q(r.matrix());
  q.normalize();
  return UnitQuaternion{q.w(), q.x(), q.y(), q.z()}.canonical();
}

Mat3 UnitQuaternion::matrix() const {
  return Eigen::Quaterniond(w, x, y, z).normalized().toRotationMatrix();
}

UnitQuaternion UnitQuaternion::canonical() const {
  if (w < 0.0) return {-w, -x, -y, -z};
  return *this;
}

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& o) const {
  return {w * o.w - x * o.x - y * o.y - z * o.z,
          w * o.x + x * o.w + y * o.z - z * o.y,
          w * o.y - x * o.z + y * o.w + z * o.x,
          w * o.z + x * o.y - y * o.x + z * o.w};
}

Mat4 quat_left(const UnitQuaternion& q) {
  Mat4 m;
  m << q.w, -q.x, -q.y, -q.z,
       q.x,  q.w, -q.z,  q.y,
       q.y,  q.z,  q.w, -q.x,
       q.z, -q.y,  q.x,  q.w;
  return m;
}

Mat4 quat_right(const UnitQuaternion& q) {
  Mat4 m;
  m << q.w, -q.x, -q.y, -q.z,
       q.x,  q.w,  q.z, -q.y,
       q.y, -q.z,  q.w,  q.x,
       q.z,  q.y, -q.x,  q.w;
  return m;
}

Mat3 so3_exp_mat(const Vec3& phi) {
  const double t2 = phi.squaredNorm();
  const Mat3 K = skew(phi);
  double a, b;
  if (t2 < 1e-12) {
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    const double t = std::sqrt(t2);
    a = std::sin(t) / t;
    b = (1.0 - std::cos(t)) / t2;
  }
  return Mat3::Identity() + a * K + b * K * K;
}

Vec3 so3_log_mat(const Mat3& R) {
  const double c = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
  const Vec3 s = 0.5 * vee(R - R.transpose());
  const double sn = s.norm();
  const double theta = std::atan2(sn, c);
  if (theta < 1e-6) {
    return (1.0 + theta * theta / 6.0) * s;
  }
  if (c > -0.99) {
    return (theta / sn) * s;
  }
  // near pi: axis from the symmetric part
  const Mat3 B = 0.5 * (R + R.transpose()) - c * Mat3::Identity();
  int k = 0;
  B.diagonal().maxCoeff(&k);
  Vec3 n = B.col(k);
  n.normalize();
  if (sn > 1e-12) {
    if (n.dot(s) < 0.0) n = -n;
  } else {
    int j = 0;
    n.cwiseAbs().maxCoeff(&j);
    if (n[j] < 0.0) n = -n;
  }
  return theta * n;
}

Mat3 right_jacobian(const Vec3& phi) {
  const double t2 = phi.squaredNorm();
  const Mat3 K = skew(phi);
  double a, b;
  if (t2 < 1e-10) {
    a = 0.5 - t2 / 24.0;
    b = 1.0 / 6.0 - t2 / 120.0;
  } else {
    const double t = std::sqrt(t2);
    a = (1.0 - std::cos(t)) / t2;
    b = (t - std::sin(t)) / (t2 * t);
  }
  return Mat3::Identity() - a * K + b * K * K;
}

Mat3 right_jacobian_inv(const Vec3& phi) {
  const double t2 = phi.squaredNorm();
  const Mat3 K = skew(phi);
  double b;
  if (t2 < 1e-10) {
    b = 1.0 / 12.0 + t2 / 720.0;
  } else {
    const double t = std::sqrt(t2);
    b = 1.0 / t2 - (1.0 + std::cos(t)) / (2.0 * t * std::sin(t));
  }
  return Mat3::Identity() + 0.5 * K + b * K * K;
}

Rotation so3_exp(const Vec3& phi) { return Rotation::unchecked(so3_exp_mat(phi)); }

Vec3 so3_log(const Rotation& R) { return so3_log_mat(R.matrix()); }

Mat3 align_to_down(const Vec3& g) {
  const Vec3 a = g.normalized();
  const Vec3 b(0.0, 0.0, -1.0);
  const Vec3 v = a.cross(b);
  const double s = v.norm(), c = a.dot(b);
  if (s < 1e-15) return c > 0.0 ? Mat3::Identity() : so3_exp_mat(Vec3(std::numbers::pi, 0, 0));
  return so3_exp_mat(std::atan2(s, c) / s * v);
}

Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  const Mat3 V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) U.col(2) *= -1.0;
  return U * V.transpose();
}

Pose pose_compose(const Pose& a, const Pose& b) {
  return Pose(a.rotation * b.rotation, a.R() * b.p() + a.p());
}

Pose pose_inverse(const Pose& a) {
  const Rotation ri = a.rotation.inverse();
  return Pose(ri, -(ri.matrix() * a.p()));
}

ScrewInvariants screw_invariants(const Pose& rel) {
  const Vec3 phi = so3_log(rel.rotation);
  const double theta = phi.norm();
  if (!(theta >= kScrewAngleFloor)) {
    throw Error(ErrorCode::kDegenerateScrew, "rotation angle below floor");
  }
  return {theta, phi.dot(rel.p()) / theta};
}

}  // namespace hpgt
