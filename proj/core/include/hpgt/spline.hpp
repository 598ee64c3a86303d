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

#include <array>
#include <cmath>
#include <vector>

#include "hpgt/errors.hpp"
#include "hpgt/geometry.hpp"

namespace hpgt {

/// Uniform knot grid. Segment s covers [t0 + s*dt, t0 + (s+1)*dt) and is
/// driven by control points s .. s+k-1, so a spline of order k with `count`
/// control points is valid on the closed interval
/// [t0, t0 + (count - k + 1) * dt]. The right end belongs to the last
/// segment (u = 1).
struct KnotGrid {
  double t0 = 0.0;
  double dt = 1.0;
  int count = 0;

  int segments(int order) const { return count - order + 1; }
  double t_begin() const { return t0; }
  double t_end(int order) const { return t0 + segments(order) * dt; }
  bool contains(double t, int order) const;

  /// Smallest grid starting at t_begin whose domain covers [t_begin, t_end].
  static KnotGrid covering(double t_begin, double t_end, double dt, int order);
  /// Largest grid with knots on integer multiples of dt whose domain lies
  /// inside [t_begin, t_end].
  static KnotGrid anchored_inside(double t_begin, double t_end, double dt, int order);
};

/// Cumulative blending matrix: B(u) = M * (1, u, ..., u^{k-1})^T, row j is
/// the cumulative basis B_j. Supports k in {2, 3, 4}.
MatX blending_matrix(int k);

/// Non-cumulative basis weights and their time derivatives (up to third) on
/// one segment. b[d][j] multiplies control point first + j.
struct BasisEval {
  int first = 0;
  int order = 0;
  double u = 0.0;
  std::array<std::array<double, 4>, 4> b{};   // [deriv][j], non-cumulative
  std::array<std::array<double, 4>, 4> cb{};  // [deriv][j], cumulative
};

/// Throws OutOfDomain when t is outside the grid domain (tolerance 1e-9 s).
BasisEval eval_basis(const KnotGrid& grid, int order, double t);

template <int N>
class EuclidSpline {
 public:
  using VecN = Eigen::Matrix<double, N, 1>;

  EuclidSpline() = default;
  EuclidSpline(const KnotGrid& grid, int order, const VecN& fill = VecN::Zero())
      : grid_(grid), order_(order), cps_(grid.count, fill) {
    if (order != 2 && order != 3 && order != 4) {
      throw Error(ErrorCode::kUnsupportedOrder, "order " + std::to_string(order));
    }
  }

  const KnotGrid& grid() const { return grid_; }
  int order() const { return order_; }
  std::vector<VecN>& cps() { return cps_; }
  const std::vector<VecN>& cps() const { return cps_; }
  bool contains(double t) const { return grid_.contains(t, order_); }
  double t_begin() const { return grid_.t_begin(); }
  double t_end() const { return grid_.t_end(order_); }

  VecN value(const BasisEval& be, int deriv) const {
    VecN out = VecN::Zero();
    for (int j = 0; j < order_; ++j) out += be.b[deriv][j] * cps_[be.first + j];
    return out;
  }
  /// deriv in {0, 1, 2, 3}.
  VecN eval(double t, int deriv = 0) const { return value(eval_basis(grid_, order_, t), deriv); }

 private:
  KnotGrid grid_;
  int order_ = 4;
  std::vector<VecN> cps_;
};

using Spline1 = EuclidSpline<1>;
using Spline3 = EuclidSpline<3>;

/// Body-frame kinematics of an SO(3) spline at one time, plus optional
/// Jacobians with respect to right perturbations R_c <- R_c Exp(delta) of the
/// four active control points.
struct So3Eval {
  int first = 0;
  Mat3 R = Mat3::Identity();
  Vec3 w = Vec3::Zero();    // body rate
  Vec3 dw = Vec3::Zero();   // body angular acceleration
  Vec3 ddw = Vec3::Zero();  // body angular jerk
  bool has_jac = false;
  std::array<Mat3, 4> J_R{};   // d(rotation error) / d delta_c
  std::array<Mat3, 4> J_w{};   // d w / d delta_c
  std::array<Mat3, 4> J_dw{};  // d dw / d delta_c
};

/// Cumulative cubic B-spline on SO(3).
class So3Spline {
 public:
  static constexpr int kOrder = 4;

  So3Spline() = default;
  explicit So3Spline(const KnotGrid& grid, const Mat3& fill = Mat3::Identity())
      : grid_(grid), cps_(grid.count, fill) {}

  const KnotGrid& grid() const { return grid_; }
  std::vector<Mat3>& cps() { return cps_; }
  const std::vector<Mat3>& cps() const { return cps_; }
  bool contains(double t) const { return grid_.contains(t, kOrder); }
  double t_begin() const { return grid_.t_begin(); }
  double t_end() const { return grid_.t_end(kOrder); }

  Rotation eval(double t) const;
  So3Eval kinematics(double t, bool with_jac = false) const;
  So3Eval kinematics(const BasisEval& be, bool with_jac) const;

 private:
  KnotGrid grid_;
  std::vector<Mat3> cps_;
};

struct BodyRates {
  Vec3 omega;
  Mat3 Rdot;
  Mat3 Rddot;
};

/// omega = (R^T Rdot)^vee, Rdot = R [w]x, Rddot = R([w]x^2 + [dw]x).
BodyRates so3_body_rates(const So3Spline& s, double t);

/// Piecewise-linear clock offset: global time t = tau + delta(tau).
class TimeOffsetSpline {
 public:
  using Vec1 = Eigen::Matrix<double, 1, 1>;

  TimeOffsetSpline() = default;
  TimeOffsetSpline(const KnotGrid& grid, double value) : inner_(grid, 2, Vec1(value)) {}

  Spline1& inner() { return inner_; }
  const Spline1& inner() const { return inner_; }
  bool contains(double tau) const { return inner_.contains(tau); }
  double offset(double tau) const { return inner_.eval(tau)[0]; }
  /// d offset / d tau
  double slope(double tau) const { return inner_.eval(tau, 1)[0]; }

  /// Inverse of map_time by fixed-point iteration; assumes |slope| << 1.
  double unmap_time(double t) const;

 private:
  Spline1 inner_;
};

double map_time(const TimeOffsetSpline& off, double tau);

/// Linear least-squares fit of control points. Throws InsufficientCoverage
/// when a segment has no samples or the system is singular.
template <int N>
EuclidSpline<N> fit_spline(const std::vector<double>& t,
                           const std::vector<Eigen::Matrix<double, N, 1>>& v,
                           const KnotGrid& grid, int order);

/// Nearest-sample seeding followed by Gauss-Newton sweeps on Log residuals.
So3Spline fit_spline(const std::vector<double>& t, const std::vector<Mat3>& R,
                     const KnotGrid& grid, int sweeps = 10);

}  // namespace hpgt
