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

#include "hpgt/geometry.hpp"
#include "hpgt/spline.hpp"

namespace hpgt {

/// Time-invariant unknowns. Frames: W world (gravity along -z), B body,
/// M MoCap marker body, P MoCap world, I IMU, D device under test.
struct CalibState {
  Pose T_B_M;
  Pose T_B_I;
  Pose T_B_D;
  Pose T_W_P;
  Mat3 R_w_a = Mat3::Identity();
  Mat3 M_w = Mat3::Identity();  // upper triangular
  Mat3 M_a = Mat3::Identity();  // upper triangular
  double g = 9.81;              // g_W = (0, 0, -g)

  Vec3 g_W() const { return Vec3(0.0, 0.0, -g); }
  Pose T_M_D() const { return pose_inverse(T_B_M) * T_B_D; }
};

/// Upper-triangular entries in the order (00, 01, 02, 11, 12, 22).
inline constexpr int kUpperRow[6] = {0, 0, 0, 1, 1, 2};
inline constexpr int kUpperCol[6] = {0, 1, 2, 1, 2, 2};

/// Continuous-time state. rot/trans share one knot grid; bias splines live
/// on the global clock, offset splines on the clock of their sensor.
struct SplineBundle {
  So3Spline rot;
  Spline3 trans;
  Spline3 bias_w;
  Spline3 bias_a;
  TimeOffsetSpline off_M;
  TimeOffsetSpline off_I;
  TimeOffsetSpline off_D;
};

struct State {
  SplineBundle splines;
  CalibState calib;
};

/// Everything a factor needs from the motion splines at one global time.
struct BodyKinematics {
  Mat3 R = Mat3::Identity();
  Vec3 p = Vec3::Zero();
  Vec3 w = Vec3::Zero();    // body rate
  Vec3 dw = Vec3::Zero();   // body angular acceleration
  Vec3 ddw = Vec3::Zero();  // body angular jerk
  Vec3 v = Vec3::Zero();    // world velocity
  Vec3 a = Vec3::Zero();    // world acceleration
  Vec3 j = Vec3::Zero();    // world jerk
};

/// Throws OutOfDomain.
BodyKinematics body_kinematics(const SplineBundle& s, double t);

/// Pose of frame B in W at global time t.
Pose body_pose(const SplineBundle& s, double t);

}  // namespace hpgt
