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

#include <optional>
#include <utility>
#include <vector>

#include "hpgt/factors.hpp"
#include "hpgt/measurements.hpp"
#include "hpgt/problem.hpp"
#include "hpgt/state.hpp"

namespace hpgt {

struct Preintegration {
  Mat3 dR = Mat3::Identity();
  Vec3 alpha = Vec3::Zero();  // m
  Vec3 beta = Vec3::Zero();   // m/s
  double dt = 0.0;
};

/// Integration of bias-corrected samples over their time span, expressed in
/// the IMU frame at the first sample. Each step uses Simpson's rule with
/// interpolated midpoint samples and a coning term on the rotation.
/// Throws TooFewSamples.
Preintegration preintegrate(const std::vector<ImuSample>& imu, const Vec3& bias_w = Vec3::Zero(),
                            const Vec3& bias_a = Vec3::Zero());

/// Samples of imu restricted to [t0, t1], with the ends linearly
/// interpolated so the slice spans exactly [t0, t1].
std::vector<ImuSample> imu_slice(const std::vector<ImuSample>& imu, double t0, double t1);

struct HandEyeRotation {
  UnitQuaternion q;    // X with a X = X b
  double gap = 0.0;    // second-smallest / smallest singular value
};

/// Quaternion least squares over (a, b) relative rotation pairs.
/// Throws DegenerateMotion when the singular-value gap is below 10.
HandEyeRotation init_rotation_handeye(const std::vector<std::pair<Rotation, Rotation>>& pairs);

struct KeyframeMocap {
  double t = 0.0;  // IMU clock
  Pose T_P_M;
};

struct TranslationGravity {
  Vec3 p_M_I = Vec3::Zero();
  Vec3 g_P = Vec3::Zero();  // gravity vector in P (points down)
  std::vector<Vec3> velocities;  // IMU velocity in P per keyframe
  double residual_rms = 0.0;
};

/// Linear least squares over lever arm, gravity and chained keyframe
/// velocities; preints[k] spans keyframes k..k+1. A known lever arm is moved
/// to the right-hand side. Throws RankDeficient.
TranslationGravity init_translation_gravity(const std::vector<KeyframeMocap>& kf,
                                            const std::vector<Preintegration>& preints,
                                            const Rotation& R_M_I,
                                            const std::optional<Vec3>& lever_arm = std::nullopt);

/// Pose interpolation (slerp, linear) at tau; nullopt outside the stream.
std::optional<Pose> interpolate_pose(const std::vector<StampedPose>& s, double tau);

/// X = T_A_B from A X = X B over relative-motion pairs of b, with
/// tau_a = tau_b + offset. Throws DegenerateMotion.
Pose init_handeye_pose_to_pose(const std::vector<StampedPose>& traj_a,
                               const std::vector<StampedPose>& traj_b, double offset,
                               const PairThresholds& th = {});

struct InitResult {
  double off_M = 0.0;  // constant offsets, t = tau + off
  double off_D = 0.0;
  Rotation R_M_I;
  Vec3 p_M_I = Vec3::Zero();
  Vec3 g_P = Vec3::Zero();
  Pose T_M_D;
  Vec3 bias_w = Vec3::Zero();
  double handeye_gap = 0.0;
  double translation_rms = 0.0;
  double t_begin = 0.0, t_end = 0.0;  // usable global window
};

/// Time sync, hand-eye and gravity initialization. Throws DegenerateMotion,
/// FlatSignal, RankDeficient, NoOverlap.
InitResult initialize(const MeasurementSet& set, const EstimatorOptions& opt);

/// Seeds all splines and the calibration from an initialization result.
State seed_state(const MeasurementSet& set, const InitResult& init, const EstimatorOptions& opt);

}  // namespace hpgt
