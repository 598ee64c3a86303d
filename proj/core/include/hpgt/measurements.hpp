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

#include <numbers>
#include <vector>

#include "hpgt/geometry.hpp"

namespace hpgt {

inline constexpr double kDeg = std::numbers::pi / 180.0;

struct StampedPose {
  double tau = 0.0;
  Pose pose;
};

/// Pose of marker frame M in the MoCap frame P, MoCap clock.
using MoCapSample = StampedPose;
/// Pose of device frame D in its own map frame H, DUT clock.
using DutSample = StampedPose;

struct ImuSample {
  double tau = 0.0;  // IMU clock
  Vec3 omega = Vec3::Zero();  // rad/s
  Vec3 accel = Vec3::Zero();  // m/s^2
};

/// Per-sample discrete standard deviations at the stream rates.
struct NoiseSpec {
  double mocap_sigma_p = 4.2e-4;      // m
  double mocap_sigma_r = 0.1 * kDeg;  // rad
  double acc_nd = 1.1e-2;             // m/s^2
  double acc_rw = 2.1e-6;             // m/s^2 per IMU step
  double gyr_nd = 4.8e-2 * kDeg;      // rad/s
  double gyr_rw = 1.4e-5 * kDeg;      // rad/s per IMU step
  double clock_drift = 1e-3 / 60.0;   // s/s

  bool valid() const {
    return mocap_sigma_p > 0 && mocap_sigma_r > 0 && acc_nd > 0 && acc_rw > 0 && gyr_nd > 0 &&
           gyr_rw > 0 && clock_drift > 0;
  }
};

struct MeasurementSet {
  std::vector<MoCapSample> mocap;
  std::vector<ImuSample> imu;
  std::vector<DutSample> dut;
  NoiseSpec noise;
};

}  // namespace hpgt
