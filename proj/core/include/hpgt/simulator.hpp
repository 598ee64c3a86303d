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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hpgt/config.hpp"
#include "hpgt/measurements.hpp"
#include "hpgt/state.hpp"

namespace hpgt {

struct Sinusoid {
  double amplitude = 0.0;  // m or rad
  double freq_hz = 0.0;
  double phase = 0.0;  // rad
};

/// Value and first three derivatives of a sum of sinusoids.
std::array<double, 4> eval_sinusoids(const std::vector<Sinusoid>& s, double t);

struct TruthSample {
  Mat3 R = Mat3::Identity();  // R_W_B
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();
  Vec3 w = Vec3::Zero();   // body rate
  Vec3 dw = Vec3::Zero();  // body angular acceleration
};

/// Body motion in W. Rotation is R_z(yaw) R_y(pitch) R_x(roll), each angle a
/// sum of sinusoids; position is a base point plus per-axis sinusoids.
struct AnalyticTrajectory {
  std::array<std::vector<Sinusoid>, 3> angles;  // roll, pitch, yaw
  std::array<std::vector<Sinusoid>, 3> position;
  Vec3 base = Vec3(0.0, 0.0, 1.2);

  TruthSample eval(double t) const;
  Pose pose(double t) const;
};

/// Sensor clock tau to global time: t = tau + c0 + c1 * tau.
struct ClockModel {
  double c0 = 0.0;
  double c1 = 0.0;

  double offset(double tau) const { return c0 + c1 * tau; }
  double global(double tau) const { return tau + offset(tau); }
  double sensor(double t) const { return (t - c0) / (1.0 + c1); }
};

struct SimConfig {
  double duration = 60.0;
  double mocap_rate = 300.0;
  double imu_rate = 500.0;
  double dut_rate = 90.0;
  bool noiseless = false;
  bool degraded = false;  // halve amplitudes, no roll
  double amplitude_scale = 1.0;
  NoiseSpec noise;
  // DUT odometry: per-step relative noise (norm std) and drift-rate random walk
  double dut_noise_r = 0.02 * kDeg;
  double dut_noise_p = 3e-4;
  double dut_drift_r = 5e-6;  // rad/s per step
  double dut_drift_p = 8e-6;  // m/s per step
  double max_offset = 0.5;    // s
  double max_lever = 0.2;     // m
  double max_tilt = 2.0 * kDeg;
  bool random_intrinsics = true;
  // > 0: the true motion is the B-spline fit of the sinusoids on this knot
  // spacing (grid anchored at -1 s), so that it is exactly representable
  double spline_knot_dt = 0.0;
  double gyro_bias0 = 0.1 * kDeg;  // rad/s, per-axis std
  double accel_bias0 = 0.02;       // m/s^2, per-axis std
  std::uint64_t seed = 1;          // trajectory phases and noise
  std::uint64_t calib_seed = 1;    // extrinsics, clocks, intrinsics

  static SimConfig from_config(const Config& cfg);
};

struct SimTruth {
  AnalyticTrajectory traj;
  std::optional<So3Spline> rot_spline;
  std::optional<Spline3> trans_spline;
  CalibState calib;
  ClockModel clock_M, clock_D;  // the IMU clock is the global clock
  Pose T_H_W;                   // DUT map frame
  double t_begin = 0.0, t_end = 0.0;
  std::vector<ImuSample> bias;  // injected biases per IMU sample (omega: gyro, accel: accel)

  TruthSample motion(double t) const;
  Pose pose(double t) const;
};

struct SimData {
  SimTruth truth;
  MeasurementSet set;
};

/// Deterministic given the config seeds. Throws BadConfig.
SimTruth make_truth(const SimConfig& cfg);

SimData simulate(const SimConfig& cfg);

/// State whose residuals vanish on noiseless data: the true motion splines
/// (spline_knot_dt > 0 required), linear clocks on offset grids covering each
/// stream, biases constant at their initial values.
State truth_state(const SimData& d, double bias_dt = 5.0, double offset_dt = 20.0);

/// True T_W_B(t) T_B_D at DUT-clock stamps k / rate inside the recorded span.
std::vector<StampedPose> truth_dut_trajectory(const SimTruth& truth, double rate_hz);

/// True T_W_B at global stamps k / rate.
std::vector<StampedPose> truth_body_trajectory(const SimTruth& truth, double rate_hz);

/// Raw MoCap samples mapped into DUT-frame poses in W with DUT-clock stamps,
/// using the true calibration.
std::vector<StampedPose> mocap_as_dut(const SimTruth& truth, const std::vector<MoCapSample>& m);

/// Writes mocap.txt, imu.csv, dut.txt, truth_body.txt (1 kHz), truth_dut.txt
/// (DUT rate) and truth_calib.txt. Throws IoError.
void export_set(const SimData& d, const std::string& dir, double dut_rate = 90.0);

/// key=value dump of a calibration and clocks.
std::string calib_text(const CalibState& c, const ClockModel& m, const ClockModel& d);

}  // namespace hpgt
