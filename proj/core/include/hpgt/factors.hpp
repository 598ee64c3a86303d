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

#include <vector>

#include "hpgt/measurements.hpp"
#include "hpgt/state.hpp"

namespace hpgt {

using Mat63 = Eigen::Matrix<double, 6, 3>;
using Mat62 = Eigen::Matrix<double, 6, 2>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

// All residuals are whitened and ordered rotation first, translation second.
// Rotations are perturbed on the right (R <- R Exp(d)), except the world
// tilt: R_W_P = Exp(phi) with phi_z held fixed and d added to (phi_x, phi_y).
// Jacobians named J_t are derivatives with respect to the global sample time.

struct MocapFactor {
  Vec6 r = Vec6::Zero();
  Mat63 J_rot, J_pos;        // body rotation error, body position
  Mat63 J_bm_rot, J_bm_pos;  // T_B_M
  Mat62 J_tilt;              // T_W_P tilt
  Vec6 J_t;
};

/// r_R = Log(R~^-1 R_P_W R_W_B R_B_M), r_p = p_pred - p~.
MocapFactor mocap_factor(const StampedPose& m, const BodyKinematics& k, const CalibState& c,
                         double sigma_r, double sigma_p, bool jac);

struct GyroFactor {
  Vec3 r = Vec3::Zero();
  Mat3 J_w, J_bias, J_rwa, J_bi_rot;
  Mat36 J_Mw;
  Vec3 J_t;
};

/// r = M_w R_w_a R_B_I^T w_B + b_w - w~. `bias_rate` is db_w/dt.
GyroFactor gyro_factor(const ImuSample& s, const BodyKinematics& k, const Vec3& bias,
                       const Vec3& bias_rate, const CalibState& c, double sigma, bool jac);

struct AccelFactor {
  Vec3 r = Vec3::Zero();
  Mat3 J_rot, J_acc, J_w, J_dw, J_bias, J_bi_rot, J_bi_pos;
  Mat36 J_Ma;
  Vec3 J_g;
  Vec3 J_t;
};

/// a_I = (R_W_B R_B_I)^T (Rddot p_B_I + pddot - g_W); r = M_a a_I + b_a - a~.
AccelFactor accel_factor(const ImuSample& s, const BodyKinematics& k, const Vec3& bias,
                         const Vec3& bias_rate, const CalibState& c, double sigma, bool jac);

struct DutPair {
  int i = 0;
  int j = 0;
  double weight_r = 1.0;
  double weight_p = 1.0;
  bool degenerate = false;  // reference screw was degenerate, weights floored
};

struct PairThresholds {
  double rotation = 5.0 * kDeg;
  double translation = 0.1;
  double duration = 0.5;
};

/// Greedy non-overlapping scan; a pair closes as soon as any threshold is met.
std::vector<DutPair> select_dut_pairs(const std::vector<DutSample>& dut,
                                      const PairThresholds& th = {});

inline constexpr double kWeightFloor = 1e-3;

struct DutWeights {
  double w_r = 1.0;
  double w_p = 1.0;
  bool degenerate = false;
};

/// Screw-congruence weights exp(-((x_D - x_B) / x_B)^2) for x in {theta, d},
/// clamped to [w_min, 1]. A degenerate reference gives (w_min, w_min).
DutWeights dut_weights(const Pose& dut_rel, const Pose& ref_rel, double w_min = kWeightFloor);

struct DutFactor {
  Vec6 r = Vec6::Zero();
  Mat63 J_bd_rot, J_bd_pos;  // T_B_D
  Vec6 J_ti, J_tj;           // global times of the two ends
};

/// Relative pose residual between DUT samples a (earlier) and b (later).
/// Body kinematics enter only as a fixed reference: no Jacobian is returned
/// for the trajectory.
DutFactor dut_factor(const DutSample& a, const DutSample& b, const BodyKinematics& ki,
                     const BodyKinematics& kj, const CalibState& c, double sigma_r,
                     double sigma_p, double w_r, double w_p, bool jac);

/// Relative body motion T_W_B(ti)^-1 T_W_B(tj).
Pose relative_pose(const BodyKinematics& ki, const BodyKinematics& kj);

/// (cp1 - cp0) / sqrt(dt) / density, density = per-step std * sqrt(rate).
inline Vec3 bias_rw_residual(const Vec3& cp0, const Vec3& cp1, double dt, double density) {
  return (cp1 - cp0) / (std::sqrt(dt) * density);
}

// State-level wrappers used by tests and diagnostics. Throw OutOfDomain.
Vec6 mocap_residual(const StampedPose& m, const State& s, const NoiseSpec& n);
Vec3 gyro_residual(const ImuSample& m, const State& s, const NoiseSpec& n);
Vec3 accel_residual(const ImuSample& m, const State& s, const NoiseSpec& n);
Vec6 dut_relative_residual(const std::vector<DutSample>& dut, const DutPair& pair, const State& s,
                           double sigma_r, double sigma_p);

}  // namespace hpgt
