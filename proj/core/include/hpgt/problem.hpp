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
#include <vector>

#include "hpgt/config.hpp"
#include "hpgt/factors.hpp"
#include "hpgt/measurements.hpp"
#include "hpgt/state.hpp"

namespace hpgt {

struct EstimatorOptions {
  // continuous-time representation
  double knot_dt = 0.05;
  double bias_dt = 5.0;
  double offset_dt = 20.0;
  // DUT relative factors
  double dut_sigma_r = 0.05 * kDeg;
  double dut_sigma_p = 2e-3;
  PairThresholds pairs;
  double weight_floor = kWeightFloor;
  // optimizer
  int max_iterations = 100;
  double lambda0 = 1e-8;
  double rel_decrease_tol = 1e-8;
  double grad_tol = 1e-10;
  double cost_floor = 1e-14;  // roundoff level of a zero-residual problem
  bool two_stage = true;
  bool fixed_offsets = false;
  bool estimate_tilt = true;
  bool fd_check = false;
  int threads = 0;  // 0: worker_count()
  // initialization
  double sync_rate = 100.0;
  double max_lag = 5.0;
  double keyframe_dt = 0.25;
  std::optional<Vec3> lever_arm;  // known p_M_I, skips its estimation
  // measurements closer than this to a spline domain end are dropped
  double domain_margin = 0.02;
  double output_rate = 90.0;

  static EstimatorOptions from_config(const Config& cfg);
};

enum class BlockKind { kMocap, kImu, kDut, kBiasW, kBiasA };

struct Block {
  BlockKind kind;
  int index;  // sample index, pair index, or spline interval
};

/// Parameter vector: 6 per motion knot (rotation, translation) first, then
/// the time-invariant and slow parameters. Offsets of -1 mark frozen blocks.
struct ParamLayout {
  int knots = 0;
  int bias_w = -1, bias_a = -1;
  int off_M = -1, off_D = -1;
  int bm = -1, bd = -1;
  int tilt = -1, g = -1;
  int rwa = -1, mw = -1, ma = -1;
  int n_bias_w = 0, n_bias_a = 0, n_off_M = 0, n_off_D = 0;
  bool shared_offsets = false;
  int extras = 0;

  int total() const { return 6 * knots + extras; }
};

ParamLayout make_layout(const State& s, bool intrinsics_free, bool shared_offsets,
                        bool estimate_tilt);

struct Problem {
  MeasurementSet data;
  EstimatorOptions opt;
  std::vector<DutPair> pairs;
  std::vector<Block> blocks;
  std::size_t n_mocap = 0, n_imu = 0, n_bias = 0;
  std::size_t dropped_mocap = 0, dropped_imu = 0, dropped_dut = 0;
  double imu_rate_hz = 500.0;
};

/// One block per usable MoCap sample, IMU sample (gyro + accel), DUT pair
/// and bias interval. Throws EmptyProblem or DomainMismatch.
Problem build_problem(const MeasurementSet& set, const State& seed, const EstimatorOptions& opt);

inline constexpr int kMaxExtraCols = 32;

struct BlockJacobian {
  int rows = 0;
  Vec6 r = Vec6::Zero();
  int first_knot = -1;  // -1: no motion-knot columns
  Eigen::Matrix<double, 6, 24> Jk;
  int n_extra = 0;
  int cols[kMaxExtraCols];  // extra-parameter column (relative to the extras start)
  Eigen::Matrix<double, 6, kMaxExtraCols> Je;
};

/// Whitened residual and Jacobian of one block. Throws OutOfDomain when a
/// mapped time leaves the spline domain.
void evaluate_block(const Problem& p, const State& s, const ParamLayout& L, const Block& b,
                    bool jac, BlockJacobian& out);

/// Apply an increment in the layout's tangent space.
State retract(const State& s, const ParamLayout& L, const VecX& delta);

/// Recompute screw-congruence weights of all DUT pairs against the current trajectory.
void update_dut_weights(Problem& p, const State& s);

}  // namespace hpgt
