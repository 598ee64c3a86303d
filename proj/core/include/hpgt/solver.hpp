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

#include <string>
#include <vector>

#include "hpgt/measurements.hpp"
#include "hpgt/problem.hpp"
#include "hpgt/state.hpp"

namespace hpgt {

struct ClassRms {
  double mocap = 0.0;
  double gyro = 0.0;
  double accel = 0.0;
  double dut = 0.0;
  double bias = 0.0;
};

struct SolveReport {
  int iterations = 0;
  int stages = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::string termination;
  ClassRms rms;  // whitened residual RMS per factor class at the solution
  std::size_t dut_pairs = 0;
  std::size_t degenerate_pairs = 0;
  std::vector<std::string> warnings;
};

struct SolveResult {
  State state;
  SolveReport report;
};

/// 0.5 * sum of squared whitened residuals. Throws OutOfDomain.
double total_cost(const Problem& p, const State& s, ClassRms* rms = nullptr);

/// Levenberg-Marquardt over the problem, intrinsics frozen in a first stage
/// when opt.two_stage is set. DUT weights are refreshed at each stage start.
/// Throws NumericalFailure naming the offending block.
SolveResult solve(Problem& p, const State& seed);

struct FdCheckReport {
  std::size_t blocks = 0;
  double max_rel_error = 0.0;
  std::string worst;  // block description
};

/// Compares analytic block Jacobians against central differences through
/// the retraction on up to `max_per_class` blocks of every class.
FdCheckReport fd_check(const Problem& p, const State& s, bool intrinsics_free,
                       int max_per_class = 20, double step = 1e-6);

enum class OutputFrame { kDut, kBody };

struct Trajectory {
  std::vector<StampedPose> poses;
  std::size_t trimmed = 0;  // grid points outside the estimated domain
};

/// Uniformly sampled output. kDut: T_W_B(t) T_B_D at DUT-clock stamps k / rate,
/// t = tau + off_D(tau). kBody: T_W_B(t) at global stamps. Poses are expressed
/// in the gravity-aligned frame sharing the origin and heading of P.
Trajectory extract_trajectory(const State& s, double rate_hz, OutputFrame frame);

}  // namespace hpgt
