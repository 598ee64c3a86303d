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

namespace hpgt {

/// Scalar signal sampled on the grid tau_k = k / rate_hz.
struct RateSignal {
  long first_index = 0;
  double rate_hz = 100.0;
  std::vector<double> values;

  double tau(std::size_t k) const { return double(first_index + long(k)) / rate_hz; }
};

/// Angular speed from consecutive poses, stamped at interval midpoints and
/// linearly resampled. Intervals span at least one resample period so that
/// high-rate jitter is not amplified by the differencing.
RateSignal angular_rate_signal(const std::vector<StampedPose>& poses, double rate_hz = 100.0);

/// |omega| of the gyro samples, linearly resampled.
RateSignal imu_rate_signal(const std::vector<ImuSample>& imu, double rate_hz = 100.0);

/// Linear resampling of (t, v) onto the grid k / rate_hz inside [t.front(), t.back()].
RateSignal resample(const std::vector<double>& t, const std::vector<double>& v, double rate_hz);

/// Signals whose standard deviation is below this are flat (rad/s).
inline constexpr double kFlatRateStd = 5e-3;

/// Offset dt such that b(tau) ~ a(tau + dt), from the peak of the
/// zero-mean, unit-variance cross-correlation over lags in [-max_lag, max_lag],
/// refined by a parabola through the peak. Throws NoOverlap or FlatSignal.
double cross_correlate_offset(const RateSignal& a, const RateSignal& b, double max_lag = 5.0);

}  // namespace hpgt
