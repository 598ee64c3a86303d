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
#include <utility>
#include <vector>

#include "hpgt/measurements.hpp"

namespace hpgt {

/// TUM format: `t px py pz qx qy qz qw` per line, `#` comments. Quaternions
/// within 1e-3 of unit norm are renormalized, others raise BadQuaternion.
std::vector<StampedPose> parse_pose_file(const std::string& path);
std::vector<StampedPose> parse_pose_text(const std::string& text);

/// CSV `t,wx,wy,wz,ax,ay,az` in SI units. `#` comments and one header row
/// are tolerated.
std::vector<ImuSample> parse_imu_file(const std::string& path);
std::vector<ImuSample> parse_imu_text(const std::string& text);

/// 17 significant digits; throws IoError.
void write_trajectory(const std::string& path, const std::vector<StampedPose>& samples);
void write_imu_file(const std::string& path, const std::vector<ImuSample>& samples);

struct Gap {
  double begin = 0.0;
  double end = 0.0;
};

struct StreamReport {
  std::size_t count = 0;
  double t_begin = 0.0;
  double t_end = 0.0;
  double rate_hz = 0.0;   // from the median spacing
  double jitter = 0.0;    // std of spacing / median spacing, gaps excluded
  std::vector<Gap> gaps;  // spacing > 3x nominal
};

struct ValidationReport {
  StreamReport mocap, imu, dut;
  double overlap_begin = 0.0;
  double overlap_end = 0.0;
  std::vector<std::string> warnings;
};

/// Throws EmptyStream if the stream has fewer than 2 samples.
StreamReport validate_stream(const std::vector<double>& stamps, const std::string& name,
                             std::vector<std::string>* warnings = nullptr);
ValidationReport validate(const MeasurementSet& set);

std::vector<double> stamps_of(const std::vector<StampedPose>& s);
std::vector<double> stamps_of(const std::vector<ImuSample>& s);

/// Shift all streams by a common origin when stamps exceed one day.
/// Returns the subtracted origin (0 when nothing changed).
double rebase_timestamps(MeasurementSet& set);

}  // namespace hpgt
