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

using Match = std::pair<std::size_t, std::size_t>;

/// Nearest-stamp one-to-one matching within max_dt. Throws NoMatches.
std::vector<Match> associate(const std::vector<StampedPose>& a, const std::vector<StampedPose>& b,
                             double max_dt = 2e-3);

/// Least-squares X with p_b ~ X * p_a over the matched positions (no scale).
/// Throws Degenerate for fewer than 3 matches or collinear positions.
Pose align_rigid(const std::vector<StampedPose>& a, const std::vector<StampedPose>& b,
                 const std::vector<Match>& matches);

enum class MetricMode { kDirect, kAligned };

struct MetricReport {
  double are_deg = 0.0;
  double ate_mm = 0.0;
  double rre_deg = 0.0;
  double rte_mm = 0.0;
  std::size_t n_matched = 0;
  Pose alignment;  // applied to the estimate
};

MetricReport compute_metrics(const std::vector<StampedPose>& est,
                             const std::vector<StampedPose>& ref, MetricMode mode,
                             int rel_stride = 1, double max_dt = 2e-3);

/// `key=value` lines.
std::string to_text(const MetricReport& r);

}  // namespace hpgt
