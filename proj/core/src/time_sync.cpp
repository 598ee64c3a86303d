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

#include "hpgt/time_sync.hpp"

#include <algorithm>
#include <cmath>

#include "hpgt/errors.hpp"

namespace hpgt {

RateSignal resample(const std::vector<double>& t, const std::vector<double>& v, double rate_hz) {
  if (t.size() < 2) throw Error(ErrorCode::kTooFewSamples, "need at least 2 samples to resample");
  RateSignal out;
  out.rate_hz = rate_hz;
  const long k0 = long(std::ceil(t.front() * rate_hz - 1e-9));
  const long k1 = long(std::floor(t.back() * rate_hz + 1e-9));
  out.first_index = k0;
  std::size_t j = 0;
  for (long k = k0; k <= k1; ++k) {
    const double tk = double(k) / rate_hz;
    while (j + 2 < t.size() && t[j + 1] < tk) ++j;
    const double a = (tk - t[j]) / (t[j + 1] - t[j]);
    out.values.push_back((1.0 - std::clamp(a, 0.0, 1.0)) * v[j] + std::clamp(a, 0.0, 1.0) * v[j + 1]);
  }
  return out;
}

RateSignal angular_rate_signal(const std::vector<StampedPose>& poses, double rate_hz) {
  if (poses.size() < 3) throw Error(ErrorCode::kTooFewSamples, "pose stream needs >= 3 samples");
  const double span = poses.back().tau - poses.front().tau;
  const double src_rate = double(poses.size() - 1) / span;
  const std::size_t stride = std::max<std::size_t>(1, std::size_t(std::lround(src_rate / rate_hz)));
  std::vector<double> t, v;
  for (std::size_t i = 0; i + stride < poses.size(); i += stride) {
    const StampedPose& a = poses[i];
    const StampedPose& b = poses[i + stride];
    const double w = so3_log_mat(a.pose.R().transpose() * b.pose.R()).norm() / (b.tau - a.tau);
    t.push_back(0.5 * (a.tau + b.tau));
    v.push_back(w);
  }
  if (t.size() < 2) throw Error(ErrorCode::kTooFewSamples, "pose stream too short");
  return resample(t, v, rate_hz);
}

RateSignal imu_rate_signal(const std::vector<ImuSample>& imu, double rate_hz) {
  if (imu.size() < 3) throw Error(ErrorCode::kTooFewSamples, "imu stream needs >= 3 samples");
  std::vector<double> t, v;
  t.reserve(imu.size());
  v.reserve(imu.size());
  for (const ImuSample& s : imu) {
    t.push_back(s.tau);
    v.push_back(s.omega.norm());
  }
  return resample(t, v, rate_hz);
}

namespace {

double variance(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= double(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / double(x.size());
}

}  // namespace

double cross_correlate_offset(const RateSignal& a, const RateSignal& b, double max_lag) {
  if (std::abs(a.rate_hz - b.rate_hz) > 1e-9 * a.rate_hz) {
    throw Error(ErrorCode::kNoOverlap, "signals use different resample rates");
  }
  if (a.values.size() < 3 || b.values.size() < 3) {
    throw Error(ErrorCode::kNoOverlap, "signals too short");
  }
  const double floor = kFlatRateStd * kFlatRateStd;
  if (variance(a.values) < floor || variance(b.values) < floor) {
    throw Error(ErrorCode::kFlatSignal, "no angular motion to correlate");
  }
  const double rate = a.rate_hz;
  const long max_l = long(std::floor(max_lag * rate + 1e-9));
  const long na = long(a.values.size()), nb = long(b.values.size());
  const long min_overlap = std::max<long>(3, std::min(na, nb) / 2);

  // b[k] pairs with a at grid index (b.first + k + L)
  const long base = b.first_index - a.first_index;
  std::vector<double> corr(2 * max_l + 1, -2.0);
  for (long L = -max_l; L <= max_l; ++L) {
    const long k_lo = std::max<long>(0, -(base + L));
    const long k_hi = std::min<long>(nb, na - (base + L));
    const long n = k_hi - k_lo;
    if (n < min_overlap) continue;
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (long k = k_lo; k < k_hi; ++k) {
      const double x = a.values[k + base + L], y = b.values[k];
      sa += x;
      sb += y;
      saa += x * x;
      sbb += y * y;
      sab += x * y;
    }
    const double va = saa - sa * sa / n, vb = sbb - sb * sb / n;
    if (va <= 1e-12 * n || vb <= 1e-12 * n) continue;
    corr[L + max_l] = (sab - sa * sb / n) / std::sqrt(va * vb);
  }
  const auto it = std::max_element(corr.begin(), corr.end());
  if (*it < -1.5) throw Error(ErrorCode::kNoOverlap, "signals do not overlap within max lag");
  const long idx = long(it - corr.begin());
  double frac = 0.0;
  if (idx > 0 && idx + 1 < long(corr.size()) && corr[idx - 1] > -1.5 && corr[idx + 1] > -1.5) {
    const double cm = corr[idx - 1], c0 = corr[idx], cp = corr[idx + 1];
    const double den = cm - 2.0 * c0 + cp;
    if (den < 0.0) frac = std::clamp(0.5 * (cm - cp) / den, -0.5, 0.5);
  }
  return (double(idx - max_l) + frac) / rate;
}

}  // namespace hpgt
