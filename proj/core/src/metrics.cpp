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

#include "hpgt/metrics.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hpgt/errors.hpp"

namespace hpgt {

std::vector<Match> associate(const std::vector<StampedPose>& a, const std::vector<StampedPose>& b,
                             double max_dt) {
  std::vector<Match> out;
  std::size_t j = 0;
  for (std::size_t i = 0; i < a.size() && !b.empty(); ++i) {
    const double t = a[i].tau;
    while (j + 1 < b.size() && std::abs(b[j + 1].tau - t) <= std::abs(b[j].tau - t)) ++j;
    if (std::abs(b[j].tau - t) > max_dt) continue;
    if (!out.empty() && out.back().second == j) {
      // keep the closer of the two candidates for b[j]
      const double prev = std::abs(a[out.back().first].tau - b[j].tau);
      if (std::abs(t - b[j].tau) < prev) out.back() = {i, j};
      continue;
    }
    out.emplace_back(i, j);
  }
  if (out.empty()) throw Error(ErrorCode::kNoMatches, "no stamps match within max_dt");
  return out;
}

Pose align_rigid(const std::vector<StampedPose>& a, const std::vector<StampedPose>& b,
                 const std::vector<Match>& matches) {
  if (matches.size() < 3) throw Error(ErrorCode::kDegenerate, "alignment needs 3 matches");
  Vec3 ca = Vec3::Zero(), cb = Vec3::Zero();
  for (const auto& [i, j] : matches) {
    ca += a[i].pose.p();
    cb += b[j].pose.p();
  }
  ca /= double(matches.size());
  cb /= double(matches.size());
  Mat3 S = Mat3::Zero();
  for (const auto& [i, j] : matches) S += (b[j].pose.p() - cb) * (a[i].pose.p() - ca).transpose();
  Eigen::JacobiSVD<Mat3> svd(S, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (sv[0] <= 0.0 || sv[1] < 1e-9 * sv[0]) {
    throw Error(ErrorCode::kDegenerate, "positions are collinear");
  }
  Mat3 D = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) D(2, 2) = -1.0;
  const Mat3 R = svd.matrixU() * D * svd.matrixV().transpose();
  return Pose(Rotation::unchecked(R), cb - R * ca);
}

namespace {

// Angle of R_a^T R_b from the chordal distance, exact zero for equal inputs.
double angle_between(const Mat3& a, const Mat3& b) {
  const double chord = (a - b).norm() / (2.0 * std::sqrt(2.0));
  return 2.0 * std::asin(std::min(1.0, chord));
}

}  // namespace

MetricReport compute_metrics(const std::vector<StampedPose>& est,
                             const std::vector<StampedPose>& ref, MetricMode mode,
                             int rel_stride, double max_dt) {
  if (rel_stride < 1) throw Error(ErrorCode::kBadConfig, "relative stride must be >= 1");
  const std::vector<Match> m = associate(est, ref, max_dt);
  MetricReport r;
  r.n_matched = m.size();
  if (mode == MetricMode::kAligned) r.alignment = align_rigid(est, ref, m);
  std::vector<Pose> E, G;
  E.reserve(m.size());
  G.reserve(m.size());
  for (const auto& [i, j] : m) {
    E.push_back(r.alignment * est[i].pose);
    G.push_back(ref[j].pose);
  }
  double sr = 0.0, sp = 0.0;
  for (std::size_t k = 0; k < E.size(); ++k) {
    sr += std::pow(angle_between(G[k].R(), E[k].R()), 2);
    sp += (E[k].p() - G[k].p()).squaredNorm();
  }
  r.are_deg = std::sqrt(sr / double(E.size())) / kDeg;
  r.ate_mm = std::sqrt(sp / double(E.size())) * 1e3;
  double rr = 0.0, rp = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k + std::size_t(rel_stride) < E.size(); ++k) {
    const std::size_t l = k + std::size_t(rel_stride);
    const Pose de = pose_inverse(E[k]) * E[l];
    const Pose dg = pose_inverse(G[k]) * G[l];
    rr += std::pow(angle_between(dg.R(), de.R()), 2);
    rp += (dg.R().transpose() * (de.p() - dg.p())).squaredNorm();
    ++n;
  }
  if (n > 0) {
    r.rre_deg = std::sqrt(rr / double(n)) / kDeg;
    r.rte_mm = std::sqrt(rp / double(n)) * 1e3;
  }
  return r;
}

std::string to_text(const MetricReport& r) {
  std::ostringstream os;
  char buf[64];
  auto num = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    os << key << '=' << buf << '\n';
  };
  num("are_deg", r.are_deg);
  num("ate_mm", r.ate_mm);
  num("rre_deg", r.rre_deg);
  num("rte_mm", r.rte_mm);
  os << "n_matched=" << r.n_matched << '\n';
  return os.str();
}

}  // namespace hpgt
