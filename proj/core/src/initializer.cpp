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

#include "hpgt/initializer.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "hpgt/errors.hpp"
#include "hpgt/time_sync.hpp"

namespace hpgt {

namespace {

// Lagrange interpolation of a sample channel at the middle of step i, using
// up to two neighbours on each side.
Vec3 mid_value(const std::vector<ImuSample>& imu, std::size_t i, Vec3 ImuSample::*field) {
  const double tm = 0.5 * (imu[i].tau + imu[i + 1].tau);
  const std::size_t lo = i > 0 ? i - 1 : i;
  const std::size_t hi = i + 2 < imu.size() ? i + 2 : i + 1;
  Vec3 out = Vec3::Zero();
  for (std::size_t j = lo; j <= hi; ++j) {
    double w = 1.0;
    for (std::size_t k = lo; k <= hi; ++k) {
      if (k != j) w *= (tm - imu[k].tau) / (imu[j].tau - imu[k].tau);
    }
    out += w * (imu[j].*field);
  }
  return out;
}

}  // namespace

Preintegration preintegrate(const std::vector<ImuSample>& imu, const Vec3& bias_w,
                            const Vec3& bias_a) {
  if (imu.size() < 2) throw Error(ErrorCode::kTooFewSamples, "preintegration needs 2 samples");
  for (std::size_t i = 0; i + 1 < imu.size(); ++i) {
    if (!(imu[i + 1].tau > imu[i].tau)) {
      throw Error(ErrorCode::kNonMonotonicTime, "IMU stamps not increasing");
    }
  }
  Preintegration pi;
  for (std::size_t i = 0; i + 1 < imu.size(); ++i) {
    const double h = imu[i + 1].tau - imu[i].tau;
    const Vec3 w0 = imu[i].omega - bias_w;
    const Vec3 w1 = imu[i + 1].omega - bias_w;
    const Vec3 wm = mid_value(imu, i, &ImuSample::omega) - bias_w;
    // Simpson increments with the two-sample coning term
    const Vec3 phi = h / 6.0 * (w0 + 4.0 * wm + w1) + h * h / 12.0 * w0.cross(w1);
    const Vec3 phi_m = h / 24.0 * (5.0 * w0 + 8.0 * wm - w1) + h * h / 48.0 * w0.cross(wm);
    const Mat3 R1 = pi.dR * so3_exp_mat(phi);
    const Mat3 Rm = pi.dR * so3_exp_mat(phi_m);
    const Vec3 f0 = pi.dR * (imu[i].accel - bias_a);
    const Vec3 fm = Rm * (mid_value(imu, i, &ImuSample::accel) - bias_a);
    const Vec3 f1 = R1 * (imu[i + 1].accel - bias_a);
    pi.alpha += pi.beta * h + h * h / 6.0 * (f0 + 2.0 * fm);
    pi.beta += h / 6.0 * (f0 + 4.0 * fm + f1);
    pi.dR = R1;
    pi.dt += h;
  }
  pi.dR = orthonormalize(pi.dR);
  return pi;
}

std::vector<ImuSample> imu_slice(const std::vector<ImuSample>& imu, double t0, double t1) {
  std::vector<ImuSample> out;
  if (imu.size() < 2 || t1 <= t0) return out;
  auto at = [&](double t) {
    auto it = std::lower_bound(imu.begin(), imu.end(), t,
                               [](const ImuSample& s, double x) { return s.tau < x; });
    if (it == imu.begin()) return *it;
    if (it == imu.end()) return imu.back();
    const ImuSample& b = *it;
    const ImuSample& a = *(it - 1);
    const double u = (t - a.tau) / (b.tau - a.tau);
    return ImuSample{t, a.omega + u * (b.omega - a.omega), a.accel + u * (b.accel - a.accel)};
  };
  if (t0 < imu.front().tau || t1 > imu.back().tau) return out;
  out.push_back(at(t0));
  for (const ImuSample& s : imu) {
    if (s.tau > t0 && s.tau < t1) out.push_back(s);
  }
  out.push_back(at(t1));
  return out;
}

HandEyeRotation init_rotation_handeye(const std::vector<std::pair<Rotation, Rotation>>& pairs) {
  if (pairs.size() < 2) throw Error(ErrorCode::kDegenerateMotion, "hand-eye needs 2 motion pairs");
  MatX A(4 * pairs.size(), 4);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const UnitQuaternion qa = UnitQuaternion::from_rotation(pairs[i].first).canonical();
    const UnitQuaternion qb = UnitQuaternion::from_rotation(pairs[i].second).canonical();
    A.block<4, 4>(4 * long(i), 0) = quat_left(qa) - quat_right(qb);
  }
  Eigen::JacobiSVD<MatX> svd(A, Eigen::ComputeFullV);
  const Vec4 s = svd.singularValues();
  HandEyeRotation out;
  out.gap = s[3] > 0.0 ? s[2] / s[3] : std::numeric_limits<double>::infinity();
  if (s[2] <= 1e-9 * std::max(1.0, s[0]) || out.gap < 10.0) {
    throw Error(ErrorCode::kDegenerateMotion,
                "degenerate motion: hand-eye rotation axes nearly parallel (gap " +
                    std::to_string(out.gap) + ")");
  }
  const Vec4 v = svd.matrixV().col(3);
  out.q = UnitQuaternion::from_vec(v).canonical();
  return out;
}

TranslationGravity init_translation_gravity(const std::vector<KeyframeMocap>& kf,
                                            const std::vector<Preintegration>& preints,
                                            const Rotation& R_M_I,
                                            const std::optional<Vec3>& lever_arm) {
  if (kf.size() < 4 || preints.size() + 1 != kf.size()) {
    throw Error(ErrorCode::kRankDeficient, "translation init needs 3 keyframe pairs");
  }
  const int n = int(preints.size());
  const int nv = n + 1;
  const int off_p = 0, off_g = lever_arm ? 0 : 3, off_v = off_g + 3;
  const int cols = off_v + 3 * nv;
  MatX A = MatX::Zero(6 * n, cols);
  VecX b = VecX::Zero(6 * n);
  const Mat3 I = Mat3::Identity();
  for (int k = 0; k < n; ++k) {
    const Preintegration& pi = preints[std::size_t(k)];
    const Mat3& Rk = kf[std::size_t(k)].T_P_M.R();
    const Mat3& Rk1 = kf[std::size_t(k) + 1].T_P_M.R();
    const Vec3& pk = kf[std::size_t(k)].T_P_M.p();
    const Vec3& pk1 = kf[std::size_t(k) + 1].T_P_M.p();
    const Mat3 R_PI = Rk * R_M_I.matrix();
    const double dt = pi.dt;
    const int r = 6 * k;
    // position: (R_{k+1} - R_k) p - v_k dt - dt^2/2 g = p_k - p_{k+1} + R_PI alpha
    Vec3 rhs = pk - pk1 + R_PI * pi.alpha;
    if (lever_arm) {
      rhs -= (Rk1 - Rk) * *lever_arm;
    } else {
      A.block<3, 3>(r, off_p) = Rk1 - Rk;
    }
    A.block<3, 3>(r, off_g) = -0.5 * dt * dt * I;
    A.block<3, 3>(r, off_v + 3 * k) = -dt * I;
    b.segment<3>(r) = rhs;
    // velocity: v_{k+1} - v_k - dt g = R_PI beta
    A.block<3, 3>(r + 3, off_g) = -dt * I;
    A.block<3, 3>(r + 3, off_v + 3 * k) = -I;
    A.block<3, 3>(r + 3, off_v + 3 * (k + 1)) = I;
    b.segment<3>(r + 3) = R_PI * pi.beta;
  }
  const MatX N = A.transpose() * A;
  const VecX rhs = A.transpose() * b;
  // conditioning of the lever arm / gravity block after eliminating velocities
  const int m = off_v;
  const MatX Nvv = N.bottomRightCorner(3 * nv, 3 * nv);
  Eigen::LDLT<MatX> vv(Nvv);
  const MatX S = N.topLeftCorner(m, m) - N.topRightCorner(m, 3 * nv) * vv.solve(N.bottomLeftCorner(3 * nv, m));
  Eigen::SelfAdjointEigenSolver<MatX> es(S);
  const VecX ev = es.eigenvalues();
  if (!(ev[0] > 1e-10 * ev[m - 1])) {
    throw Error(ErrorCode::kRankDeficient,
                "lever arm and gravity not observable from the keyframe motion");
  }
  Eigen::LDLT<MatX> ldlt(N);
  const VecX x = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !x.allFinite()) {
    throw Error(ErrorCode::kRankDeficient, "translation system is singular");
  }
  TranslationGravity out;
  out.p_M_I = lever_arm ? *lever_arm : Vec3(x.segment<3>(off_p));
  out.g_P = x.segment<3>(off_g);
  for (int k = 0; k < nv; ++k) out.velocities.push_back(x.segment<3>(off_v + 3 * k));
  out.residual_rms = std::sqrt((A * x - b).squaredNorm() / double(A.rows()));
  return out;
}

std::optional<Pose> interpolate_pose(const std::vector<StampedPose>& s, double tau) {
  if (s.empty() || tau < s.front().tau || tau > s.back().tau) return std::nullopt;
  auto it = std::lower_bound(s.begin(), s.end(), tau,
                             [](const StampedPose& p, double x) { return p.tau < x; });
  if (it == s.begin()) return it->pose;
  const StampedPose& b = *it;
  const StampedPose& a = *(it - 1);
  const double u = (tau - a.tau) / (b.tau - a.tau);
  const Mat3 R = a.pose.R() * so3_exp_mat(u * so3_log_mat(a.pose.R().transpose() * b.pose.R()));
  return Pose(Rotation::unchecked(R), a.pose.p() + u * (b.pose.p() - a.pose.p()));
}

Pose init_handeye_pose_to_pose(const std::vector<StampedPose>& traj_a,
                               const std::vector<StampedPose>& traj_b, double offset,
                               const PairThresholds& th) {
  std::vector<StampedPose> b_in;
  std::vector<Pose> a_at;
  for (const StampedPose& s : traj_b) {
    if (auto p = interpolate_pose(traj_a, s.tau + offset)) {
      b_in.push_back(s);
      a_at.push_back(*p);
    }
  }
  std::vector<std::pair<Rotation, Rotation>> rot;
  std::vector<std::pair<Pose, Pose>> rel;
  for (const DutPair& pr : select_dut_pairs(b_in, th)) {
    const Pose A = pose_inverse(a_at[std::size_t(pr.i)]) * a_at[std::size_t(pr.j)];
    const Pose B = pose_inverse(b_in[std::size_t(pr.i)].pose) * b_in[std::size_t(pr.j)].pose;
    rot.emplace_back(A.rotation, B.rotation);
    rel.emplace_back(A, B);
  }
  const Mat3 R_X = init_rotation_handeye(rot).q.matrix();
  MatX M(3 * rel.size(), 3);
  VecX y(3 * rel.size());
  for (std::size_t i = 0; i < rel.size(); ++i) {
    const auto& [A, B] = rel[i];
    M.block<3, 3>(3 * long(i), 0) = A.R() - Mat3::Identity();
    y.segment<3>(3 * long(i)) = R_X * B.p() - A.p();
  }
  Eigen::JacobiSVD<MatX> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec3 s = svd.singularValues();
  if (!(s[2] > 1e-3 * s[0])) {
    throw Error(ErrorCode::kDegenerateMotion,
                "degenerate motion: hand-eye translation unobservable along the rotation axis");
  }
  const Vec3 p = svd.solve(y);
  return Pose(Rotation::unchecked(orthonormalize(R_X)), p);
}

InitResult initialize(const MeasurementSet& set, const EstimatorOptions& opt) {
  if (set.imu.size() < 2) throw Error(ErrorCode::kTooFewSamples, "IMU stream too short");
  if (set.mocap.size() < 2) throw Error(ErrorCode::kTooFewSamples, "MoCap stream too short");
  if (set.dut.size() < 2) throw Error(ErrorCode::kTooFewSamples, "DUT stream too short");
  InitResult r;
  const RateSignal imu_sig = imu_rate_signal(set.imu, opt.sync_rate);
  r.off_M = cross_correlate_offset(imu_sig, angular_rate_signal(set.mocap, opt.sync_rate), opt.max_lag);
  r.off_D = cross_correlate_offset(imu_sig, angular_rate_signal(set.dut, opt.sync_rate), opt.max_lag);

  r.t_begin = std::max(set.imu.front().tau, set.mocap.front().tau + r.off_M);
  r.t_end = std::min(set.imu.back().tau, set.mocap.back().tau + r.off_M);
  if (!(r.t_end - r.t_begin > 4.0 * opt.keyframe_dt)) {
    throw Error(ErrorCode::kNoOverlap, "MoCap and IMU overlap too short");
  }

  // gyro bias from an initial static interval, if any
  {
    Vec3 sum = Vec3::Zero();
    double peak = 0.0;
    int n = 0;
    for (const ImuSample& s : set.imu) {
      if (s.tau > set.imu.front().tau + 0.5) break;
      sum += s.omega;
      peak = std::max(peak, s.omega.norm());
      ++n;
    }
    if (n > 10 && peak < 0.05) r.bias_w = sum / double(n);
  }

  std::vector<KeyframeMocap> kf;
  std::vector<Preintegration> pre;
  const double lo = r.t_begin + 1e-6, hi = r.t_end - 1e-6;
  for (double t = lo; t <= hi; t += opt.keyframe_dt) {
    const auto T = interpolate_pose(set.mocap, t - r.off_M);
    if (!T) continue;
    if (!kf.empty()) {
      const auto slice = imu_slice(set.imu, kf.back().t, t);
      if (slice.size() < 2) continue;
      pre.push_back(preintegrate(slice, r.bias_w, Vec3::Zero()));
    }
    kf.push_back({t, *T});
  }
  std::vector<std::pair<Rotation, Rotation>> rot;
  for (std::size_t k = 0; k < pre.size(); ++k) {
    const Mat3 A = kf[k].T_P_M.R().transpose() * kf[k + 1].T_P_M.R();
    rot.emplace_back(Rotation::unchecked(A), Rotation::unchecked(pre[k].dR));
  }
  const HandEyeRotation he = init_rotation_handeye(rot);
  r.R_M_I = Rotation::unchecked(orthonormalize(he.q.matrix()));
  r.handeye_gap = he.gap;
  const TranslationGravity tg = init_translation_gravity(kf, pre, r.R_M_I, opt.lever_arm);
  r.p_M_I = tg.p_M_I;
  r.g_P = tg.g_P;
  r.translation_rms = tg.residual_rms;
  const double gn = r.g_P.norm();
  if (std::abs(gn - 9.81) > 0.05 * 9.81) {
    throw Error(ErrorCode::kDegenerateMotion,
                "degenerate motion: gravity magnitude " + std::to_string(gn) + " outside 9.81 +- 5%");
  }
  r.T_M_D = init_handeye_pose_to_pose(set.mocap, set.dut, r.off_D - r.off_M, opt.pairs);
  return r;
}

State seed_state(const MeasurementSet& set, const InitResult& init, const EstimatorOptions& opt) {
  State s;
  CalibState& c = s.calib;
  const Pose T_M_I(init.R_M_I, init.p_M_I);
  c.T_B_I = Pose::identity();
  c.T_B_M = pose_inverse(T_M_I);
  c.T_B_D = c.T_B_M * init.T_M_D;
  c.T_W_P = Pose(Rotation::unchecked(align_to_down(init.g_P)), Vec3::Zero());
  c.g = init.g_P.norm();

  const KnotGrid grid =
      KnotGrid::anchored_inside(init.t_begin, init.t_end, opt.knot_dt, So3Spline::kOrder);
  const Pose T_M_B = T_M_I;
  std::vector<double> ts;
  std::vector<Mat3> Rs;
  std::vector<Vec3> ps;
  for (const MoCapSample& m : set.mocap) {
    const double t = m.tau + init.off_M;
    if (t < grid.t_begin() || t > grid.t_end(So3Spline::kOrder)) continue;
    const Pose T = c.T_W_P * m.pose * T_M_B;
    ts.push_back(t);
    Rs.push_back(T.R());
    ps.push_back(T.p());
  }
  SplineBundle& sp = s.splines;
  sp.rot = fit_spline(ts, Rs, grid);
  sp.trans = fit_spline<3>(ts, ps, grid, 4);
  const KnotGrid bg = KnotGrid::covering(grid.t_begin(), grid.t_end(4), opt.bias_dt, 2);
  sp.bias_w = Spline3(bg, 2, init.bias_w);
  sp.bias_a = Spline3(bg, 2, Vec3::Zero());
  auto offset_grid = [&](double a, double b) { return KnotGrid::covering(a, b, opt.offset_dt, 2); };
  sp.off_M = TimeOffsetSpline(offset_grid(set.mocap.front().tau, set.mocap.back().tau), init.off_M);
  sp.off_I = TimeOffsetSpline(offset_grid(set.imu.front().tau, set.imu.back().tau), 0.0);
  sp.off_D = TimeOffsetSpline(offset_grid(set.dut.front().tau, set.dut.back().tau), init.off_D);
  return s;
}

}  // namespace hpgt
