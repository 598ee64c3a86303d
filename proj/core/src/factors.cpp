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

#include "hpgt/factors.hpp"

#include <algorithm>
#include <cmath>

#include "hpgt/errors.hpp"

namespace hpgt {

namespace {

// Left-perturbation directions of R_W_P = Exp(phi) for increments of phi_x, phi_y.
Eigen::Matrix<double, 3, 2> tilt_basis(const Mat3& R_WP) {
  const Vec3 phi = so3_log_mat(R_WP);
  return right_jacobian(-phi).leftCols<2>();
}

// d(M x) / d(upper entries of M)
Mat36 upper_jacobian(const Vec3& x) {
  Mat36 J = Mat36::Zero();
  for (int e = 0; e < 6; ++e) J(kUpperRow[e], e) = x[kUpperCol[e]];
  return J;
}

}  // namespace

BodyKinematics body_kinematics(const SplineBundle& s, double t) {
  const So3Eval e = s.rot.kinematics(t, false);
  const BasisEval be = eval_basis(s.trans.grid(), s.trans.order(), t);
  BodyKinematics k;
  k.R = e.R;
  k.w = e.w;
  k.dw = e.dw;
  k.ddw = e.ddw;
  k.p = s.trans.value(be, 0);
  k.v = s.trans.value(be, 1);
  k.a = s.trans.value(be, 2);
  k.j = s.trans.value(be, 3);
  return k;
}

Pose body_pose(const SplineBundle& s, double t) {
  return Pose(s.rot.eval(t), s.trans.eval(t));
}

MocapFactor mocap_factor(const StampedPose& m, const BodyKinematics& k, const CalibState& c,
                         double sigma_r, double sigma_p, bool jac) {
  MocapFactor f;
  const Mat3& R_WP = c.T_W_P.R();
  const Mat3& R_BM = c.T_B_M.R();
  const Vec3& p_BM = c.T_B_M.p();
  const Mat3 RR = k.R * R_BM;
  const Vec3 x = k.R * p_BM + k.p - c.T_W_P.p();
  const Mat3 R_pred = R_WP.transpose() * RR;
  const Vec3 p_pred = R_WP.transpose() * x;
  const Vec3 rr = so3_log_mat(m.pose.R().transpose() * R_pred);
  f.r.head<3>() = rr / sigma_r;
  f.r.tail<3>() = (p_pred - m.pose.p()) / sigma_p;
  if (!jac) return f;

  const Mat3 E = right_jacobian_inv(rr) / sigma_r;
  const Mat3 Rt = R_WP.transpose() / sigma_p;
  const auto E2 = tilt_basis(R_WP);
  f.J_rot.topRows<3>() = E * R_BM.transpose();
  f.J_rot.bottomRows<3>() = -Rt * k.R * skew(p_BM);
  f.J_pos.topRows<3>().setZero();
  f.J_pos.bottomRows<3>() = Rt;
  f.J_bm_rot.topRows<3>() = E;
  f.J_bm_rot.bottomRows<3>().setZero();
  f.J_bm_pos.topRows<3>().setZero();
  f.J_bm_pos.bottomRows<3>() = Rt * k.R;
  f.J_tilt.topRows<3>() = -E * RR.transpose() * E2;
  f.J_tilt.bottomRows<3>() = Rt * skew(x) * E2;
  f.J_t.head<3>() = E * R_BM.transpose() * k.w;
  f.J_t.tail<3>() = Rt * (k.R * k.w.cross(p_BM) + k.v);
  return f;
}

GyroFactor gyro_factor(const ImuSample& s, const BodyKinematics& k, const Vec3& bias,
                       const Vec3& bias_rate, const CalibState& c, double sigma, bool jac) {
  GyroFactor f;
  const Mat3& R_BI = c.T_B_I.R();
  const Vec3 w_I = R_BI.transpose() * k.w;
  const Vec3 u = c.R_w_a * w_I;
  f.r = (c.M_w * u + bias - s.omega) / sigma;
  if (!jac) return f;
  const double is = 1.0 / sigma;
  const Mat3 MR = c.M_w * c.R_w_a;
  f.J_w = is * MR * R_BI.transpose();
  f.J_bias = is * Mat3::Identity();
  f.J_rwa = -is * MR * skew(w_I);
  f.J_bi_rot = is * MR * skew(w_I);
  f.J_Mw = is * upper_jacobian(u);
  f.J_t = f.J_w * k.dw + is * bias_rate;
  return f;
}

AccelFactor accel_factor(const ImuSample& s, const BodyKinematics& k, const Vec3& bias,
                         const Vec3& bias_rate, const CalibState& c, double sigma, bool jac) {
  AccelFactor f;
  const Mat3& R_BI = c.T_B_I.R();
  const Vec3& p_BI = c.T_B_I.p();
  const Vec3 fw = k.R.transpose() * (k.a - c.g_W());
  const Vec3 wp = k.w.cross(p_BI);
  const Vec3 kk = k.w.cross(wp) + k.dw.cross(p_BI);
  const Vec3 a_I = R_BI.transpose() * (kk + fw);
  f.r = (c.M_a * a_I + bias - s.accel) / sigma;
  if (!jac) return f;
  const double is = 1.0 / sigma;
  const Mat3 MR = is * c.M_a * R_BI.transpose();
  const Mat3 W = skew(k.w);
  f.J_rot = MR * skew(fw);
  f.J_acc = MR * k.R.transpose();
  f.J_w = MR * (-skew(wp) - W * skew(p_BI));
  f.J_dw = -MR * skew(p_BI);
  f.J_bias = is * Mat3::Identity();
  f.J_bi_rot = is * c.M_a * skew(a_I);
  f.J_bi_pos = MR * (W * W + skew(k.dw));
  f.J_Ma = is * upper_jacobian(a_I);
  f.J_g = MR * k.R.transpose() * Vec3::UnitZ();
  const Vec3 dkk = k.dw.cross(wp) + k.w.cross(k.dw.cross(p_BI)) + k.ddw.cross(p_BI);
  const Vec3 dfw = -k.w.cross(fw) + k.R.transpose() * k.j;
  f.J_t = MR * (dkk + dfw) + is * bias_rate;
  return f;
}

std::vector<DutPair> select_dut_pairs(const std::vector<DutSample>& dut, const PairThresholds& th) {
  std::vector<DutPair> out;
  std::size_t i = 0;
  for (std::size_t j = 1; j < dut.size(); ++j) {
    const Pose& a = dut[i].pose;
    const Pose& b = dut[j].pose;
    const double ang = so3_log_mat(a.R().transpose() * b.R()).norm();
    const double dist = (b.p() - a.p()).norm();
    const double dt = dut[j].tau - dut[i].tau;
    if (ang >= th.rotation || dist >= th.translation || dt >= th.duration - 1e-9) {
      out.push_back({int(i), int(j), 1.0, 1.0, false});
      i = j;
    }
  }
  return out;
}

DutWeights dut_weights(const Pose& dut_rel, const Pose& ref_rel, double w_min) {
  ScrewInvariants ref;
  try {
    ref = screw_invariants(ref_rel);
  } catch (const Error&) {
    return {w_min, w_min, true};
  }
  const Vec3 phi = so3_log(dut_rel.rotation);
  const double th_d = phi.norm();
  const double d_d = th_d > 1e-12 ? phi.dot(dut_rel.p()) / th_d : 0.0;
  auto gauss = [&](double x, double ref_x) {
    if (std::abs(ref_x) < 1e-12) return w_min;
    const double e = (x - ref_x) / ref_x;
    return std::clamp(std::exp(-e * e), w_min, 1.0);
  };
  return {gauss(th_d, ref.theta), gauss(d_d, ref.d), false};
}

Pose relative_pose(const BodyKinematics& ki, const BodyKinematics& kj) {
  return Pose(Rotation::unchecked(ki.R.transpose() * kj.R), ki.R.transpose() * (kj.p - ki.p));
}

DutFactor dut_factor(const DutSample& a, const DutSample& b, const BodyKinematics& ki,
                     const BodyKinematics& kj, const CalibState& c, double sigma_r,
                     double sigma_p, double w_r, double w_p, bool jac) {
  DutFactor f;
  const Mat3 R_Q = a.pose.R().transpose() * b.pose.R();
  const Vec3 p_Q = a.pose.R().transpose() * (b.pose.p() - a.pose.p());
  const Mat3 R_B = ki.R.transpose() * kj.R;
  const Vec3 p_B = ki.R.transpose() * (kj.p - ki.p);
  const Mat3& R_BD = c.T_B_D.R();
  const Vec3& p_BD = c.T_B_D.p();
  const Mat3 R_pred = R_BD.transpose() * R_B * R_BD;
  const Vec3 Bp = R_B * p_BD;
  const Vec3 p_pred = R_BD.transpose() * (Bp + p_B - p_BD);
  const Vec3 rr = so3_log_mat(R_Q.transpose() * R_pred);
  const double sr = w_r / sigma_r, sp = w_p / sigma_p;
  f.r.head<3>() = sr * rr;
  f.r.tail<3>() = sp * (p_pred - p_Q);
  if (!jac) return f;
  const Mat3 E = sr * right_jacobian_inv(rr);
  f.J_bd_rot.topRows<3>() = E * (Mat3::Identity() - R_pred.transpose());
  f.J_bd_rot.bottomRows<3>() = sp * skew(p_pred);
  f.J_bd_pos.topRows<3>().setZero();
  f.J_bd_pos.bottomRows<3>() = sp * R_BD.transpose() * (R_B - Mat3::Identity());
  f.J_tj.head<3>() = E * R_BD.transpose() * kj.w;
  f.J_tj.tail<3>() = sp * R_BD.transpose() * (R_B * kj.w.cross(p_BD) + ki.R.transpose() * kj.v);
  f.J_ti.head<3>() = -E * R_BD.transpose() * R_B.transpose() * ki.w;
  f.J_ti.tail<3>() =
      sp * R_BD.transpose() * (-ki.w.cross(Bp + p_B) - ki.R.transpose() * ki.v);
  return f;
}

Vec6 mocap_residual(const StampedPose& m, const State& s, const NoiseSpec& n) {
  const double t = map_time(s.splines.off_M, m.tau);
  return mocap_factor(m, body_kinematics(s.splines, t), s.calib, n.mocap_sigma_r,
                      n.mocap_sigma_p, false)
      .r;
}

Vec3 gyro_residual(const ImuSample& m, const State& s, const NoiseSpec& n) {
  const double t = map_time(s.splines.off_I, m.tau);
  return gyro_factor(m, body_kinematics(s.splines, t), s.splines.bias_w.eval(t),
                     Vec3::Zero(), s.calib, n.gyr_nd, false)
      .r;
}

Vec3 accel_residual(const ImuSample& m, const State& s, const NoiseSpec& n) {
  const double t = map_time(s.splines.off_I, m.tau);
  return accel_factor(m, body_kinematics(s.splines, t), s.splines.bias_a.eval(t),
                      Vec3::Zero(), s.calib, n.acc_nd, false)
      .r;
}

Vec6 dut_relative_residual(const std::vector<DutSample>& dut, const DutPair& pair, const State& s,
                           double sigma_r, double sigma_p) {
  const DutSample& a = dut.at(pair.i);
  const DutSample& b = dut.at(pair.j);
  const double ti = map_time(s.splines.off_D, a.tau);
  const double tj = map_time(s.splines.off_D, b.tau);
  return dut_factor(a, b, body_kinematics(s.splines, ti), body_kinematics(s.splines, tj),
                    s.calib, sigma_r, sigma_p, pair.weight_r, pair.weight_p, false)
      .r;
}

}  // namespace hpgt
