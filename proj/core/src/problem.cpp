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

#include "hpgt/problem.hpp"

#include <algorithm>
#include <cmath>

#include "hpgt/errors.hpp"

namespace hpgt {

EstimatorOptions EstimatorOptions::from_config(const Config& cfg) {
  EstimatorOptions o;
  o.knot_dt = cfg.get_double("estimate.knot_dt", o.knot_dt);
  o.bias_dt = cfg.get_double("estimate.bias_dt", o.bias_dt);
  o.offset_dt = cfg.get_double("estimate.offset_dt", o.offset_dt);
  o.dut_sigma_r = cfg.get_double("estimate.dut_sigma_r_deg", o.dut_sigma_r / kDeg) * kDeg;
  o.dut_sigma_p = cfg.get_double("estimate.dut_sigma_p", o.dut_sigma_p);
  o.pairs.rotation = cfg.get_double("estimate.pair_rotation_deg", o.pairs.rotation / kDeg) * kDeg;
  o.pairs.translation = cfg.get_double("estimate.pair_translation", o.pairs.translation);
  o.pairs.duration = cfg.get_double("estimate.pair_duration", o.pairs.duration);
  o.weight_floor = cfg.get_double("estimate.weight_floor", o.weight_floor);
  o.max_iterations = cfg.get_int("estimate.max_iterations", o.max_iterations);
  o.lambda0 = cfg.get_double("estimate.lambda0", o.lambda0);
  o.rel_decrease_tol = cfg.get_double("estimate.rel_decrease_tol", o.rel_decrease_tol);
  o.grad_tol = cfg.get_double("estimate.grad_tol", o.grad_tol);
  o.cost_floor = cfg.get_double("estimate.cost_floor", o.cost_floor);
  o.two_stage = cfg.get_bool("estimate.two_stage", o.two_stage);
  o.fixed_offsets = cfg.get_bool("estimate.fixed_offsets", o.fixed_offsets);
  o.estimate_tilt = cfg.get_bool("estimate.estimate_tilt", o.estimate_tilt);
  o.fd_check = cfg.get_bool("estimate.fd_check", o.fd_check);
  o.threads = cfg.get_int("estimate.threads", o.threads);
  o.sync_rate = cfg.get_double("sync.rate_hz", o.sync_rate);
  o.max_lag = cfg.get_double("sync.max_lag", o.max_lag);
  o.keyframe_dt = cfg.get_double("init.keyframe_dt", o.keyframe_dt);
  if (cfg.has("init.lever_arm_x")) {
    o.lever_arm = Vec3(cfg.get_double("init.lever_arm_x", 0.0), cfg.get_double("init.lever_arm_y", 0.0),
                       cfg.get_double("init.lever_arm_z", 0.0));
  }
  o.domain_margin = cfg.get_double("estimate.domain_margin", o.domain_margin);
  o.output_rate = cfg.get_double("estimate.output_rate", o.output_rate);
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kBadConfig, std::string(key) + " must be positive");
    }
  };
  positive(o.knot_dt, "estimate.knot_dt");
  positive(o.bias_dt, "estimate.bias_dt");
  positive(o.offset_dt, "estimate.offset_dt");
  positive(o.dut_sigma_r, "estimate.dut_sigma_r_deg");
  positive(o.dut_sigma_p, "estimate.dut_sigma_p");
  positive(o.sync_rate, "sync.rate_hz");
  positive(o.max_lag, "sync.max_lag");
  positive(o.keyframe_dt, "init.keyframe_dt");
  positive(o.output_rate, "estimate.output_rate");
  if (o.max_iterations < 0) throw Error(ErrorCode::kBadConfig, "estimate.max_iterations < 0");
  return o;
}

ParamLayout make_layout(const State& s, bool intrinsics_free, bool shared_offsets,
                        bool estimate_tilt) {
  ParamLayout L;
  L.knots = s.splines.rot.grid().count;
  L.shared_offsets = shared_offsets;
  L.n_bias_w = s.splines.bias_w.grid().count;
  L.n_bias_a = s.splines.bias_a.grid().count;
  L.n_off_M = shared_offsets ? 1 : s.splines.off_M.inner().grid().count;
  L.n_off_D = shared_offsets ? 1 : s.splines.off_D.inner().grid().count;
  int e = 0;
  auto take = [&e](int n) {
    const int at = e;
    e += n;
    return at;
  };
  L.bias_w = take(3 * L.n_bias_w);
  L.bias_a = take(3 * L.n_bias_a);
  L.off_M = take(L.n_off_M);
  L.off_D = take(L.n_off_D);
  L.bm = take(6);
  L.bd = take(6);
  if (estimate_tilt) L.tilt = take(2);
  L.g = take(1);
  if (intrinsics_free) {
    L.rwa = take(3);
    L.mw = take(6);
    L.ma = take(6);
  }
  L.extras = e;
  return L;
}

namespace {

double imu_rate(const std::vector<ImuSample>& imu) {
  if (imu.size() < 2) return 500.0;
  return double(imu.size() - 1) / (imu.back().tau - imu.front().tau);
}

bool usable(const State& s, const TimeOffsetSpline& off, double tau, double margin) {
  if (!off.contains(tau)) return false;
  const double t = map_time(off, tau);
  const auto& rot = s.splines.rot;
  return t >= rot.t_begin() + margin && t <= rot.t_end() - margin &&
         s.splines.bias_w.contains(t) && s.splines.bias_a.contains(t);
}

struct ExtraWriter {
  BlockJacobian& out;
  void add(int col, const Vec6& J) {
    for (int c = 0; c < out.n_extra; ++c) {
      if (out.cols[c] == col) {
        out.Je.col(c) += J;
        return;
      }
    }
    if (out.n_extra >= kMaxExtraCols) throw Error(ErrorCode::kNumericalFailure, "too many columns");
    out.cols[out.n_extra] = col;
    out.Je.col(out.n_extra) = J;
    ++out.n_extra;
  }
  template <typename Derived>
  void add_block(int col0, const Eigen::MatrixBase<Derived>& J) {
    if (col0 < 0) return;
    for (int c = 0; c < J.cols(); ++c) {
      Vec6 v = Vec6::Zero();
      v.head(J.rows()) = J.col(c);
      add(col0 + c, v);
    }
  }
};

// Columns and weights of dt/d(offset parameters) at sensor time tau.
void offset_columns(const TimeOffsetSpline& off, int base, bool shared, double tau,
                    const Vec6& J_t, ExtraWriter& w) {
  if (base < 0) return;
  if (shared) {
    w.add(base, J_t);
    return;
  }
  const Spline1& in = off.inner();
  const BasisEval be = eval_basis(in.grid(), in.order(), tau);
  for (int j = 0; j < in.order(); ++j) {
    if (be.b[0][j] != 0.0) w.add(base + be.first + j, be.b[0][j] * J_t);
  }
}

void bias_columns(const Spline3& sp, int base, const BasisEval& be, const Mat3& J, int row0,
                  ExtraWriter& w) {
  if (base < 0) return;
  for (int j = 0; j < sp.order(); ++j) {
    Eigen::Matrix<double, 6, 3> M = Eigen::Matrix<double, 6, 3>::Zero();
    M.block<3, 3>(row0, 0) = be.b[0][j] * J;
    w.add_block(base + 3 * (be.first + j), M);
  }
}

BodyKinematics kin_from(const So3Eval& e, const Spline3& trans, const BasisEval& be) {
  BodyKinematics k;
  k.R = e.R;
  k.w = e.w;
  k.dw = e.dw;
  k.ddw = e.ddw;
  k.p = trans.value(be, 0);
  k.v = trans.value(be, 1);
  k.a = trans.value(be, 2);
  k.j = trans.value(be, 3);
  return k;
}

void eval_mocap(const Problem& p, const State& s, const ParamLayout& L, int idx, bool jac,
                BlockJacobian& out) {
  const StampedPose& m = p.data.mocap[idx];
  const SplineBundle& sp = s.splines;
  const double t = map_time(sp.off_M, m.tau);
  const BasisEval be = eval_basis(sp.trans.grid(), sp.trans.order(), t);
  const So3Eval e = sp.rot.kinematics(be, jac);
  const BodyKinematics k = kin_from(e, sp.trans, be);
  const MocapFactor f =
      mocap_factor(m, k, s.calib, p.data.noise.mocap_sigma_r, p.data.noise.mocap_sigma_p, jac);
  out.rows = 6;
  out.r = f.r;
  if (!jac) return;
  out.first_knot = be.first;
  for (int j = 0; j < 4; ++j) {
    out.Jk.block<6, 3>(0, 6 * j) = f.J_rot * e.J_R[j];
    out.Jk.block<6, 3>(0, 6 * j + 3) = be.b[0][j] * f.J_pos;
  }
  ExtraWriter w{out};
  offset_columns(sp.off_M, L.off_M, L.shared_offsets, m.tau, f.J_t, w);
  w.add_block(L.bm, f.J_bm_rot);
  if (L.bm >= 0) w.add_block(L.bm + 3, f.J_bm_pos);
  w.add_block(L.tilt, f.J_tilt);
}

void eval_imu(const Problem& p, const State& s, const ParamLayout& L, int idx, bool jac,
              BlockJacobian& out) {
  const ImuSample& m = p.data.imu[idx];
  const SplineBundle& sp = s.splines;
  const double t = m.tau;
  const BasisEval be = eval_basis(sp.trans.grid(), sp.trans.order(), t);
  const So3Eval e = sp.rot.kinematics(be, jac);
  const BodyKinematics k = kin_from(e, sp.trans, be);
  const BasisEval bw = eval_basis(sp.bias_w.grid(), sp.bias_w.order(), t);
  const BasisEval ba = eval_basis(sp.bias_a.grid(), sp.bias_a.order(), t);
  const GyroFactor g = gyro_factor(m, k, sp.bias_w.value(bw, 0), sp.bias_w.value(bw, 1), s.calib,
                                   p.data.noise.gyr_nd, jac);
  const AccelFactor a = accel_factor(m, k, sp.bias_a.value(ba, 0), sp.bias_a.value(ba, 1),
                                     s.calib, p.data.noise.acc_nd, jac);
  out.rows = 6;
  out.r.head<3>() = g.r;
  out.r.tail<3>() = a.r;
  if (!jac) return;
  out.first_knot = be.first;
  for (int j = 0; j < 4; ++j) {
    out.Jk.block<3, 3>(0, 6 * j) = g.J_w * e.J_w[j];
    out.Jk.block<3, 3>(0, 6 * j + 3).setZero();
    out.Jk.block<3, 3>(3, 6 * j) = a.J_rot * e.J_R[j] + a.J_w * e.J_w[j] + a.J_dw * e.J_dw[j];
    out.Jk.block<3, 3>(3, 6 * j + 3) = be.b[2][j] * a.J_acc;
  }
  ExtraWriter w{out};
  bias_columns(sp.bias_w, L.bias_w, bw, g.J_bias, 0, w);
  bias_columns(sp.bias_a, L.bias_a, ba, a.J_bias, 3, w);
  if (L.g >= 0) {
    Vec6 v = Vec6::Zero();
    v.tail<3>() = a.J_g;
    w.add(L.g, v);
  }
  if (L.rwa >= 0) {
    Eigen::Matrix<double, 6, 3> M = Eigen::Matrix<double, 6, 3>::Zero();
    M.topRows<3>() = g.J_rwa;
    w.add_block(L.rwa, M);
  }
  if (L.mw >= 0) {
    Eigen::Matrix<double, 6, 6> M = Eigen::Matrix<double, 6, 6>::Zero();
    M.topRows<3>() = g.J_Mw;
    w.add_block(L.mw, M);
  }
  if (L.ma >= 0) {
    Eigen::Matrix<double, 6, 6> M = Eigen::Matrix<double, 6, 6>::Zero();
    M.bottomRows<3>() = a.J_Ma;
    w.add_block(L.ma, M);
  }
}

void eval_dut(const Problem& p, const State& s, const ParamLayout& L, int idx, bool jac,
              BlockJacobian& out) {
  const DutPair& pr = p.pairs[idx];
  const DutSample& a = p.data.dut[pr.i];
  const DutSample& b = p.data.dut[pr.j];
  const SplineBundle& sp = s.splines;
  const double ti = map_time(sp.off_D, a.tau);
  const double tj = map_time(sp.off_D, b.tau);
  const BodyKinematics ki = body_kinematics(sp, ti);
  const BodyKinematics kj = body_kinematics(sp, tj);
  const DutFactor f = dut_factor(a, b, ki, kj, s.calib, p.opt.dut_sigma_r, p.opt.dut_sigma_p,
                                 pr.weight_r, pr.weight_p, jac);
  out.rows = 6;
  out.r = f.r;
  if (!jac) return;
  out.first_knot = -1;
  ExtraWriter w{out};
  offset_columns(sp.off_D, L.off_D, L.shared_offsets, a.tau, f.J_ti, w);
  offset_columns(sp.off_D, L.off_D, L.shared_offsets, b.tau, f.J_tj, w);
  w.add_block(L.bd, f.J_bd_rot);
  if (L.bd >= 0) w.add_block(L.bd + 3, f.J_bd_pos);
}

void eval_bias(const Problem& p, const State& s, const ParamLayout& L, int q, bool gyro,
               bool jac, BlockJacobian& out) {
  const Spline3& sp = gyro ? s.splines.bias_w : s.splines.bias_a;
  const double step = gyro ? p.data.noise.gyr_rw : p.data.noise.acc_rw;
  const double density = step * std::sqrt(p.imu_rate_hz);
  const double dt = sp.grid().dt;
  out.rows = 3;
  out.r.setZero();
  out.r.head<3>() = bias_rw_residual(sp.cps()[q], sp.cps()[q + 1], dt, density);
  if (!jac) return;
  const int base = gyro ? L.bias_w : L.bias_a;
  if (base < 0) return;
  ExtraWriter w{out};
  const double c = 1.0 / (std::sqrt(dt) * density);
  Eigen::Matrix<double, 6, 3> M = Eigen::Matrix<double, 6, 3>::Zero();
  M.topRows<3>() = -c * Mat3::Identity();
  w.add_block(base + 3 * q, M);
  M.topRows<3>() = c * Mat3::Identity();
  w.add_block(base + 3 * (q + 1), M);
}

}  // namespace

Problem build_problem(const MeasurementSet& set, const State& seed, const EstimatorOptions& opt) {
  if (set.mocap.empty() && set.imu.empty() && set.dut.empty()) {
    throw Error(ErrorCode::kEmptyProblem, "no measurements");
  }
  Problem p;
  p.data = set;
  p.opt = opt;
  p.imu_rate_hz = imu_rate(set.imu);
  const State& s = seed;
  const double margin = opt.domain_margin;
  for (std::size_t i = 0; i < set.mocap.size(); ++i) {
    if (usable(s, s.splines.off_M, set.mocap[i].tau, margin)) {
      p.blocks.push_back({BlockKind::kMocap, int(i)});
      ++p.n_mocap;
    } else {
      ++p.dropped_mocap;
    }
  }
  for (std::size_t i = 0; i < set.imu.size(); ++i) {
    if (usable(s, s.splines.off_I, set.imu[i].tau, margin)) {
      p.blocks.push_back({BlockKind::kImu, int(i)});
      ++p.n_imu;
    } else {
      ++p.dropped_imu;
    }
  }
  // DUT pairs are selected over the usable span only
  std::vector<DutSample> usable_dut;
  std::vector<int> index;
  for (std::size_t i = 0; i < set.dut.size(); ++i) {
    if (usable(s, s.splines.off_D, set.dut[i].tau, margin)) {
      usable_dut.push_back(set.dut[i]);
      index.push_back(int(i));
    } else {
      ++p.dropped_dut;
    }
  }
  for (DutPair pr : select_dut_pairs(usable_dut, opt.pairs)) {
    pr.i = index[pr.i];
    pr.j = index[pr.j];
    p.blocks.push_back({BlockKind::kDut, int(p.pairs.size())});
    p.pairs.push_back(pr);
  }
  if (p.n_mocap + p.n_imu + p.pairs.size() == 0) {
    if (!set.mocap.empty() || !set.imu.empty() || !set.dut.empty()) {
      throw Error(ErrorCode::kDomainMismatch, "no measurement falls inside the spline domain");
    }
    throw Error(ErrorCode::kEmptyProblem, "no measurements");
  }
  if (p.n_imu > 0) {
    for (int q = 0; q + 1 < s.splines.bias_w.grid().count; ++q) {
      p.blocks.push_back({BlockKind::kBiasW, q});
      ++p.n_bias;
    }
    for (int q = 0; q + 1 < s.splines.bias_a.grid().count; ++q) {
      p.blocks.push_back({BlockKind::kBiasA, q});
      ++p.n_bias;
    }
  }
  return p;
}

void evaluate_block(const Problem& p, const State& s, const ParamLayout& L, const Block& b,
                    bool jac, BlockJacobian& out) {
  out.first_knot = -1;
  out.n_extra = 0;
  if (jac) {
    out.Jk.setZero();
    out.Je.setZero();
  }
  switch (b.kind) {
    case BlockKind::kMocap: eval_mocap(p, s, L, b.index, jac, out); break;
    case BlockKind::kImu: eval_imu(p, s, L, b.index, jac, out); break;
    case BlockKind::kDut: eval_dut(p, s, L, b.index, jac, out); break;
    case BlockKind::kBiasW: eval_bias(p, s, L, b.index, true, jac, out); break;
    case BlockKind::kBiasA: eval_bias(p, s, L, b.index, false, jac, out); break;
  }
}

State retract(const State& s, const ParamLayout& L, const VecX& delta) {
  State o = s;
  SplineBundle& sp = o.splines;
  for (int k = 0; k < L.knots; ++k) {
    const Vec6 d = delta.segment<6>(6 * k);
    Mat3& R = sp.rot.cps()[k];
    R = R * so3_exp_mat(d.head<3>());
    sp.trans.cps()[k] += d.tail<3>();
  }
  const auto x = delta.tail(L.extras);
  for (int q = 0; q < L.n_bias_w && L.bias_w >= 0; ++q) sp.bias_w.cps()[q] += x.segment<3>(L.bias_w + 3 * q);
  for (int q = 0; q < L.n_bias_a && L.bias_a >= 0; ++q) sp.bias_a.cps()[q] += x.segment<3>(L.bias_a + 3 * q);
  auto offsets = [&](TimeOffsetSpline& off, int base) {
    if (base < 0) return;
    auto& cps = off.inner().cps();
    for (std::size_t q = 0; q < cps.size(); ++q) {
      cps[q][0] += x[base + (L.shared_offsets ? 0 : int(q))];
    }
  };
  offsets(sp.off_M, L.off_M);
  offsets(sp.off_D, L.off_D);
  auto pose = [&](Pose& T, int base) {
    if (base < 0) return;
    T.rotation = Rotation::unchecked(T.R() * so3_exp_mat(x.segment<3>(base)));
    T.translation += x.segment<3>(base + 3);
  };
  CalibState& c = o.calib;
  pose(c.T_B_M, L.bm);
  pose(c.T_B_D, L.bd);
  if (L.tilt >= 0) {
    Vec3 phi = so3_log_mat(c.T_W_P.R());
    phi[0] += x[L.tilt];
    phi[1] += x[L.tilt + 1];
    c.T_W_P.rotation = so3_exp(phi);
  }
  if (L.g >= 0) c.g += x[L.g];
  if (L.rwa >= 0) c.R_w_a = c.R_w_a * so3_exp_mat(x.segment<3>(L.rwa));
  auto upper = [&](Mat3& M, int base) {
    if (base < 0) return;
    for (int e = 0; e < 6; ++e) M(kUpperRow[e], kUpperCol[e]) += x[base + e];
  };
  upper(c.M_w, L.mw);
  upper(c.M_a, L.ma);
  return o;
}

void update_dut_weights(Problem& p, const State& s) {
  for (DutPair& pr : p.pairs) {
    const double ti = map_time(s.splines.off_D, p.data.dut[pr.i].tau);
    const double tj = map_time(s.splines.off_D, p.data.dut[pr.j].tau);
    const Pose B = relative_pose(body_kinematics(s.splines, ti), body_kinematics(s.splines, tj));
    const Pose ref = pose_inverse(s.calib.T_B_D) * B * s.calib.T_B_D;
    const Pose& a = p.data.dut[pr.i].pose;
    const Pose& b = p.data.dut[pr.j].pose;
    const DutWeights w = dut_weights(pose_inverse(a) * b, ref, p.opt.weight_floor);
    pr.weight_r = w.w_r;
    pr.weight_p = w.w_p;
    pr.degenerate = w.degenerate;
  }
}

}  // namespace hpgt
