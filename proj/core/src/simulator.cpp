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

#include "hpgt/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "hpgt/errors.hpp"
#include "hpgt/io.hpp"

namespace hpgt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream)};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec3 gaussian3(std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Vec3(n(rng), n(rng), n(rng)) * sigma;
}

Mat3 uniform_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

Pose random_extrinsic(std::mt19937_64& rng, double lever) {
  const Mat3 R = uniform_rotation(rng);
  const Vec3 p(uniform(rng, -lever, lever), uniform(rng, -lever, lever), uniform(rng, -lever, lever));
  return Pose(Rotation::unchecked(R), p);
}

Mat3 random_upper(std::mt19937_64& rng, double scale, double shear) {
  Mat3 M = Mat3::Identity();
  for (int i = 0; i < 3; ++i) {
    M(i, i) += uniform(rng, -scale, scale);
    for (int j = i + 1; j < 3; ++j) M(i, j) = uniform(rng, -shear, shear);
  }
  return M;
}

}  // namespace

std::array<double, 4> eval_sinusoids(const std::vector<Sinusoid>& s, double t) {
  std::array<double, 4> out{};
  for (const Sinusoid& c : s) {
    const double w = kTwoPi * c.freq_hz;
    const double x = w * t + c.phase;
    const double sn = std::sin(x), cs = std::cos(x);
    out[0] += c.amplitude * sn;
    out[1] += c.amplitude * w * cs;
    out[2] -= c.amplitude * w * w * sn;
    out[3] -= c.amplitude * w * w * w * cs;
  }
  return out;
}

TruthSample AnalyticTrajectory::eval(double t) const {
  const auto r = eval_sinusoids(angles[0], t);
  const auto q = eval_sinusoids(angles[1], t);
  const auto y = eval_sinusoids(angles[2], t);
  const double sr = std::sin(r[0]), cr = std::cos(r[0]);
  const double sp = std::sin(q[0]), cp = std::cos(q[0]);
  TruthSample s;
  s.R = (Eigen::AngleAxisd(y[0], Vec3::UnitZ()) * Eigen::AngleAxisd(q[0], Vec3::UnitY()) *
         Eigen::AngleAxisd(r[0], Vec3::UnitX()))
            .toRotationMatrix();
  const double dr = r[1], dq = q[1], dy = y[1];
  s.w = Vec3(dr - dy * sp, dq * cr + dy * sr * cp, -dq * sr + dy * cr * cp);
  const double ddr = r[2], ddq = q[2], ddy = y[2];
  s.dw = Vec3(ddr - ddy * sp - dy * dq * cp,
              ddq * cr - dq * dr * sr + ddy * sr * cp + dy * dr * cr * cp - dy * dq * sr * sp,
              -ddq * sr - dq * dr * cr + ddy * cr * cp - dy * dr * sr * cp - dy * dq * cr * sp);
  for (int i = 0; i < 3; ++i) {
    const auto c = eval_sinusoids(position[i], t);
    s.p[i] = base[i] + c[0];
    s.v[i] = c[1];
    s.a[i] = c[2];
  }
  return s;
}

Pose AnalyticTrajectory::pose(double t) const {
  const TruthSample s = eval(t);
  return Pose(Rotation::unchecked(s.R), s.p);
}

TruthSample SimTruth::motion(double t) const {
  if (!rot_spline) return traj.eval(t);
  const BasisEval be = eval_basis(trans_spline->grid(), 4, t);
  const So3Eval e = rot_spline->kinematics(be, false);
  TruthSample s;
  s.R = e.R;
  s.w = e.w;
  s.dw = e.dw;
  s.p = trans_spline->value(be, 0);
  s.v = trans_spline->value(be, 1);
  s.a = trans_spline->value(be, 2);
  return s;
}

Pose SimTruth::pose(double t) const {
  const TruthSample s = motion(t);
  return Pose(Rotation::unchecked(s.R), s.p);
}

SimConfig SimConfig::from_config(const Config& cfg) {
  SimConfig c;
  c.duration = cfg.get_double("simulate.duration", c.duration);
  c.mocap_rate = cfg.get_double("simulate.mocap_rate", c.mocap_rate);
  c.imu_rate = cfg.get_double("simulate.imu_rate", c.imu_rate);
  c.dut_rate = cfg.get_double("simulate.dut_rate", c.dut_rate);
  c.noiseless = cfg.get_bool("simulate.noiseless", c.noiseless);
  c.degraded = cfg.get_bool("simulate.degraded", c.degraded);
  c.amplitude_scale = cfg.get_double("simulate.amplitude_scale", c.amplitude_scale);
  c.noise = noise_from_config(cfg);
  c.dut_noise_r = cfg.get_double("simulate.dut_noise_r_deg", c.dut_noise_r / kDeg) * kDeg;
  c.dut_noise_p = cfg.get_double("simulate.dut_noise_p", c.dut_noise_p);
  c.dut_drift_r = cfg.get_double("simulate.dut_drift_r", c.dut_drift_r);
  c.dut_drift_p = cfg.get_double("simulate.dut_drift_p", c.dut_drift_p);
  c.max_offset = cfg.get_double("simulate.max_offset", c.max_offset);
  c.max_lever = cfg.get_double("simulate.max_lever", c.max_lever);
  c.max_tilt = cfg.get_double("simulate.max_tilt_deg", c.max_tilt / kDeg) * kDeg;
  c.random_intrinsics = cfg.get_bool("simulate.random_intrinsics", c.random_intrinsics);
  c.spline_knot_dt = cfg.get_double("simulate.spline_knot_dt", c.spline_knot_dt);
  c.gyro_bias0 = cfg.get_double("simulate.gyro_bias0_deg", c.gyro_bias0 / kDeg) * kDeg;
  c.accel_bias0 = cfg.get_double("simulate.accel_bias0", c.accel_bias0);
  c.seed = std::uint64_t(cfg.get_int("simulate.seed", int(c.seed)));
  c.calib_seed = std::uint64_t(cfg.get_int("simulate.calib_seed", int(c.calib_seed)));
  const bool rates_ok = c.mocap_rate > 0 && c.imu_rate > 0 && c.dut_rate > 0;
  if (!(c.duration > 0) || !rates_ok || c.max_offset < 0 || c.max_lever < 0) {
    throw Error(ErrorCode::kBadConfig, "simulate.*: durations and rates must be positive");
  }
  return c;
}

SimTruth make_truth(const SimConfig& cfg) {
  if (!(cfg.duration > 0) || !(cfg.mocap_rate > 0) || !(cfg.imu_rate > 0) || !(cfg.dut_rate > 0)) {
    throw Error(ErrorCode::kBadConfig, "durations and rates must be positive");
  }
  SimTruth tr;
  tr.t_begin = 0.0;
  tr.t_end = cfg.duration;

  auto mrng = stream_rng(cfg.seed, 1);
  const double amp = (cfg.degraded ? 0.5 : 1.0) * cfg.amplitude_scale;
  const double rot_f[3] = {0.25, 0.6, 1.3};
  const double rot_a[3] = {25.0 * kDeg, 10.0 * kDeg, 2.0 * kDeg};
  const double pos_f[3] = {0.2, 0.5, 1.1};
  const double pos_a[3] = {0.25, 0.08, 0.015};
  const double axis_scale[3] = {1.0, 1.13, 0.87};
  for (int ax = 0; ax < 3; ++ax) {
    for (int i = 0; i < 3; ++i) {
      const double ar = (cfg.degraded && ax == 0) ? 0.0 : amp * rot_a[i];
      tr.traj.angles[ax].push_back({ar, rot_f[i] * axis_scale[ax], uniform(mrng, 0.0, kTwoPi)});
      tr.traj.position[ax].push_back(
          {amp * pos_a[i], pos_f[i] * axis_scale[(ax + 1) % 3], uniform(mrng, 0.0, kTwoPi)});
    }
  }

  if (cfg.spline_knot_dt > 0.0) {
    const double pad = 1.0;
    const KnotGrid grid = KnotGrid::covering(-pad, cfg.duration + pad, cfg.spline_knot_dt, 4);
    std::vector<double> ts;
    std::vector<Mat3> Rs;
    std::vector<Vec3> ps;
    const int per_knot = 8;
    const double h = cfg.spline_knot_dt / per_knot;
    for (double t = grid.t_begin(); t <= grid.t_end(4); t += h) {
      const TruthSample s = tr.traj.eval(t);
      ts.push_back(t);
      Rs.push_back(s.R);
      ps.push_back(s.p);
    }
    tr.rot_spline = fit_spline(ts, Rs, grid);
    tr.trans_spline = fit_spline<3>(ts, ps, grid, 4);
  }

  auto crng = stream_rng(cfg.calib_seed, 2);
  CalibState& c = tr.calib;
  c.T_B_M = random_extrinsic(crng, cfg.max_lever);
  c.T_B_D = random_extrinsic(crng, cfg.max_lever);
  c.T_B_I = Pose::identity();
  const double az = uniform(crng, 0.0, kTwoPi);
  const double tilt = uniform(crng, 0.0, cfg.max_tilt);
  c.T_W_P = Pose(Rotation::unchecked(so3_exp_mat(tilt * Vec3(std::cos(az), std::sin(az), 0.0))),
                 Vec3::Zero());
  c.g = 9.81;
  tr.clock_M = {uniform(crng, -cfg.max_offset, cfg.max_offset),
                (uniform(crng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0) * cfg.noise.clock_drift};
  tr.clock_D = {uniform(crng, -cfg.max_offset, cfg.max_offset),
                (uniform(crng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0) * cfg.noise.clock_drift};
  tr.T_H_W = random_extrinsic(crng, 1.0);
  if (cfg.random_intrinsics) {
    c.M_w = random_upper(crng, 5e-3, 2e-3);
    c.M_a = random_upper(crng, 5e-3, 2e-3);
    c.R_w_a = so3_exp_mat(Vec3(uniform(crng, -0.2, 0.2), uniform(crng, -0.2, 0.2),
                               uniform(crng, -0.2, 0.2)) * kDeg);
  }
  return tr;
}

namespace {

std::vector<ImuSample> sample_imu(SimTruth& tr, const SimConfig& cfg) {
  auto rng = stream_rng(cfg.seed, 3);
  const CalibState& c = tr.calib;
  const long n = long(std::floor(cfg.duration * cfg.imu_rate + 1e-9));
  Vec3 bw = Vec3::Zero(), ba = Vec3::Zero();
  if (!cfg.noiseless) {
    bw = gaussian3(rng, cfg.gyro_bias0);
    ba = gaussian3(rng, cfg.accel_bias0);
  }
  std::vector<ImuSample> out;
  out.reserve(std::size_t(n + 1));
  tr.bias.clear();
  const Mat3& R_BI = c.T_B_I.R();
  const Vec3& p_BI = c.T_B_I.p();
  for (long k = 0; k <= n; ++k) {
    const double t = double(k) / cfg.imu_rate;
    const TruthSample s = tr.motion(t);
    const Vec3 w_I = R_BI.transpose() * s.w;
    const Vec3 kk = s.w.cross(s.w.cross(p_BI)) + s.dw.cross(p_BI);
    const Vec3 a_I = R_BI.transpose() * (kk + s.R.transpose() * (s.a - c.g_W()));
    ImuSample m;
    m.tau = t;
    m.omega = c.M_w * c.R_w_a * w_I + bw;
    m.accel = c.M_a * a_I + ba;
    if (!cfg.noiseless) {
      m.omega += gaussian3(rng, cfg.noise.gyr_nd);
      m.accel += gaussian3(rng, cfg.noise.acc_nd);
    }
    out.push_back(m);
    tr.bias.push_back({t, bw, ba});
    if (!cfg.noiseless) {
      bw += gaussian3(rng, cfg.noise.gyr_rw);
      ba += gaussian3(rng, cfg.noise.acc_rw);
    }
  }
  return out;
}

std::pair<long, long> sensor_range(const ClockModel& clk, double rate, double t0, double t1) {
  return {long(std::ceil(clk.sensor(t0) * rate - 1e-9)), long(std::floor(clk.sensor(t1) * rate + 1e-9))};
}

std::vector<MoCapSample> sample_mocap(const SimTruth& tr, const SimConfig& cfg) {
  auto rng = stream_rng(cfg.seed, 4);
  const CalibState& c = tr.calib;
  const Pose T_PW = pose_inverse(c.T_W_P);
  const auto [k0, k1] = sensor_range(tr.clock_M, cfg.mocap_rate, tr.t_begin, tr.t_end);
  std::vector<MoCapSample> out;
  for (long k = k0; k <= k1; ++k) {
    const double tau = double(k) / cfg.mocap_rate;
    Pose T = T_PW * tr.pose(tr.clock_M.global(tau)) * c.T_B_M;
    if (!cfg.noiseless) {
      T.rotation = Rotation::unchecked(T.R() * so3_exp_mat(gaussian3(rng, cfg.noise.mocap_sigma_r)));
      T.translation += gaussian3(rng, cfg.noise.mocap_sigma_p);
    }
    out.push_back({tau, T});
  }
  return out;
}

std::vector<DutSample> sample_dut(const SimTruth& tr, const SimConfig& cfg) {
  auto rng = stream_rng(cfg.seed, 5);
  const auto [k0, k1] = sensor_range(tr.clock_D, cfg.dut_rate, tr.t_begin, tr.t_end);
  const double dt = 1.0 / cfg.dut_rate;
  const double sr = cfg.dut_noise_r / std::sqrt(3.0), sp = cfg.dut_noise_p / std::sqrt(3.0);
  std::vector<DutSample> out;
  Pose prev, est;
  Vec3 ur = Vec3::Zero(), up = Vec3::Zero();
  for (long k = k0; k <= k1; ++k) {
    const double tau = double(k) / cfg.dut_rate;
    const Pose cur = tr.pose(tr.clock_D.global(tau)) * tr.calib.T_B_D;
    if (k == k0) {
      est = tr.T_H_W * cur;
    } else {
      Pose step = pose_inverse(prev) * cur;
      if (!cfg.noiseless) {
        ur += gaussian3(rng, cfg.dut_drift_r);
        up += gaussian3(rng, cfg.dut_drift_p);
        const Vec3 nr = gaussian3(rng, sr) + ur * dt;
        const Vec3 np = gaussian3(rng, sp) + up * dt;
        step = step * Pose(Rotation::unchecked(so3_exp_mat(nr)), np);
      }
      est = est * step;
      est.rotation = Rotation::unchecked(orthonormalize(est.R()));
    }
    prev = cur;
    out.push_back({tau, est});
  }
  return out;
}

}  // namespace

SimData simulate(const SimConfig& cfg) {
  SimData d;
  d.truth = make_truth(cfg);
  d.set.noise = cfg.noise;
  d.set.imu = sample_imu(d.truth, cfg);
  d.set.mocap = sample_mocap(d.truth, cfg);
  d.set.dut = sample_dut(d.truth, cfg);
  return d;
}

State truth_state(const SimData& d, double bias_dt, double offset_dt) {
  const SimTruth& tr = d.truth;
  if (!tr.rot_spline) throw Error(ErrorCode::kBadConfig, "truth_state needs spline motion");
  State s;
  s.calib = tr.calib;
  SplineBundle& sp = s.splines;
  sp.rot = *tr.rot_spline;
  sp.trans = *tr.trans_spline;
  const KnotGrid bg = KnotGrid::covering(sp.rot.t_begin(), sp.rot.t_end(), bias_dt, 2);
  const Vec3 bw = tr.bias.empty() ? Vec3::Zero() : tr.bias.front().omega;
  const Vec3 ba = tr.bias.empty() ? Vec3::Zero() : tr.bias.front().accel;
  sp.bias_w = Spline3(bg, 2, bw);
  sp.bias_a = Spline3(bg, 2, ba);
  auto clock_spline = [&](const ClockModel& clk, double a, double b) {
    TimeOffsetSpline off(KnotGrid::covering(a, b, offset_dt, 2), 0.0);
    const KnotGrid& g = off.inner().grid();
    for (int k = 0; k < g.count; ++k) off.inner().cps()[std::size_t(k)][0] = clk.offset(g.t0 + k * g.dt);
    return off;
  };
  const auto& m = d.set.mocap;
  const auto& u = d.set.dut;
  const auto& i = d.set.imu;
  sp.off_M = clock_spline(tr.clock_M, m.front().tau, m.back().tau);
  sp.off_D = clock_spline(tr.clock_D, u.front().tau, u.back().tau);
  sp.off_I = clock_spline(ClockModel{}, i.front().tau, i.back().tau);
  return s;
}

std::vector<StampedPose> truth_dut_trajectory(const SimTruth& tr, double rate_hz) {
  const auto [k0, k1] = sensor_range(tr.clock_D, rate_hz, tr.t_begin, tr.t_end);
  std::vector<StampedPose> out;
  for (long k = k0; k <= k1; ++k) {
    const double tau = double(k) / rate_hz;
    out.push_back({tau, tr.pose(tr.clock_D.global(tau)) * tr.calib.T_B_D});
  }
  return out;
}

std::vector<StampedPose> truth_body_trajectory(const SimTruth& tr, double rate_hz) {
  std::vector<StampedPose> out;
  const long n = long(std::floor((tr.t_end - tr.t_begin) * rate_hz + 1e-9));
  for (long k = 0; k <= n; ++k) {
    const double t = tr.t_begin + double(k) / rate_hz;
    out.push_back({t, tr.pose(t)});
  }
  return out;
}

std::vector<StampedPose> mocap_as_dut(const SimTruth& tr, const std::vector<MoCapSample>& m) {
  const Pose T_MD = tr.calib.T_M_D();
  std::vector<StampedPose> out;
  out.reserve(m.size());
  for (const MoCapSample& s : m) {
    const double tau_D = tr.clock_D.sensor(tr.clock_M.global(s.tau));
    out.push_back({tau_D, tr.calib.T_W_P * s.pose * T_MD});
  }
  return out;
}

std::string calib_text(const CalibState& c, const ClockModel& m, const ClockModel& d) {
  std::ostringstream os;
  char buf[64];
  auto num = [&](const std::string& key, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << key << '=' << buf << '\n';
  };
  auto pose = [&](const std::string& name, const Pose& T) {
    const UnitQuaternion q = UnitQuaternion::from_rotation(T.rotation).canonical();
    num(name + ".qw", q.w);
    num(name + ".qx", q.x);
    num(name + ".qy", q.y);
    num(name + ".qz", q.z);
    num(name + ".px", T.p()[0]);
    num(name + ".py", T.p()[1]);
    num(name + ".pz", T.p()[2]);
  };
  auto mat = [&](const std::string& name, const Mat3& M) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) num(name + "." + std::to_string(i) + std::to_string(j), M(i, j));
    }
  };
  pose("T_B_M", c.T_B_M);
  pose("T_B_I", c.T_B_I);
  pose("T_B_D", c.T_B_D);
  pose("T_M_D", c.T_M_D());
  pose("T_W_P", c.T_W_P);
  mat("R_w_a", c.R_w_a);
  mat("M_w", c.M_w);
  mat("M_a", c.M_a);
  num("g", c.g);
  num("off_M.c0", m.c0);
  num("off_M.c1", m.c1);
  num("off_D.c0", d.c0);
  num("off_D.c1", d.c1);
  return os.str();
}

void export_set(const SimData& d, const std::string& dir, double dut_rate) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir + ": " + ec.message());
  const std::filesystem::path base(dir);
  write_trajectory((base / "mocap.txt").string(), d.set.mocap);
  write_imu_file((base / "imu.csv").string(), d.set.imu);
  write_trajectory((base / "dut.txt").string(), d.set.dut);
  write_trajectory((base / "truth_body.txt").string(), truth_body_trajectory(d.truth, 1000.0));
  write_trajectory((base / "truth_dut.txt").string(), truth_dut_trajectory(d.truth, dut_rate));
  std::ofstream f(base / "truth_calib.txt");
  if (!f) throw Error(ErrorCode::kIoError, "cannot write truth_calib.txt in " + dir);
  f << calib_text(d.truth.calib, d.truth.clock_M, d.truth.clock_D);
  if (!f) throw Error(ErrorCode::kIoError, "write failed: truth_calib.txt");
}

}  // namespace hpgt
