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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hpgt/io.hpp"
#include "hpgt/metrics.hpp"
#include "hpgt/simulator.hpp"
#include "test_util.hpp"

namespace hpgt {
namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("hpgt_sim_" + name);
  std::filesystem::remove_all(p);
  return p;
}

double axis_std(const std::vector<double>& v) {
  double m = 0.0, s = 0.0;
  for (double x : v) m += x;
  m /= double(v.size());
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

TEST(Trajectory, BodyRatesMatchDifferentiatedRotation) {
  SimConfig c;
  c.seed = 11;
  const SimTruth tr = make_truth(c);
  const double h = 1e-5;
  for (double t : {0.3, 7.1, 23.4, 51.9}) {
    const TruthSample s = tr.traj.eval(t);
    const Mat3 Rp = tr.traj.eval(t + h).R, Rm = tr.traj.eval(t - h).R;
    const Vec3 w_fd = so3_log_mat(Rm.transpose() * Rp) / (2.0 * h);
    EXPECT_LT((w_fd - s.w).norm(), 1e-7);
    const Vec3 dw_fd = (tr.traj.eval(t + h).w - tr.traj.eval(t - h).w) / (2.0 * h);
    EXPECT_LT((dw_fd - s.dw).norm(), 1e-6);
    const Vec3 a_fd = (tr.traj.eval(t + h).v - tr.traj.eval(t - h).v) / (2.0 * h);
    EXPECT_LT((a_fd - s.a).norm(), 1e-6);
    EXPECT_TRUE(s.R.isUnitary(1e-12));
  }
}

TEST(Trajectory, AmplitudesBounded) {
  SimConfig c;
  const SimTruth tr = make_truth(c);
  for (const auto& axis : tr.traj.angles) {
    double sum = 0.0;
    for (const auto& s : axis) sum += std::abs(s.amplitude);
    EXPECT_LE(sum, 45.0 * kDeg);
  }
  for (const auto& axis : tr.traj.position) {
    double sum = 0.0;
    for (const auto& s : axis) sum += std::abs(s.amplitude);
    EXPECT_LE(sum, 1.0);
  }
}

TEST(Truth, DeterministicPerSeed) {
  SimConfig c;
  c.seed = 3;
  c.duration = 5.0;
  const SimData a = simulate(c), b = simulate(c);
  ASSERT_EQ(a.set.imu.size(), b.set.imu.size());
  for (std::size_t i = 0; i < a.set.imu.size(); ++i) {
    EXPECT_EQ(a.set.imu[i].omega, b.set.imu[i].omega);
    EXPECT_EQ(a.set.imu[i].accel, b.set.imu[i].accel);
  }
  ASSERT_EQ(a.set.dut.size(), b.set.dut.size());
  for (std::size_t i = 0; i < a.set.dut.size(); ++i) {
    EXPECT_EQ(a.set.dut[i].pose.R(), b.set.dut[i].pose.R());
  }
  c.seed = 4;
  const SimData other = simulate(c);
  EXPECT_NE(other.set.imu[10].omega, a.set.imu[10].omega);
  // the calibration depends on calib_seed only
  EXPECT_EQ(other.truth.calib.T_B_D.R(), a.truth.calib.T_B_D.R());
}

TEST(Truth, ExtrinsicsAndClocksInRange) {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    SimConfig c;
    c.calib_seed = s;
    const SimTruth tr = make_truth(c);
    EXPECT_LE(tr.calib.T_B_M.p().lpNorm<Eigen::Infinity>(), 0.2);
    EXPECT_LE(tr.calib.T_B_D.p().lpNorm<Eigen::Infinity>(), 0.2);
    EXPECT_LE(std::abs(tr.clock_M.c0), 0.5);
    EXPECT_NEAR(std::abs(tr.clock_D.c1), 1e-3 / 60.0, 1e-18);
    EXPECT_LE(so3_log_mat(tr.calib.T_W_P.R()).norm(), 2.0 * kDeg + 1e-12);
    EXPECT_NEAR(so3_log_mat(tr.calib.T_W_P.R())[2], 0.0, 1e-15);
  }
}

TEST(Clock, DriftOfOneMsPerMinute) {
  const ClockModel clk{0.1, 1e-3 / 60.0};
  EXPECT_NEAR(clk.offset(120.0) - clk.offset(0.0), 2.0e-3, 1e-15);
  EXPECT_NEAR(clk.sensor(clk.global(37.5)), 37.5, 1e-12);
}

TEST(Truth, StaticConfiguration) {
  SimConfig c;
  c.amplitude_scale = 0.0;
  c.noiseless = true;
  c.duration = 2.0;
  const SimData d = simulate(c);
  const TruthSample s = d.truth.motion(0.7);
  EXPECT_EQ(s.w.norm() + s.dw.norm() + s.v.norm() + s.a.norm(), 0.0);
  const Vec3 a0 = d.set.imu.front().accel;
  for (const ImuSample& m : d.set.imu) {
    EXPECT_EQ(m.omega.norm(), 0.0);
    EXPECT_LT((m.accel - a0).norm(), 1e-15);
  }
  EXPECT_NEAR(a0.norm(), 9.81, 0.1);  // intrinsics scale within 1%
}

TEST(Mocap, NoiselessOnTruth) {
  SimConfig c;
  c.noiseless = true;
  c.duration = 3.0;
  const SimData d = simulate(c);
  for (const MoCapSample& m : d.set.mocap) {
    const Pose T = pose_inverse(d.truth.calib.T_W_P) *
                   d.truth.pose(d.truth.clock_M.global(m.tau)) * d.truth.calib.T_B_M;
    EXPECT_LT((T.p() - m.pose.p()).norm(), 1e-12);
    EXPECT_LT(so3_log_mat(T.R().transpose() * m.pose.R()).norm(), 1e-12);
  }
}

TEST(Mocap, NoiseStatisticsAndInterFrameError) {
  SimConfig c;
  c.seed = 21;
  const SimData d = simulate(c);
  ASSERT_EQ(d.set.mocap.size(), 18000u);
  std::array<std::vector<double>, 3> ep, er;
  std::vector<StampedPose> truth;
  for (const MoCapSample& m : d.set.mocap) {
    const Pose T = pose_inverse(d.truth.calib.T_W_P) *
                   d.truth.pose(d.truth.clock_M.global(m.tau)) * d.truth.calib.T_B_M;
    truth.push_back({m.tau, T});
    const Vec3 dp = m.pose.p() - T.p();
    const Vec3 dr = so3_log_mat(T.R().transpose() * m.pose.R());
    for (int i = 0; i < 3; ++i) {
      ep[i].push_back(dp[i]);
      er[i].push_back(dr[i]);
    }
  }
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(axis_std(ep[i]), c.noise.mocap_sigma_p, 0.1 * c.noise.mocap_sigma_p);
    EXPECT_NEAR(axis_std(er[i]), c.noise.mocap_sigma_r, 0.1 * c.noise.mocap_sigma_r);
  }
  // consecutive-frame errors combine two independent 3-axis samples
  const MetricReport r = compute_metrics(d.set.mocap, truth, MetricMode::kDirect);
  const double k = std::sqrt(6.0);
  EXPECT_NEAR(r.rre_deg * kDeg, k * c.noise.mocap_sigma_r, 0.1 * k * c.noise.mocap_sigma_r);
  EXPECT_NEAR(r.rte_mm * 1e-3, k * c.noise.mocap_sigma_p, 0.1 * k * c.noise.mocap_sigma_p);
  EXPECT_GT(r.rre_deg, 0.15);
  EXPECT_GT(r.rte_mm, 0.5);
}

TEST(Imu, StaticNoiselessReadsGravity) {
  SimConfig c;
  c.amplitude_scale = 0.0;
  c.noiseless = true;
  c.random_intrinsics = false;
  c.duration = 1.0;
  const SimData d = simulate(c);
  const Vec3 expected = -d.truth.pose(0.0).R().transpose() * d.truth.calib.g_W();
  for (const ImuSample& m : d.set.imu) {
    EXPECT_EQ(m.omega.norm(), 0.0);
    EXPECT_LT((m.accel - expected).norm(), 1e-12);
  }
}

TEST(Imu, WhiteNoiseAndBiasWalkLevels) {
  SimConfig c;
  c.seed = 5;
  const SimData noisy = simulate(c);
  c.noiseless = true;
  const SimData clean = simulate(c);
  ASSERT_EQ(noisy.set.imu.size(), clean.set.imu.size());
  std::array<std::vector<double>, 3> gw, aw, gb, ab;
  const auto& bias = noisy.truth.bias;
  for (std::size_t k = 0; k < noisy.set.imu.size(); ++k) {
    const Vec3 g = noisy.set.imu[k].omega - clean.set.imu[k].omega - bias[k].omega;
    const Vec3 a = noisy.set.imu[k].accel - clean.set.imu[k].accel - bias[k].accel;
    for (int i = 0; i < 3; ++i) {
      gw[i].push_back(g[i]);
      aw[i].push_back(a[i]);
      if (k > 0) {
        gb[i].push_back(bias[k].omega[i] - bias[k - 1].omega[i]);
        ab[i].push_back(bias[k].accel[i] - bias[k - 1].accel[i]);
      }
    }
  }
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(axis_std(gw[i]), c.noise.gyr_nd, 0.1 * c.noise.gyr_nd);
    EXPECT_NEAR(axis_std(aw[i]), c.noise.acc_nd, 0.1 * c.noise.acc_nd);
    EXPECT_NEAR(axis_std(gb[i]), c.noise.gyr_rw, 0.1 * c.noise.gyr_rw);
    EXPECT_NEAR(axis_std(ab[i]), c.noise.acc_rw, 0.1 * c.noise.acc_rw);
  }
}

TEST(Dut, NoiselessIsRigidTimeShiftedCopy) {
  SimConfig c;
  c.noiseless = true;
  c.duration = 10.0;
  const SimData d = simulate(c);
  const auto truth = truth_dut_trajectory(d.truth, c.dut_rate);
  ASSERT_EQ(truth.size(), d.set.dut.size());
  const MetricReport r = compute_metrics(d.set.dut, truth, MetricMode::kAligned);
  EXPECT_LT(r.are_deg, 1e-9);
  EXPECT_LT(r.ate_mm, 1e-6);
  const Pose X = r.alignment * d.truth.T_H_W;
  EXPECT_LT(so3_log(X.rotation).norm(), 1e-9);
  EXPECT_LT(X.p().norm(), 1e-9);
}

TEST(Dut, DriftMagnitudeAndWindowRatio) {
  double drift_r2 = 0.0, drift_p2 = 0.0, win_r2 = 0.0, win_p2 = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SimConfig c;
    c.seed = seed;
    c.calib_seed = seed;
    const SimData d = simulate(c);
    const auto truth = truth_dut_trajectory(d.truth, c.dut_rate);
    const MetricReport r = compute_metrics(d.set.dut, truth, MetricMode::kAligned);
    EXPECT_GE(r.are_deg, 0.3) << seed;
    EXPECT_LE(r.are_deg, 3.0) << seed;
    EXPECT_GE(r.ate_mm, 3.0) << seed;
    EXPECT_LE(r.ate_mm, 30.0) << seed;
    const auto& e = d.set.dut;
    auto rel_err = [&](std::size_t i, std::size_t j) {
      return pose_inverse(pose_inverse(truth[i].pose) * truth[j].pose) *
             (pose_inverse(e[i].pose) * e[j].pose);
    };
    const Pose end = rel_err(0, e.size() - 1);
    drift_r2 += so3_log(end.rotation).squaredNorm();
    drift_p2 += end.p().squaredNorm();
    const std::size_t w = std::size_t(0.5 * c.dut_rate);
    for (std::size_t k = 0; k + w < e.size(); k += w) {
      const Pose err = rel_err(k, k + w);
      win_r2 += so3_log(err.rotation).squaredNorm() / double(e.size() / w);
      win_p2 += err.p().squaredNorm() / double(e.size() / w);
    }
  }
  EXPECT_GT(std::sqrt(drift_r2 / win_r2), 10.0);
  EXPECT_GT(std::sqrt(drift_p2 / win_p2), 10.0);
}

TEST(Export, RoundTripAndDeterministicBytes) {
  SimConfig c;
  c.duration = 4.0;
  c.seed = 9;
  const SimData d = simulate(c);
  const auto a = temp_dir("a"), b = temp_dir("b");
  export_set(d, a.string());
  export_set(simulate(c), b.string());
  for (const char* f : {"mocap.txt", "imu.csv", "dut.txt", "truth_body.txt", "truth_dut.txt",
                        "truth_calib.txt"}) {
    ASSERT_TRUE(std::filesystem::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const auto mocap = parse_pose_file((a / "mocap.txt").string());
  ASSERT_EQ(mocap.size(), d.set.mocap.size());
  for (std::size_t i = 0; i < mocap.size(); ++i) {
    EXPECT_EQ(mocap[i].tau, d.set.mocap[i].tau);
    EXPECT_EQ(mocap[i].pose.p(), d.set.mocap[i].pose.p());
    EXPECT_LT(so3_log_mat(mocap[i].pose.R().transpose() * d.set.mocap[i].pose.R()).norm(), 1e-14);
  }
  const auto imu = parse_imu_file((a / "imu.csv").string());
  ASSERT_EQ(imu.size(), d.set.imu.size());
  for (std::size_t i = 0; i < imu.size(); ++i) {
    EXPECT_EQ(imu[i].omega, d.set.imu[i].omega);
    EXPECT_EQ(imu[i].accel, d.set.imu[i].accel);
  }
  const auto truth = parse_pose_file((a / "truth_dut.txt").string());
  EXPECT_EQ(truth.size(), d.set.dut.size());
  const Config calib = Config::load((a / "truth_calib.txt").string());
  EXPECT_EQ(calib.get_double("off_D.c0", 99.0), d.truth.clock_D.c0);
  EXPECT_THROW(export_set(d, "/proc/hpgt_forbidden"), Error);
}

TEST(Config, RejectsBadValues) {
  Config cfg;
  cfg.set("simulate.duration", "-1");
  EXPECT_EQ(testing::code_of([&] { SimConfig::from_config(cfg); }), ErrorCode::kBadConfig);
}

}  // namespace
}  // namespace hpgt
