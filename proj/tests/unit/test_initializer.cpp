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

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>

#include "hpgt/initializer.hpp"
#include "hpgt/metrics.hpp"
#include "hpgt/simulator.hpp"
#include "hpgt/solver.hpp"
#include "test_util.hpp"

namespace hpgt {
namespace {

using testing::code_of;
using testing::random_rotation;
using testing::random_vec;

Vec3 omega_at(double t) {
  const double k = 2.0 * M_PI;
  return Vec3(0.6 * std::sin(k * 0.5 * t), 0.4 * std::sin(k * 0.8 * t + 0.3),
              0.9 * std::cos(k * 0.3 * t));
}

Vec3 accel_at(double t) {
  const double k = 2.0 * M_PI;
  return Vec3(0.5 * std::sin(k * 0.7 * t), 9.81 + 0.3 * std::cos(k * 0.9 * t),
              0.4 * std::sin(k * 1.2 * t));
}

std::vector<ImuSample> sample(double t0, double t1, double rate) {
  std::vector<ImuSample> out;
  const int n = int(std::lround((t1 - t0) * rate));
  for (int k = 0; k <= n; ++k) {
    const double t = t0 + (t1 - t0) * k / n;
    out.push_back({t, omega_at(t), accel_at(t)});
  }
  return out;
}

// Classical RK4 on (R, beta, alpha) with the analytic signals.
Preintegration rk4(double t0, double t1, int steps) {
  struct Y {
    Mat3 R;
    Vec3 v, p;
  };
  auto f = [](double t, const Y& y) {
    return Y{y.R * skew(omega_at(t)), y.R * accel_at(t), y.v};
  };
  auto add = [](const Y& y, const Y& d, double h) {
    return Y{y.R + h * d.R, y.v + h * d.v, y.p + h * d.p};
  };
  Y y{Mat3::Identity(), Vec3::Zero(), Vec3::Zero()};
  const double h = (t1 - t0) / steps;
  for (int i = 0; i < steps; ++i) {
    const double t = t0 + i * h;
    const Y k1 = f(t, y);
    const Y k2 = f(t + h / 2, add(y, k1, h / 2));
    const Y k3 = f(t + h / 2, add(y, k2, h / 2));
    const Y k4 = f(t + h, add(y, k3, h));
    y.R += h / 6 * (k1.R + 2 * k2.R + 2 * k3.R + k4.R);
    y.v += h / 6 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
    y.p += h / 6 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p);
  }
  Preintegration out;
  out.dR = orthonormalize(y.R);
  out.beta = y.v;
  out.alpha = y.p;
  out.dt = t1 - t0;
  return out;
}

double rot_dist(const Mat3& a, const Mat3& b) { return so3_log_mat(a.transpose() * b).norm(); }

TEST(Preintegrate, StaticAnalytic) {
  std::vector<ImuSample> imu;
  for (int k = 0; k <= 250; ++k) imu.push_back({k / 500.0, Vec3::Zero(), Vec3(0, 0, 9.81)});
  const Preintegration p = preintegrate(imu);
  EXPECT_NEAR(p.dt, 0.5, 1e-12);
  EXPECT_LT((p.dR - Mat3::Identity()).norm(), 1e-14);
  EXPECT_LT((p.beta - Vec3(0, 0, 9.81 * 0.5)).norm(), 1e-12);
  EXPECT_LT((p.alpha - Vec3(0, 0, 0.5 * 9.81 * 0.25)).norm(), 1e-12);
}

TEST(Preintegrate, BiasIsSubtracted) {
  const Vec3 bw(0.01, -0.02, 0.005), ba(0.1, 0.2, -0.3);
  std::vector<ImuSample> imu;
  for (int k = 0; k <= 100; ++k) imu.push_back({k / 500.0, bw, Vec3(0, 0, 9.81) + ba});
  const Preintegration p = preintegrate(imu, bw, ba);
  EXPECT_LT((p.dR - Mat3::Identity()).norm(), 1e-14);
  EXPECT_LT((p.beta - Vec3(0, 0, 9.81 * 0.2)).norm(), 1e-12);
}

TEST(Preintegrate, ConstantRateAboutZ) {
  const Vec3 w(0.0, 0.0, 1.3);
  std::vector<ImuSample> imu;
  for (int k = 0; k <= 500; ++k) imu.push_back({k / 500.0, w, Vec3::Zero()});
  const Preintegration p = preintegrate(imu);
  EXPECT_LT(rot_dist(p.dR, so3_exp_mat(w * 1.0)), 1e-8);
  EXPECT_LT(p.alpha.norm() + p.beta.norm(), 1e-14);
}

TEST(Preintegrate, MatchesDenseIntegration) {
  for (const double t0 : {0.0, 0.7, 2.3}) {
    const double t1 = t0 + 0.25;
    const Preintegration p = preintegrate(sample(t0, t1, 500.0));
    const Preintegration ref = rk4(t0, t1, 1250);
    EXPECT_LT(rot_dist(p.dR, ref.dR), 1e-6) << t0;
    EXPECT_LT((p.beta - ref.beta).norm(), 1e-6) << t0;
    EXPECT_LT((p.alpha - ref.alpha).norm(), 1e-6) << t0;
  }
}

TEST(Preintegrate, ReproducesSimulatorRelativeMotion) {
  SimConfig c;
  c.noiseless = true;
  c.random_intrinsics = false;
  c.duration = 10.0;
  const SimData d = simulate(c);
  std::vector<ImuSample> imu = d.set.imu;
  for (std::size_t i = 0; i < imu.size(); ++i) {
    imu[i].omega -= d.truth.bias[i].omega;
    imu[i].accel -= d.truth.bias[i].accel;
  }
  const Pose& T_B_I = d.truth.calib.T_B_I;
  const Vec3 g_W = d.truth.calib.g_W();
  auto imu_state = [&](double t) {
    const TruthSample s = d.truth.motion(t);
    const Mat3 R = s.R * T_B_I.R();
    const Vec3 v = s.v + s.R * s.w.cross(T_B_I.p());
    const Vec3 p = s.p + s.R * T_B_I.p();
    return std::tuple{R, v, p};
  };
  for (double t0 = 1.0; t0 < 9.0; t0 += 0.7) {
    const double t1 = t0 + 0.5;
    const Preintegration pi = preintegrate(imu_slice(imu, t0, t1));
    const auto [R0, v0, p0] = imu_state(t0);
    const auto [R1, v1, p1] = imu_state(t1);
    EXPECT_LT(rot_dist(pi.dR, R0.transpose() * R1), 1e-5);
    EXPECT_LT((pi.beta - R0.transpose() * (v1 - v0 - g_W * 0.5)).norm(), 1e-5);
    EXPECT_LT((pi.alpha - R0.transpose() * (p1 - p0 - v0 * 0.5 - 0.125 * g_W)).norm(), 1e-5);
  }
}

TEST(PreintegrateProperty, Concatenation) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const double t0 = std::uniform_real_distribution<double>(0.0, 10.0)(rng);
    const auto all = sample(t0, t0 + 0.5, 500.0);
    const std::size_t j = std::uniform_int_distribution<std::size_t>(1, all.size() - 2)(rng);
    const std::vector<ImuSample> a(all.begin(), all.begin() + long(j) + 1);
    const std::vector<ImuSample> b(all.begin() + long(j), all.end());
    const Preintegration pik = preintegrate(all);
    const Preintegration pij = preintegrate(a);
    const Preintegration pjk = preintegrate(b);
    EXPECT_LT(rot_dist(pik.dR, pij.dR * pjk.dR), 1e-8);
    EXPECT_LT((pik.beta - (pij.beta + pij.dR * pjk.beta)).norm(), 1e-8);
    EXPECT_LT((pik.alpha - (pij.alpha + pij.beta * pjk.dt + pij.dR * pjk.alpha)).norm(), 1e-8);
    EXPECT_NEAR(pik.dt, pij.dt + pjk.dt, 1e-12);
  }
}

TEST(Preintegrate, Errors) {
  EXPECT_EQ(code_of([] { preintegrate({ImuSample{}}); }), ErrorCode::kTooFewSamples);
  EXPECT_EQ(code_of([] { preintegrate({ImuSample{0.1}, ImuSample{0.1}}); }),
            ErrorCode::kNonMonotonicTime);
}

TEST(ImuSlice, InterpolatesEndpoints) {
  const auto imu = sample(0.0, 1.0, 500.0);
  const auto s = imu_slice(imu, 0.1003, 0.2001);
  ASSERT_GE(s.size(), 3u);
  EXPECT_DOUBLE_EQ(s.front().tau, 0.1003);
  EXPECT_DOUBLE_EQ(s.back().tau, 0.2001);
  EXPECT_LT((s.front().omega - omega_at(0.1003)).norm(), 1e-5);
  EXPECT_TRUE(imu_slice(imu, -0.1, 0.5).empty());
  EXPECT_TRUE(imu_slice(imu, 0.5, 0.4).empty());
}

std::vector<std::pair<Rotation, Rotation>> handeye_pairs(std::mt19937_64& rng, const Mat3& X,
                                                        int n) {
  std::vector<std::pair<Rotation, Rotation>> out;
  for (int i = 0; i < n; ++i) {
    const Mat3 A = so3_exp_mat(random_vec(rng, 1.0));
    out.emplace_back(Rotation::unchecked(A), Rotation::unchecked(X.transpose() * A * X));
  }
  return out;
}

TEST(HandEyeRotation, RecoversSyntheticExtrinsic) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat3 X = random_rotation(rng);
    const HandEyeRotation h = init_rotation_handeye(handeye_pairs(rng, X, 2 + trial % 10));
    EXPECT_LT(rot_dist(h.q.matrix(), X), 1e-8);
    EXPECT_GE(h.q.w, 0.0);
    EXPECT_GT(h.gap, 10.0);
  }
}

TEST(HandEyeRotation, CommonAxisIsDegenerate) {
  std::mt19937_64 rng(6);
  const Mat3 X = random_rotation(rng);
  const Vec3 axis = random_vec(rng).normalized();
  std::vector<std::pair<Rotation, Rotation>> pairs;
  for (double th : {0.3, -0.7, 1.1, 0.2}) {
    const Mat3 A = so3_exp_mat(th * axis);
    pairs.emplace_back(Rotation::unchecked(A), Rotation::unchecked(X.transpose() * A * X));
  }
  EXPECT_EQ(code_of([&] { init_rotation_handeye(pairs); }), ErrorCode::kDegenerateMotion);
  const std::vector<std::pair<Rotation, Rotation>> ident(5);
  EXPECT_EQ(code_of([&] { init_rotation_handeye(ident); }), ErrorCode::kDegenerateMotion);
  EXPECT_EQ(code_of([&] { init_rotation_handeye({}); }), ErrorCode::kDegenerateMotion);
}

TEST(HandEyeRotationProperty, InvariantToPairOrder) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat3 X = random_rotation(rng);
    auto pairs = handeye_pairs(rng, X, 8);
    // mild inconsistency so the answer is not exact
    for (auto& p : pairs) p.second = Rotation::unchecked(p.second.matrix() * so3_exp_mat(random_vec(rng, 1e-3)));
    const HandEyeRotation a = init_rotation_handeye(pairs);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    const HandEyeRotation b = init_rotation_handeye(pairs);
    EXPECT_LT(rot_dist(a.q.matrix(), b.q.matrix()), 1e-10);
    EXPECT_NEAR(a.q.w, b.q.w, 1e-10);
  }
}

// Exact keyframes and preintegrations of the IMU frame following traj, with
// the MoCap marker at T_M_I^-1.
struct TranslationFixture {
  std::vector<KeyframeMocap> kf;
  std::vector<Preintegration> pre;
};

TranslationFixture exact_translation_input(const AnalyticTrajectory& traj, const Pose& T_M_I,
                                           const Vec3& g_P, int n, double dt) {
  TranslationFixture f;
  const Pose T_I_M = pose_inverse(T_M_I);
  for (int k = 0; k <= n; ++k) {
    const double t = 0.3 + k * dt;
    const TruthSample s = traj.eval(t);
    f.kf.push_back({t, Pose(Rotation::unchecked(s.R), s.p) * T_I_M});
    if (k == 0) continue;
    const TruthSample a = traj.eval(t - dt);
    Preintegration p;
    p.dt = dt;
    p.dR = a.R.transpose() * s.R;
    p.beta = a.R.transpose() * (s.v - a.v - g_P * dt);
    p.alpha = a.R.transpose() * (s.p - a.p - a.v * dt - 0.5 * g_P * dt * dt);
    f.pre.push_back(p);
  }
  return f;
}

AnalyticTrajectory test_trajectory(std::uint64_t seed) {
  SimConfig c;
  c.seed = seed;
  return make_truth(c).traj;
}

TEST(TranslationGravity, ExactOnAnalyticInput) {
  std::mt19937_64 rng(8);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Pose T_M_I(Rotation::unchecked(random_rotation(rng)), random_vec(rng, 0.2));
    const Vec3 g_P = random_rotation(rng) * Vec3(0, 0, -9.81);
    const auto f = exact_translation_input(test_trajectory(seed), T_M_I, g_P, 40, 0.25);
    const TranslationGravity tg = init_translation_gravity(f.kf, f.pre, T_M_I.rotation);
    EXPECT_LT((tg.p_M_I - T_M_I.p()).norm(), 1e-8);
    EXPECT_LT((tg.g_P - g_P).norm(), 1e-8);
    EXPECT_LT(tg.residual_rms, 1e-6);
    ASSERT_EQ(tg.velocities.size(), f.kf.size());
  }
}

TEST(TranslationGravity, NoiselessSimulatorWithKnownRotation) {
  SimConfig c;
  c.noiseless = true;
  c.random_intrinsics = false;
  c.duration = 20.0;
  c.seed = 4;
  const SimData d = simulate(c);
  const CalibState& cal = d.truth.calib;
  const Pose T_M_I = pose_inverse(cal.T_B_M) * cal.T_B_I;
  const Pose T_P_W = pose_inverse(cal.T_W_P);
  std::vector<KeyframeMocap> kf;
  std::vector<Preintegration> pre;
  // bias-free IMU samples on the global clock
  std::vector<ImuSample> imu = d.set.imu;
  for (std::size_t i = 0; i < imu.size(); ++i) {
    imu[i].omega -= d.truth.bias[i].omega;
    imu[i].accel -= d.truth.bias[i].accel;
  }
  for (double t = 1.0; t < 19.0; t += 0.25) {
    kf.push_back({t, T_P_W * d.truth.pose(t) * cal.T_B_M});
    if (kf.size() > 1) pre.push_back(preintegrate(imu_slice(imu, t - 0.25, t)));
  }
  const TranslationGravity tg = init_translation_gravity(kf, pre, T_M_I.rotation);
  EXPECT_LT((tg.p_M_I - T_M_I.p()).norm(), 1e-4);
  EXPECT_LT((tg.g_P - T_P_W.R() * cal.g_W()).norm(), 1e-3);
}

TEST(TranslationGravity, StaticWithKnownZeroLever) {
  std::vector<KeyframeMocap> kf;
  std::vector<Preintegration> pre;
  std::vector<ImuSample> imu;
  for (int k = 0; k <= 125; ++k) imu.push_back({k / 500.0, Vec3::Zero(), Vec3(0, 0, 9.81)});
  for (int k = 0; k < 6; ++k) {
    kf.push_back({0.25 * k, Pose::identity()});
    if (k > 0) pre.push_back(preintegrate(imu));
  }
  const TranslationGravity tg = init_translation_gravity(kf, pre, Rotation(), Vec3::Zero());
  EXPECT_LT((tg.g_P - Vec3(0, 0, -9.81)).norm(), 1e-9);
  for (const Vec3& v : tg.velocities) EXPECT_LT(v.norm(), 1e-9);
  // the lever arm itself is unobservable without rotation
  EXPECT_EQ(code_of([&] { init_translation_gravity(kf, pre, Rotation()); }),
            ErrorCode::kRankDeficient);
}

TEST(TranslationGravity, ConstantVelocityIsRankDeficient) {
  AnalyticTrajectory still;
  still.base = Vec3(0.1, 0.2, 1.0);
  const Vec3 g_P(0, 0, -9.81);
  auto f = exact_translation_input(still, Pose::identity(), g_P, 10, 0.25);
  const Vec3 vel(0.3, -0.1, 0.05);
  for (std::size_t k = 0; k < f.kf.size(); ++k) f.kf[k].T_P_M.translation += vel * f.kf[k].t;
  for (Preintegration& p : f.pre) p.alpha += vel * p.dt;
  EXPECT_EQ(code_of([&] { init_translation_gravity(f.kf, f.pre, Rotation()); }),
            ErrorCode::kRankDeficient);
  f.kf.resize(3);
  f.pre.resize(2);
  EXPECT_EQ(code_of([&] { init_translation_gravity(f.kf, f.pre, Rotation()); }),
            ErrorCode::kRankDeficient);
}

std::vector<StampedPose> sampled(const AnalyticTrajectory& traj, double rate, double t0,
                                 double t1, const Pose& left, const Pose& right,
                                 double shift = 0.0) {
  std::vector<StampedPose> out;
  for (int k = 0; t0 + k / rate <= t1; ++k) {
    const double t = t0 + k / rate;
    out.push_back({t - shift, left * traj.pose(t) * right});
  }
  return out;
}

TEST(PoseToPose, ExactOnSyntheticPair) {
  std::mt19937_64 rng(9);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const AnalyticTrajectory traj = test_trajectory(seed);
    const Pose X(Rotation::unchecked(random_rotation(rng)), random_vec(rng, 0.2));
    const Pose H(Rotation::unchecked(random_rotation(rng)), random_vec(rng, 3.0));
    const double shift = 0.37;
    const auto a = sampled(traj, 90.0, 0.0, 30.0, Pose::identity(), Pose::identity());
    const auto b = sampled(traj, 90.0, 0.0, 30.0, H, X, shift);
    const Pose Xh = init_handeye_pose_to_pose(a, b, shift);
    EXPECT_LT(rot_dist(Xh.R(), X.R()), 1e-8);
    EXPECT_LT((Xh.p() - X.p()).norm(), 1e-8);
  }
}

TEST(PoseToPose, IdenticalTrajectoriesGiveIdentity) {
  const auto a = sampled(test_trajectory(2), 90.0, 0.0, 20.0, Pose::identity(), Pose::identity());
  const Pose Xh = init_handeye_pose_to_pose(a, a, 0.0);
  EXPECT_LT(rot_dist(Xh.R(), Mat3::Identity()), 1e-9);
  EXPECT_LT(Xh.p().norm(), 1e-9);
}

TEST(PoseToPose, PlanarYawOnlyIsDegenerate) {
  AnalyticTrajectory planar;
  planar.angles[2] = {{0.8, 0.3, 0.0}, {0.2, 0.9, 1.0}};
  planar.position[0] = {{0.5, 0.2, 0.0}};
  planar.position[1] = {{0.4, 0.25, 0.5}};
  const auto a = sampled(planar, 90.0, 0.0, 30.0, Pose::identity(), Pose::identity());
  const Pose X(so3_exp(Vec3(0, 0, 0.4)), Vec3(0.1, 0.05, 0.2));
  const auto b = sampled(planar, 90.0, 0.0, 30.0, Pose::identity(), X);
  EXPECT_EQ(code_of([&] { init_handeye_pose_to_pose(a, b, 0.0); }), ErrorCode::kDegenerateMotion);
}

TEST(Initialize, SimulatorSeedNearTruth) {
  for (std::uint64_t seed : {1u, 2u}) {
    SimConfig c;
    c.seed = seed;
    c.calib_seed = seed + 10;
    const SimData d = simulate(c);
    const EstimatorOptions opt;
    const InitResult init = initialize(d.set, opt);
    const double true_off_M = d.truth.clock_M.offset(d.truth.t_begin);
    EXPECT_NEAR(init.off_M, true_off_M, 5e-3);
    EXPECT_NEAR(init.g_P.norm(), d.truth.calib.g, 0.05);

    const State s = seed_state(d.set, init, opt);
    for (const auto& cp : s.splines.off_M.inner().cps()) EXPECT_EQ(cp[0], init.off_M);
    for (const auto& cp : s.splines.off_D.inner().cps()) EXPECT_EQ(cp[0], init.off_D);
    for (const auto& cp : s.splines.off_I.inner().cps()) EXPECT_EQ(cp[0], 0.0);
    EXPECT_EQ(s.calib.M_w, Mat3::Identity());
    EXPECT_EQ(s.calib.R_w_a, Mat3::Identity());

    const auto traj = extract_trajectory(s, 90.0, OutputFrame::kDut);
    const MetricReport m = compute_metrics(traj.poses, truth_dut_trajectory(d.truth, 90.0),
                                           MetricMode::kDirect);
    EXPECT_LT(m.are_deg, 0.5) << "seed " << seed;
    EXPECT_LT(m.ate_mm, 5.0) << "seed " << seed;
    EXPECT_GT(m.n_matched, 5000u);
  }
}

TEST(Initialize, StaticDataIsDegenerate) {
  SimConfig c;
  c.duration = 10.0;
  c.amplitude_scale = 0.0;
  const SimData d = simulate(c);
  const auto code = code_of([&] { initialize(d.set, EstimatorOptions{}); });
  ASSERT_TRUE(code.has_value());
  EXPECT_TRUE(*code == ErrorCode::kFlatSignal || *code == ErrorCode::kDegenerateMotion);
}

}  // namespace
}  // namespace hpgt
