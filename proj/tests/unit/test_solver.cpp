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

#include <cmath>
#include <limits>
#include <random>

#include "hpgt/initializer.hpp"
#include "hpgt/metrics.hpp"
#include "hpgt/problem.hpp"
#include "hpgt/simulator.hpp"
#include "hpgt/solver.hpp"
#include "test_util.hpp"

namespace hpgt {
namespace {

using testing::code_of;
using testing::random_vec;

double rot_dist(const Mat3& a, const Mat3& b) { return so3_log_mat(a.transpose() * b).norm(); }

SimData noiseless_spline_set(std::uint64_t seed, double duration) {
  SimConfig c;
  c.noiseless = true;
  c.spline_knot_dt = 0.05;
  c.duration = duration;
  c.seed = seed;
  c.calib_seed = seed + 20;
  return simulate(c);
}

// Worst error of the calibration quantities that do not depend on the gauge.
struct CalibError {
  double rot = 0.0, trans = 0.0, intr = 0.0, g = 0.0;
};

CalibError calib_error(const CalibState& est, const CalibState& truth) {
  CalibError e;
  for (const auto& [a, b] :
       {std::pair{pose_inverse(est.T_B_I) * est.T_B_M, pose_inverse(truth.T_B_I) * truth.T_B_M},
        std::pair{pose_inverse(est.T_B_I) * est.T_B_D, pose_inverse(truth.T_B_I) * truth.T_B_D}}) {
    e.rot = std::max(e.rot, rot_dist(a.R(), b.R()));
    e.trans = std::max(e.trans, (a.p() - b.p()).norm());
  }
  e.intr = std::max({(est.M_w - truth.M_w).cwiseAbs().maxCoeff(),
                     (est.M_a - truth.M_a).cwiseAbs().maxCoeff(),
                     rot_dist(est.R_w_a, truth.R_w_a)});
  e.g = std::abs(est.g - truth.g);
  return e;
}

TEST(BuildProblem, CountsForDefaultSequence) {
  SimConfig c;
  const SimData d = simulate(c);
  const EstimatorOptions opt;
  const State s = seed_state(d.set, initialize(d.set, opt), opt);
  const Problem p = build_problem(d.set, s, opt);
  EXPECT_EQ(p.n_mocap + p.dropped_mocap, d.set.mocap.size());
  EXPECT_EQ(p.n_imu + p.dropped_imu, d.set.imu.size());
  EXPECT_GT(p.n_mocap, 17500u);
  EXPECT_LE(p.n_mocap, 18001u);
  EXPECT_GT(p.n_imu, 29500u);
  EXPECT_LE(p.n_imu, 30001u);
  // every pair closes on a threshold, so at least one per 0.5 s of usable data
  EXPECT_GE(p.pairs.size(), 115u);
  for (const DutPair& pr : p.pairs) {
    EXPECT_LE(p.data.dut[std::size_t(pr.j)].tau - p.data.dut[std::size_t(pr.i)].tau,
              opt.pairs.duration + 1.5 / c.dut_rate);
  }
  EXPECT_EQ(p.n_bias, std::size_t(2 * (s.splines.bias_w.grid().count - 1)));
  std::size_t dut_blocks = 0;
  for (const Block& b : p.blocks) dut_blocks += b.kind == BlockKind::kDut;
  EXPECT_EQ(dut_blocks, p.pairs.size());
  EXPECT_EQ(p.blocks.size(), p.n_mocap + p.n_imu + p.pairs.size() + p.n_bias);
}

TEST(BuildProblem, EmptySetIsRejected) {
  const SimData d = noiseless_spline_set(1, 6.0);
  const State s = truth_state(d);
  EXPECT_EQ(code_of([&] { build_problem(MeasurementSet{}, s, EstimatorOptions{}); }),
            ErrorCode::kEmptyProblem);
  MeasurementSet late = d.set;
  for (auto& m : late.mocap) m.tau += 1000.0;
  for (auto& m : late.imu) m.tau += 1000.0;
  for (auto& m : late.dut) m.tau += 1000.0;
  const auto code = code_of([&] { build_problem(late, s, EstimatorOptions{}); });
  ASSERT_TRUE(code.has_value());
  EXPECT_TRUE(*code == ErrorCode::kDomainMismatch || *code == ErrorCode::kEmptyProblem);
}

TEST(Gauge, FixedParametersHaveNoColumns) {
  const SimData d = noiseless_spline_set(2, 6.0);
  const State s = truth_state(d);
  for (const bool free : {false, true}) {
    const ParamLayout L = make_layout(s, free, false, true);
    const int bias = 3 * (L.n_bias_w + L.n_bias_a);
    const int offsets = L.n_off_M + L.n_off_D;
    EXPECT_EQ(L.knots, s.splines.rot.grid().count);
    EXPECT_EQ(L.total(), 6 * L.knots + bias + offsets + 6 + 6 + 2 + 1 + (free ? 15 : 0));
    EXPECT_EQ(L.rwa < 0, !free);
    EXPECT_EQ(L.mw < 0, !free);

    std::mt19937_64 rng(3);
    VecX dx(L.total());
    for (int i = 0; i < dx.size(); ++i) dx[i] = std::normal_distribution<double>(0.0, 1e-2)(rng);
    const State r = retract(s, L, dx);
    EXPECT_EQ(r.calib.T_B_I.R(), s.calib.T_B_I.R());
    EXPECT_EQ(r.calib.T_B_I.p(), s.calib.T_B_I.p());
    EXPECT_EQ(r.calib.T_W_P.p(), s.calib.T_W_P.p());
    for (std::size_t k = 0; k < s.splines.off_I.inner().cps().size(); ++k) {
      EXPECT_EQ(r.splines.off_I.inner().cps()[k], s.splines.off_I.inner().cps()[k]);
    }
    if (!free) {
      EXPECT_EQ(r.calib.M_w, s.calib.M_w);
      EXPECT_EQ(r.calib.M_a, s.calib.M_a);
      EXPECT_EQ(r.calib.R_w_a, s.calib.R_w_a);
    }
    // the yaw component of Log(R_W_P) never moves
    EXPECT_NEAR(so3_log_mat(r.calib.T_W_P.R())[2], so3_log_mat(s.calib.T_W_P.R())[2], 1e-12);
    EXPECT_GT(rot_dist(r.calib.T_W_P.R(), s.calib.T_W_P.R()), 1e-4);
    EXPECT_LE(std::abs(r.calib.g - s.calib.g), 0.1);
  }
  const ParamLayout nt = make_layout(s, false, true, false);
  EXPECT_LT(nt.tilt, 0);
  EXPECT_EQ(nt.n_off_M, 1);
}

TEST(Solve, NoiselessRecoversCalibration) {
  const SimData d = noiseless_spline_set(3, 30.0);
  EstimatorOptions opt;
  const State seed = seed_state(d.set, initialize(d.set, opt), opt);
  Problem p = build_problem(d.set, seed, opt);
  const SolveResult r = solve(p, seed);
  EXPECT_LT(r.report.final_cost, 1e-10);
  EXPECT_LE(r.report.final_cost, r.report.initial_cost);
  EXPECT_EQ(r.report.stages, 2);
  const CalibError e = calib_error(r.state.calib, d.truth.calib);
  EXPECT_LT(e.rot, 1e-6);
  EXPECT_LT(e.trans, 1e-6);
  EXPECT_LT(e.intr, 1e-6);
  EXPECT_LT(e.g, 1e-6);
  for (double tau = d.set.dut.front().tau + 1.0; tau < d.set.dut.back().tau - 1.0; tau += 0.37) {
    EXPECT_NEAR(r.state.splines.off_D.offset(tau), d.truth.clock_D.offset(tau), 1e-7);
  }
  EXPECT_TRUE(r.report.warnings.empty());
}

TEST(Solve, NoiselessSingleStageConvergesQuickly) {
  const SimData d = noiseless_spline_set(4, 30.0);
  EstimatorOptions opt;
  opt.two_stage = false;
  const State seed = seed_state(d.set, initialize(d.set, opt), opt);
  Problem p = build_problem(d.set, seed, opt);
  const SolveResult r = solve(p, seed);
  EXPECT_LT(r.report.final_cost, 1e-10);
  EXPECT_LE(r.report.iterations, 5);
}

TEST(Solve, OptimalStateIsFixedPoint) {
  const SimData d = noiseless_spline_set(5, 12.0);
  const State truth = truth_state(d);
  Problem p = build_problem(d.set, truth, EstimatorOptions{});
  const SolveResult r = solve(p, truth);
  EXPECT_LE(r.report.iterations, 2);
  EXPECT_LT(r.report.final_cost, 1e-14);
  EXPECT_LT(calib_error(r.state.calib, truth.calib).trans, 1e-9);
}

TEST(Solve, NonFiniteMeasurementNamesBlock) {
  const SimData d = noiseless_spline_set(6, 6.0);
  MeasurementSet set = d.set;
  set.imu[set.imu.size() / 2].accel.x() = std::numeric_limits<double>::quiet_NaN();
  const State truth = truth_state(d);
  Problem p = build_problem(set, truth, EstimatorOptions{});
  try {
    solve(p, truth);
    FAIL() << "expected NumericalFailure";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumericalFailure);
    EXPECT_NE(std::string(e.what()).find("imu["), std::string::npos);
  }
}

TEST(Solve, FiniteDifferenceCheckAtSeed) {
  SimConfig c;
  c.duration = 10.0;
  const SimData d = simulate(c);
  EstimatorOptions opt;
  const State seed = seed_state(d.set, initialize(d.set, opt), opt);
  const Problem p = build_problem(d.set, seed, opt);
  const FdCheckReport fd = fd_check(p, seed, true, 10);
  EXPECT_GT(fd.blocks, 30u);
  EXPECT_LT(fd.max_rel_error, 1e-5) << fd.worst;
}

TEST(SolveProperty, GaugeFixedOutputIsSeedIndependent) {
  SimConfig c;
  c.duration = 20.0;
  c.seed = 7;
  const SimData d = simulate(c);
  EstimatorOptions opt;
  opt.rel_decrease_tol = 1e-14;
  opt.grad_tol = 1e-12;
  const State seed = seed_state(d.set, initialize(d.set, opt), opt);
  std::vector<Trajectory> outs;
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 2; ++trial) {
    State s = seed;
    if (trial > 0) {
      s.calib.T_B_M = s.calib.T_B_M * Pose(so3_exp(random_vec(rng, 2e-3)), random_vec(rng, 2e-3));
      s.calib.T_B_D = s.calib.T_B_D * Pose(so3_exp(random_vec(rng, 2e-3)), random_vec(rng, 2e-3));
      for (auto& cp : s.splines.off_D.inner().cps()) cp[0] += 2e-4;
    }
    Problem p = build_problem(d.set, s, opt);
    outs.push_back(extract_trajectory(solve(p, s).state, 90.0, OutputFrame::kDut));
  }
  ASSERT_EQ(outs[0].poses.size(), outs[1].poses.size());
  double worst_r = 0.0, worst_p = 0.0;
  for (std::size_t k = 0; k < outs[0].poses.size(); ++k) {
    worst_r = std::max(worst_r, rot_dist(outs[0].poses[k].pose.R(), outs[1].poses[k].pose.R()));
    worst_p = std::max(worst_p, (outs[0].poses[k].pose.p() - outs[1].poses[k].pose.p()).norm());
  }
  EXPECT_LT(worst_r, 1e-6);
  EXPECT_LT(worst_p, 1e-6);
}

// Identity extrinsics, zero offsets and a gravity-aligned P.
State raw_spline_state(const SimData& d) {
  State s = truth_state(d);
  s.calib = CalibState{};
  for (auto* off : {&s.splines.off_M, &s.splines.off_I, &s.splines.off_D}) {
    for (auto& cp : off->inner().cps()) cp[0] = 0.0;
  }
  return s;
}

TEST(Extract, UniformNinetyHertzGrid) {
  const SimData d = noiseless_spline_set(8, 60.0);
  const State s = truth_state(d);
  const Trajectory t = extract_trajectory(s, 90.0, OutputFrame::kDut);
  EXPECT_GT(t.poses.size(), 5300u);
  EXPECT_LT(t.poses.size(), 5500u);
  for (std::size_t k = 1; k < t.poses.size(); ++k) {
    EXPECT_NEAR(t.poses[k].tau - t.poses[k - 1].tau, 1.0 / 90.0, 1e-9);
  }
  const MetricReport m =
      compute_metrics(t.poses, truth_dut_trajectory(d.truth, 90.0), MetricMode::kDirect);
  EXPECT_LT(m.are_deg, 1e-7);
  EXPECT_LT(m.ate_mm, 1e-6);
  EXPECT_EQ(code_of([&] { extract_trajectory(s, 0.0, OutputFrame::kDut); }),
            ErrorCode::kBadConfig);
}

TEST(Extract, RawSplineSamplesAndRefit) {
  const SimData d = noiseless_spline_set(9, 10.0);
  const State s = raw_spline_state(d);
  const Trajectory t = extract_trajectory(s, 90.0, OutputFrame::kDut);
  ASSERT_GT(t.poses.size(), 100u);
  std::vector<double> ts;
  std::vector<Mat3> Rs;
  std::vector<Vec3> ps;
  for (const StampedPose& sp : t.poses) {
    EXPECT_LT(rot_dist(sp.pose.R(), s.splines.rot.eval(sp.tau).matrix()), 1e-12);
    EXPECT_LT((sp.pose.p() - s.splines.trans.eval(sp.tau)).norm(), 1e-12);
    ts.push_back(sp.tau);
    Rs.push_back(sp.pose.R());
    ps.push_back(sp.pose.p());
  }
  // refit on the knots fully covered by the samples
  const KnotGrid g = KnotGrid::anchored_inside(ts.front(), ts.back(), s.splines.rot.grid().dt,
                                               So3Spline::kOrder);
  const So3Spline rf = fit_spline(ts, Rs, g);
  const Spline3 pf = fit_spline<3>(ts, ps, g, 4);
  const int shift = int(std::lround((g.t0 - s.splines.rot.grid().t0) / g.dt));
  double er = 0.0, ep = 0.0;
  for (int k = 0; k < g.count; ++k) {
    er = std::max(er, rot_dist(rf.cps()[std::size_t(k)], s.splines.rot.cps()[std::size_t(k + shift)]));
    ep = std::max(ep, (pf.cps()[std::size_t(k)] - s.splines.trans.cps()[std::size_t(k + shift)]).norm());
  }
  EXPECT_LT(er, 1e-8);
  EXPECT_LT(ep, 1e-8);
}

TEST(TotalCost, ClassRmsAtTruthIsZero) {
  const SimData d = noiseless_spline_set(10, 6.0);
  const State s = truth_state(d);
  const Problem p = build_problem(d.set, s, EstimatorOptions{});
  ClassRms rms;
  EXPECT_LT(total_cost(p, s, &rms), 1e-14);
  EXPECT_LT(std::max({rms.mocap, rms.gyro, rms.accel, rms.dut, rms.bias}), 1e-8);
}

}  // namespace
}  // namespace hpgt
