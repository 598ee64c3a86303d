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

#include "hpgt/pipeline.hpp"

#include <cstdio>
#include <sstream>

#include "hpgt/errors.hpp"

namespace hpgt {

namespace {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(name) + ": " + e.what());
  }
}

}  // namespace

EstimateResult estimate(const MeasurementSet& set, const EstimatorOptions& opt) {
  EstimateResult r;
  r.init = stage("init", [&] { return initialize(set, opt); });
  r.seed = stage("init", [&] { return seed_state(set, r.init, opt); });
  Problem p = stage("build", [&] { return build_problem(set, r.seed, opt); });
  r.n_mocap = p.n_mocap;
  r.n_imu = p.n_imu;
  r.n_pairs = p.pairs.size();
  r.dropped_mocap = p.dropped_mocap;
  r.dropped_imu = p.dropped_imu;
  r.dropped_dut = p.dropped_dut;
  if (opt.fd_check) {
    r.fd = stage("fd_check", [&] { return fd_check(p, r.seed, true); });
    r.fd_checked = true;
  }
  r.solved = stage("solve", [&] { return solve(p, r.seed); });
  r.trajectory = stage("extract", [&] {
    return extract_trajectory(r.solved.state, opt.output_rate, OutputFrame::kDut);
  });
  return r;
}

std::string report_text(const EstimateResult& r) {
  std::ostringstream os;
  char buf[64];
  auto num = [&](const std::string& key, double v) {
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    os << key << '=' << buf << '\n';
  };
  const CalibState& c = r.solved.state.calib;
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
  pose("T_B_M", c.T_B_M);
  pose("T_B_D", c.T_B_D);
  pose("T_M_D", c.T_M_D());
  pose("T_W_P", c.T_W_P);
  num("g", c.g);
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      num("M_w." + std::to_string(i) + std::to_string(j), c.M_w(i, j));
      num("M_a." + std::to_string(i) + std::to_string(j), c.M_a(i, j));
    }
  }
  const Vec3 rwa = so3_log_mat(c.R_w_a);
  num("R_w_a.rx", rwa[0]);
  num("R_w_a.ry", rwa[1]);
  num("R_w_a.rz", rwa[2]);
  const SplineBundle& sp = r.solved.state.splines;
  auto offsets = [&](const std::string& name, const TimeOffsetSpline& off) {
    const auto& g = off.inner().grid();
    for (int k = 0; k < g.count; ++k) {
      num(name + ".knot" + std::to_string(k) + ".tau", g.t0 + k * g.dt);
      num(name + ".knot" + std::to_string(k) + ".value", off.inner().cps()[std::size_t(k)][0]);
    }
  };
  num("init.off_M", r.init.off_M);
  num("init.off_D", r.init.off_D);
  num("init.gravity", r.init.g_P.norm());
  num("init.handeye_gap", r.init.handeye_gap);
  offsets("off_M", sp.off_M);
  offsets("off_D", sp.off_D);
  const SolveReport& s = r.solved.report;
  os << "iterations=" << s.iterations << '\n';
  os << "termination=" << s.termination << '\n';
  num("initial_cost", s.initial_cost);
  num("final_cost", s.final_cost);
  num("rms.mocap", s.rms.mocap);
  num("rms.gyro", s.rms.gyro);
  num("rms.accel", s.rms.accel);
  num("rms.dut", s.rms.dut);
  num("rms.bias", s.rms.bias);
  os << "blocks.mocap=" << r.n_mocap << '\n';
  os << "blocks.imu=" << r.n_imu << '\n';
  os << "blocks.dut_pairs=" << r.n_pairs << '\n';
  os << "dropped.mocap=" << r.dropped_mocap << '\n';
  os << "dropped.imu=" << r.dropped_imu << '\n';
  os << "dropped.dut=" << r.dropped_dut << '\n';
  os << "degenerate_pairs=" << s.degenerate_pairs << '\n';
  os << "output.samples=" << r.trajectory.poses.size() << '\n';
  os << "output.trimmed=" << r.trajectory.trimmed << '\n';
  if (r.fd_checked) {
    num("fd_check.max_rel_error", r.fd.max_rel_error);
    os << "fd_check.worst=" << r.fd.worst << '\n';
  }
  for (const std::string& w : s.warnings) os << "warning=" << w << '\n';
  return os.str();
}

}  // namespace hpgt
