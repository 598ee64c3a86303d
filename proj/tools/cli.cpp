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

#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hpgt/config.hpp"
#include "hpgt/errors.hpp"
#include "hpgt/io.hpp"
#include "hpgt/metrics.hpp"
#include "hpgt/pipeline.hpp"
#include "hpgt/simulator.hpp"
#include "hpgt/time_sync.hpp"

namespace hpgt::cli {
namespace {

namespace fs = std::filesystem;

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::kIoError:
      return kIo;
    case ErrorCode::kDegenerateMotion:
    case ErrorCode::kFlatSignal:
    case ErrorCode::kRankDeficient:
    case ErrorCode::kDegenerate:
    case ErrorCode::kDegenerateScrew:
      return kDegenerate;
    case ErrorCode::kNumericalFailure:
      return kNumerical;
    case ErrorCode::kNoMatches:
      return kNoMatches;
    case ErrorCode::kParseError:
    case ErrorCode::kNonMonotonicTime:
    case ErrorCode::kBadQuaternion:
    case ErrorCode::kEmptyStream:
    case ErrorCode::kBadConfig:
    case ErrorCode::kTooFewSamples:
    case ErrorCode::kNoOverlap:
      return kUsage;
    default:
      return kFailure;
  }
}

int report(const Error& e, std::ostream& err) {
  const int code = exit_code(e.code());
  err << "error: ";
  if (code == kDegenerate) err << "degenerate motion: ";
  err << e.what() << '\n';
  return code;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void result(std::ostream& out, const std::string& key, const std::string& value) {
  out << "RESULT " << key << '=' << value << '\n';
}

void result(std::ostream& out, const std::string& key, double value) {
  result(out, key, num(value));
}

void result_lines(std::ostream& out, const std::string& prefix, const std::string& text) {
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) out << "RESULT " << prefix << line << '\n';
  }
}

Config load_config(const std::string& path) {
  if (path.empty()) return Config{};
  try {
    return Config::load(path);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIoError) throw Error(ErrorCode::kBadConfig, e.what());
    throw;
  }
}

template <typename F>
auto read_input(const std::string& path, F&& parse) -> decltype(parse(path)) {
  if (!fs::exists(path)) throw Error(ErrorCode::kParseError, "cannot open " + path);
  try {
    return parse(path);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIoError) throw Error(ErrorCode::kParseError, e.what());
    throw;
  }
}

struct StreamPaths {
  std::string data, mocap, imu, dut;

  void resolve() {
    if (!data.empty()) {
      if (mocap.empty()) mocap = (fs::path(data) / "mocap.txt").string();
      if (imu.empty()) imu = (fs::path(data) / "imu.csv").string();
      if (dut.empty()) dut = (fs::path(data) / "dut.txt").string();
    }
    if (mocap.empty() || imu.empty() || dut.empty()) {
      throw Error(ErrorCode::kBadConfig, "need --data or all of --mocap, --imu, --dut");
    }
  }
};

MeasurementSet load_set(StreamPaths paths, const Config& cfg) {
  paths.resolve();
  MeasurementSet set;
  set.mocap = read_input(paths.mocap, [](const std::string& p) { return parse_pose_file(p); });
  set.imu = read_input(paths.imu, [](const std::string& p) { return parse_imu_file(p); });
  set.dut = read_input(paths.dut, [](const std::string& p) { return parse_pose_file(p); });
  set.noise = noise_from_config(cfg);
  return set;
}

void add_stream_flags(CLI::App* cmd, StreamPaths& p) {
  cmd->add_option("--data", p.data, "Dataset directory with mocap.txt, imu.csv, dut.txt");
  cmd->add_option("--mocap", p.mocap, "MoCap poses, TUM format");
  cmd->add_option("--imu", p.imu, "IMU samples, CSV t,wx,wy,wz,ax,ay,az");
  cmd->add_option("--dut", p.dut, "DUT poses, TUM format");
}

struct SimulateArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed, calib_seed;
  std::optional<double> rate;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  Config cfg = load_config(a.config);
  if (a.seed) cfg.set("simulate.seed", std::to_string(*a.seed));
  if (a.calib_seed) cfg.set("simulate.calib_seed", std::to_string(*a.calib_seed));
  const SimConfig sc = SimConfig::from_config(cfg);
  const double rate = a.rate.value_or(sc.dut_rate);
  if (!(rate > 0.0)) throw Error(ErrorCode::kBadConfig, "--rate must be positive");
  const SimData d = simulate(sc);
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + a.out + ": " + ec.message());
  export_set(d, a.out, rate);
  result(out, "out", a.out);
  result(out, "seed", std::to_string(sc.seed));
  result(out, "calib_seed", std::to_string(sc.calib_seed));
  result(out, "duration_s", sc.duration);
  result(out, "mocap_samples", std::to_string(d.set.mocap.size()));
  result(out, "imu_samples", std::to_string(d.set.imu.size()));
  result(out, "dut_samples", std::to_string(d.set.dut.size()));
  result_lines(out, "truth.", calib_text(d.truth.calib, d.truth.clock_M, d.truth.clock_D));
  return kOk;
}

struct EstimateArgs {
  StreamPaths paths;
  std::string config, out, report;
  std::optional<double> rate;
  bool fd_check = false;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  const Config cfg = load_config(a.config);
  EstimatorOptions opt = EstimatorOptions::from_config(cfg);
  if (a.rate) {
    if (!(*a.rate > 0.0)) throw Error(ErrorCode::kBadConfig, "--rate must be positive");
    opt.output_rate = *a.rate;
  }
  if (a.fd_check) opt.fd_check = true;
  MeasurementSet set = load_set(a.paths, cfg);
  const double origin = rebase_timestamps(set);
  EstimateResult r = estimate(set, opt);
  std::vector<StampedPose> traj = r.trajectory.poses;
  for (StampedPose& p : traj) p.tau += origin;
  write_trajectory(a.out, traj);
  const std::string report_path = a.report.empty() ? a.out + ".report.txt" : a.report;
  {
    std::ofstream f(report_path);
    if (!f) throw Error(ErrorCode::kIoError, "cannot write " + report_path);
    f << report_text(r);
    if (!f) throw Error(ErrorCode::kIoError, "cannot write " + report_path);
  }
  for (const std::string& w : r.solved.report.warnings) err << "warning: " << w << '\n';
  if (r.fd_checked && r.fd.max_rel_error > 1e-5) {
    err << "warning: finite-difference mismatch " << num(r.fd.max_rel_error) << " in " << r.fd.worst
        << '\n';
  }
  const SolveReport& s = r.solved.report;
  const CalibState& c = r.solved.state.calib;
  const Pose T_M_D = c.T_M_D();
  const UnitQuaternion q = UnitQuaternion::from_rotation(T_M_D.rotation).canonical();
  result(out, "trajectory", a.out);
  result(out, "report", report_path);
  result(out, "output_samples", std::to_string(traj.size()));
  result(out, "output_rate_hz", opt.output_rate);
  result(out, "iterations", std::to_string(s.iterations));
  result(out, "termination", s.termination);
  result(out, "initial_cost", s.initial_cost);
  result(out, "final_cost", s.final_cost);
  result(out, "T_M_D", num(q.w) + "," + num(q.x) + "," + num(q.y) + "," + num(q.z) + "," +
                           num(T_M_D.p()[0]) + "," + num(T_M_D.p()[1]) + "," + num(T_M_D.p()[2]));
  const TimeOffsetSpline& offD = r.solved.state.splines.off_D;
  const TimeOffsetSpline& offM = r.solved.state.splines.off_M;
  result(out, "off_D_begin_s", offD.offset(offD.inner().t_begin()));
  result(out, "off_D_end_s", offD.offset(offD.inner().t_end()));
  result(out, "off_M_begin_s", offM.offset(offM.inner().t_begin()));
  result(out, "off_M_end_s", offM.offset(offM.inner().t_end()));
  result(out, "gravity", c.g);
  result(out, "rms.mocap", s.rms.mocap);
  result(out, "rms.gyro", s.rms.gyro);
  result(out, "rms.accel", s.rms.accel);
  result(out, "rms.dut", s.rms.dut);
  result(out, "dut_pairs", std::to_string(r.n_pairs));
  if (r.fd_checked) result(out, "fd_max_rel_error", r.fd.max_rel_error);
  result(out, "warnings", std::to_string(s.warnings.size()));
  return kOk;
}

struct EvaluateArgs {
  std::string est, ref, mode = "direct", out;
  int stride = 1;
  double max_dt = 2e-3;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto est = read_input(a.est, [](const std::string& p) { return parse_pose_file(p); });
  const auto ref = read_input(a.ref, [](const std::string& p) { return parse_pose_file(p); });
  const MetricMode mode = a.mode == "aligned" ? MetricMode::kAligned : MetricMode::kDirect;
  const MetricReport m = compute_metrics(est, ref, mode, a.stride, a.max_dt);
  const std::string text = to_text(m);
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    if (!f) throw Error(ErrorCode::kIoError, "cannot write " + a.out);
    f << "mode=" << a.mode << '\n' << text;
    if (!f) throw Error(ErrorCode::kIoError, "cannot write " + a.out);
  }
  result(out, "mode", a.mode);
  result_lines(out, "", text);
  return kOk;
}

void stream_lines(std::ostream& out, const std::string& name, const StreamReport& s) {
  result(out, name + ".count", std::to_string(s.count));
  result(out, name + ".t_begin", s.t_begin);
  result(out, name + ".t_end", s.t_end);
  result(out, name + ".rate_hz", s.rate_hz);
  result(out, name + ".jitter", s.jitter);
  result(out, name + ".gaps", std::to_string(s.gaps.size()));
  for (std::size_t i = 0; i < s.gaps.size(); ++i) {
    result(out, name + ".gap." + std::to_string(i), num(s.gaps[i].begin) + ":" + num(s.gaps[i].end));
  }
}

struct InspectArgs {
  StreamPaths paths;
  std::string config;
};

int cmd_inspect(const InspectArgs& a, std::ostream& out, std::ostream& err) {
  const Config cfg = load_config(a.config);
  const EstimatorOptions opt = EstimatorOptions::from_config(cfg);
  MeasurementSet set = load_set(a.paths, cfg);
  rebase_timestamps(set);
  ValidationReport v = validate(set);
  std::vector<std::string> warnings = v.warnings;
  stream_lines(out, "mocap", v.mocap);
  stream_lines(out, "imu", v.imu);
  stream_lines(out, "dut", v.dut);
  result(out, "overlap_begin", v.overlap_begin);
  result(out, "overlap_end", v.overlap_end);

  const RateSignal imu_sig = imu_rate_signal(set.imu, opt.sync_rate);
  for (const auto& [name, poses] : {std::pair{"off_M", &set.mocap}, std::pair{"off_D", &set.dut}}) {
    try {
      const double off =
          cross_correlate_offset(imu_sig, angular_rate_signal(*poses, opt.sync_rate), opt.max_lag);
      result(out, std::string("sync.") + name, off);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kFlatSignal) throw;
      result(out, std::string("sync.") + name, "nan");
      warnings.push_back(std::string("FlatSignal: ") + e.what());
    }
  }

  double gyro_sq = 0.0;
  Vec3 acc_mean = Vec3::Zero();
  for (const ImuSample& s : set.imu) {
    gyro_sq += s.omega.squaredNorm();
    acc_mean += s.accel;
  }
  const double n = double(set.imu.size());
  acc_mean /= n;
  double acc_var = 0.0;
  for (const ImuSample& s : set.imu) acc_var += (s.accel - acc_mean).squaredNorm();
  Vec3 lo = set.mocap.front().pose.p(), hi = lo;
  double max_angle = 0.0;
  for (const StampedPose& m : set.mocap) {
    lo = lo.cwiseMin(m.pose.p());
    hi = hi.cwiseMax(m.pose.p());
    max_angle = std::max(max_angle, so3_log_mat(set.mocap.front().pose.R().transpose() * m.pose.R()).norm());
  }
  result(out, "excitation.gyro_rms_deg_s", std::sqrt(gyro_sq / n) / kDeg);
  result(out, "excitation.accel_std", std::sqrt(acc_var / n));
  result(out, "excitation.mocap_extent_m", (hi - lo).norm());
  result(out, "excitation.mocap_max_angle_deg", max_angle / kDeg);
  for (const std::string& w : warnings) err << "warning: " << w << '\n';
  result(out, "warnings", std::to_string(warnings.size()));
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ground-truth trajectory estimation from MoCap, IMU and DUT streams", "hpgt"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hpgt 0.1.0");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Write a simulated dataset and its truth");
  s->add_option("--config", sim.config, "key=value config file")->check(CLI::ExistingFile);
  s->add_option("--seed", sim.seed, "Trajectory and noise seed");
  s->add_option("--calib-seed", sim.calib_seed, "Calibration and clock seed");
  s->add_option("--out", sim.out, "Output directory")->required();
  s->add_option("--rate", sim.rate, "Rate of the exported DUT truth, Hz");

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "Calibrate and write the DUT-frame trajectory");
  add_stream_flags(e, est.paths);
  e->add_option("--config", est.config, "key=value config file")->check(CLI::ExistingFile);
  e->add_option("--out", est.out, "Output trajectory, TUM format")->required();
  e->add_option("--report", est.report, "Solve report (default <out>.report.txt)");
  e->add_option("--rate", est.rate, "Output rate, Hz");
  e->add_flag("--fd-check", est.fd_check, "Verify Jacobians by finite differences");

  EvaluateArgs ev;
  auto* v = app.add_subcommand("evaluate", "ARE/ATE/RRE/RTE of a trajectory against a reference");
  v->add_option("est", ev.est, "Estimated trajectory")->required();
  v->add_option("ref", ev.ref, "Reference trajectory")->required();
  v->add_option("--mode", ev.mode, "direct or aligned")
      ->check(CLI::IsMember({"direct", "aligned"}));
  v->add_option("--stride", ev.stride, "Frame stride of the relative errors")
      ->check(CLI::PositiveNumber);
  v->add_option("--max-dt", ev.max_dt, "Association tolerance, s")->check(CLI::PositiveNumber);
  v->add_option("--out", ev.out, "Also write the report here");

  InspectArgs ins;
  auto* i = app.add_subcommand("inspect", "Validate a dataset and preview synchronization");
  add_stream_flags(i, ins.paths);
  i->add_option("data_dir", ins.paths.data, "Dataset directory");
  i->add_option("--config", ins.config, "key=value config file")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*s) return cmd_simulate(sim, out);
    if (*e) return cmd_estimate(est, out, err);
    if (*v) return cmd_evaluate(ev, out);
    if (*i) return cmd_inspect(ins, out, err);
  } catch (const Error& ex) {
    return report(ex, err);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace hpgt::cli
