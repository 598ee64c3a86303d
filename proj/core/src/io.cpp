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

#include "hpgt/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "hpgt/errors.hpp"

namespace hpgt {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Splits on any of `seps` and parses each field as a double.
bool parse_numbers(std::string_view line, std::string_view seps, std::vector<double>& out) {
  out.clear();
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t next = line.find_first_of(seps, pos);
    if (next == std::string_view::npos) next = line.size();
    std::string_view tok = trim(line.substr(pos, next - pos));
    if (!tok.empty()) {
      double v = 0.0;
      if (tok.front() == '+') tok.remove_prefix(1);
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) return false;
      out.push_back(v);
    } else if (seps.find(',') != std::string_view::npos && next < line.size()) {
      return false;  // empty CSV field
    }
    pos = next + 1;
  }
  return true;
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
    if (!line.empty() && line.front() != '#') fn(line_no, line);
    pos = end + 1;
  }
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<StampedPose> parse_pose_text(const std::string& text) {
  std::vector<StampedPose> out;
  std::vector<double> f;
  for_each_line(text, [&](std::size_t ln, std::string_view line) {
    if (!parse_numbers(line, " \t", f) || f.size() != 8) {
      throw ParseFailure(ErrorCode::kParseError, ln, "expected `t px py pz qx qy qz qw`");
    }
    Vec4 q(f[7], f[4], f[5], f[6]);
    const double n = q.norm();
    if (std::abs(n - 1.0) > 1e-3) {
      throw ParseFailure(ErrorCode::kBadQuaternion, ln, "quaternion norm " + std::to_string(n));
    }
    if (!out.empty() && !(f[0] > out.back().tau)) {
      throw ParseFailure(ErrorCode::kNonMonotonicTime, ln, "timestamp not increasing");
    }
    StampedPose s;
    s.tau = f[0];
    s.pose = Pose(UnitQuaternion::from_vec(q).rotation(), Vec3(f[1], f[2], f[3]));
    out.push_back(s);
  });
  return out;
}

std::vector<StampedPose> parse_pose_file(const std::string& path) {
  return parse_pose_text(read_file(path));
}

std::vector<ImuSample> parse_imu_text(const std::string& text) {
  std::vector<ImuSample> out;
  std::vector<double> f;
  bool first = true;
  for_each_line(text, [&](std::size_t ln, std::string_view line) {
    const bool header = first && std::isalpha(static_cast<unsigned char>(line.front()));
    first = false;
    if (header) return;
    if (!parse_numbers(line, ",", f) || f.size() != 7) {
      throw ParseFailure(ErrorCode::kParseError, ln, "expected `t,wx,wy,wz,ax,ay,az`");
    }
    if (!out.empty() && !(f[0] > out.back().tau)) {
      throw ParseFailure(ErrorCode::kNonMonotonicTime, ln, "timestamp not increasing");
    }
    out.push_back({f[0], Vec3(f[1], f[2], f[3]), Vec3(f[4], f[5], f[6])});
  });
  return out;
}

std::vector<ImuSample> parse_imu_file(const std::string& path) {
  return parse_imu_text(read_file(path));
}

void write_trajectory(const std::string& path, const std::vector<StampedPose>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << "# t px py pz qx qy qz qw\n";
  for (const StampedPose& s : samples) {
    Eigen::Quaterniond q(s.pose.R());
    q.normalize();
    if (q.w() < 0) q.coeffs() *= -1.0;
    out << fmt17(s.tau) << ' ' << fmt17(s.pose.p().x()) << ' ' << fmt17(s.pose.p().y()) << ' '
        << fmt17(s.pose.p().z()) << ' ' << fmt17(q.x()) << ' ' << fmt17(q.y()) << ' '
        << fmt17(q.z()) << ' ' << fmt17(q.w()) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed " + path);
}

void write_imu_file(const std::string& path, const std::vector<ImuSample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << "# t,wx,wy,wz,ax,ay,az\n";
  for (const ImuSample& s : samples) {
    out << fmt17(s.tau);
    for (int i = 0; i < 3; ++i) out << ',' << fmt17(s.omega[i]);
    for (int i = 0; i < 3; ++i) out << ',' << fmt17(s.accel[i]);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed " + path);
}

std::vector<double> stamps_of(const std::vector<StampedPose>& s) {
  std::vector<double> out;
  out.reserve(s.size());
  for (const auto& x : s) out.push_back(x.tau);
  return out;
}

std::vector<double> stamps_of(const std::vector<ImuSample>& s) {
  std::vector<double> out;
  out.reserve(s.size());
  for (const auto& x : s) out.push_back(x.tau);
  return out;
}

StreamReport validate_stream(const std::vector<double>& stamps, const std::string& name,
                             std::vector<std::string>* warnings) {
  if (stamps.size() < 2) {
    throw Error(ErrorCode::kEmptyStream, name + " has fewer than 2 samples");
  }
  StreamReport r;
  r.count = stamps.size();
  r.t_begin = stamps.front();
  r.t_end = stamps.back();
  std::vector<double> dt(stamps.size() - 1);
  for (std::size_t i = 0; i + 1 < stamps.size(); ++i) dt[i] = stamps[i + 1] - stamps[i];
  std::vector<double> sorted = dt;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double med = sorted[sorted.size() / 2];
  r.rate_hz = med > 0 ? 1.0 / med : 0.0;
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < dt.size(); ++i) {
    if (dt[i] > 3.0 * med) {
      r.gaps.push_back({stamps[i], stamps[i + 1]});
      continue;
    }
    sum += dt[i];
    sq += dt[i] * dt[i];
    ++n;
  }
  if (n > 1 && med > 0) {
    const double mean = sum / n;
    r.jitter = std::sqrt(std::max(0.0, sq / n - mean * mean)) / med;
  }
  if (warnings) {
    if (r.jitter > 0.05) {
      warnings->push_back(name + ": sample spacing jitter " + std::to_string(100 * r.jitter) + "%");
    }
    for (const Gap& g : r.gaps) {
      warnings->push_back(name + ": gap from " + fmt17(g.begin) + " to " + fmt17(g.end));
    }
  }
  return r;
}

ValidationReport validate(const MeasurementSet& set) {
  ValidationReport r;
  r.mocap = validate_stream(stamps_of(set.mocap), "mocap", &r.warnings);
  r.imu = validate_stream(stamps_of(set.imu), "imu", &r.warnings);
  r.dut = validate_stream(stamps_of(set.dut), "dut", &r.warnings);
  r.overlap_begin = std::max({r.mocap.t_begin, r.imu.t_begin, r.dut.t_begin});
  r.overlap_end = std::min({r.mocap.t_end, r.imu.t_end, r.dut.t_end});
  if (r.overlap_end <= r.overlap_begin) {
    r.warnings.push_back("streams do not overlap in raw timestamps");
  }
  return r;
}

double rebase_timestamps(MeasurementSet& set) {
  constexpr double kDay = 86400.0;
  double first = std::numeric_limits<double>::infinity();
  double last = -first;
  auto scan = [&](double t0, double t1) {
    first = std::min(first, t0);
    last = std::max(last, t1);
  };
  if (!set.mocap.empty()) scan(set.mocap.front().tau, set.mocap.back().tau);
  if (!set.imu.empty()) scan(set.imu.front().tau, set.imu.back().tau);
  if (!set.dut.empty()) scan(set.dut.front().tau, set.dut.back().tau);
  if (!(last > kDay)) return 0.0;
  for (auto& s : set.mocap) s.tau -= first;
  for (auto& s : set.imu) s.tau -= first;
  for (auto& s : set.dut) s.tau -= first;
  return first;
}

}  // namespace hpgt
