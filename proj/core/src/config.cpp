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

#include "hpgt/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hpgt/errors.hpp"

namespace hpgt {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Config Config::parse(std::string_view text) {
  Config cfg;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ParseFailure(ErrorCode::kBadConfig, line_no, "expected key=value");
    }
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ParseFailure(ErrorCode::kBadConfig, line_no, "empty key");
    cfg.values_[key] = trim(body.substr(eq + 1));
  }
  return cfg;
}

double Config::get_double(const std::string& key, double def) const {
  auto it = values_.find(key);
  if (it == values_.end()) return def;
  double v = 0.0;
  const std::string& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kBadConfig, key + " is not a number: " + s);
  }
  return v;
}

int Config::get_int(const std::string& key, int def) const {
  auto it = values_.find(key);
  if (it == values_.end()) return def;
  int v = 0;
  const std::string& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kBadConfig, key + " is not an integer: " + s);
  }
  return v;
}

bool Config::get_bool(const std::string& key, bool def) const {
  auto it = values_.find(key);
  if (it == values_.end()) return def;
  const std::string& s = it->second;
  if (s == "1" || s == "true" || s == "on" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "off" || s == "no") return false;
  throw Error(ErrorCode::kBadConfig, key + " is not a boolean: " + s);
}

std::string Config::get_string(const std::string& key, const std::string& def) const {
  auto it = values_.find(key);
  return it == values_.end() ? def : it->second;
}

NoiseSpec noise_from_config(const Config& cfg) {
  NoiseSpec n;
  n.mocap_sigma_p = cfg.get_double("noise.mocap_sigma_p", n.mocap_sigma_p);
  n.mocap_sigma_r = cfg.get_double("noise.mocap_sigma_r_deg", n.mocap_sigma_r / kDeg) * kDeg;
  n.acc_nd = cfg.get_double("noise.acc_nd", n.acc_nd);
  n.acc_rw = cfg.get_double("noise.acc_rw", n.acc_rw);
  n.gyr_nd = cfg.get_double("noise.gyr_nd_deg", n.gyr_nd / kDeg) * kDeg;
  n.gyr_rw = cfg.get_double("noise.gyr_rw_deg", n.gyr_rw / kDeg) * kDeg;
  n.clock_drift = cfg.get_double("noise.clock_drift_ms_per_min", n.clock_drift * 6e4) / 6e4;
  if (!n.valid()) throw Error(ErrorCode::kBadConfig, "noise parameters must be positive");
  return n;
}

}  // namespace hpgt
