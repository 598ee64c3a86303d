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

#pragma once

#include <map>
#include <string>
#include <string_view>

#include "hpgt/measurements.hpp"

namespace hpgt {

/// Flat key=value configuration. Keys are dotted (`noise.acc_nd`), `#`
/// starts a comment. Malformed lines raise BadConfig with the line number.
class Config {
 public:
  static Config load(const std::string& path);
  static Config parse(std::string_view text);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  double get_double(const std::string& key, double def) const;
  int get_int(const std::string& key, int def) const;
  bool get_bool(const std::string& key, bool def) const;
  std::string get_string(const std::string& key, const std::string& def) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// `noise.*` keys; angles in degrees on disk, radians in memory.
NoiseSpec noise_from_config(const Config& cfg);

}  // namespace hpgt
