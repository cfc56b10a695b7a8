// Copyright 2026 The dvlcal Authors
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

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace dvlcal {

/// Flat "key = value" text file. '#' starts a comment, keys may carry dotted
/// section prefixes ("dcnet.epochs"). Duplicate keys are errors.
class KeyValueFile {
 public:
  KeyValueFile() = default;

  /// Throws ConfigError naming the offending line.
  static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueFile load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& fallback) const;

  /// Throws ConfigError listing every key not in \p allowed.
  void reject_unknown(const std::set<std::string>& allowed) const;

  const std::map<std::string, std::string>& entries() const noexcept { return values_; }
  std::string to_string() const;
  const std::string& origin() const noexcept { return origin_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

/// "%.17g" rendering; parses back to the identical double.
std::string format_double(double value);

}  // namespace dvlcal
