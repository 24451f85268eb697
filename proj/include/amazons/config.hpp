// Copyright 2026 The Amazons Hybrid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Plain "key = value" configuration files with # comments.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace amazons {

class KeyValueConfig {
 public:
  /// Throws IoError, ParseError.
  static KeyValueConfig load(const std::filesystem::path& path);
  static KeyValueConfig parse(std::string_view text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

  /// Typed reads; a missing key gives the fallback, a malformed one ParseError.
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Later values win.
  void merge(const KeyValueConfig& other);
  const std::map<std::string, std::string>& values() const { return values_; }

  /// Sorted by key, one "key = value" per line.
  std::string dump() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace amazons
